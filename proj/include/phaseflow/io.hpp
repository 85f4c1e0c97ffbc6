#pragma once

// File formats: plain-text GridFile ("rows cols" header + row-major floats),
// key = value manifests, 16-bit grayscale PNG export, content hashing.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "phaseflow/grid.hpp"

namespace phaseflow {

struct io_error : std::runtime_error {
  explicit io_error(const std::string& m) : std::runtime_error(m) {}
};

// ---- GridFile ---------------------------------------------------------------

inline ScalarField read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  std::string line;
  int lineno = 0;
  long long rows = -1, cols = -1;
  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    if (rows < 0) {
      if (!(ss >> rows >> cols) || rows <= 0 || cols <= 0)
        throw io_error(path + ":" + std::to_string(lineno) + ": bad header (want 'rows cols')");
      vals.reserve(static_cast<size_t>(rows) * cols);
      std::string extra;
      if (ss >> extra)
        throw io_error(path + ":" + std::to_string(lineno) + ": trailing tokens after header");
      continue;
    }
    std::string tok;
    while (ss >> tok) {
      // from_chars rather than stod: locale-free and accepts subnormals,
      // so everything write_grid emits reads back.
      double d = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), d);
      if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(d))
        throw io_error(path + ":" + std::to_string(lineno) + ": bad value '" + tok + "'");
      vals.push_back(d);
    }
  }
  if (rows < 0) throw io_error(path + ": empty file");
  if (static_cast<long long>(vals.size()) != rows * cols)
    throw io_error(path + ": expected " + std::to_string(rows * cols) + " values, found " +
                   std::to_string(vals.size()));
  ScalarField f(static_cast<int>(rows), static_cast<int>(cols));
  f.v = std::move(vals);
  return f;
}

// 17 significant digits: doubles round-trip exactly through the text form.
inline void write_grid(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << f.rows << " " << f.cols << "\n";
  char buf[40];
  for (int i = 0; i < f.rows; ++i) {
    for (int j = 0; j < f.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", f(i, j));
      out << buf << (j + 1 < f.cols ? " " : "\n");
    }
  }
  if (!out) throw io_error(path + ": write failed");
}

// ---- Manifest ---------------------------------------------------------------

// Ordered key = value lines; '#' starts a comment. The same format serves as
// the CLI config file, so a run's manifest can be fed back via --config.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> comments;  // written before the entries

  void set(const std::string& key, const std::string& value) {
    for (auto& e : entries)
      if (e.first == key) {
        e.second = value;
        return;
      }
    entries.emplace_back(key, value);
  }
  void comment(const std::string& text) { comments.push_back(text); }
  const std::string* get(const std::string& key) const {
    for (const auto& e : entries)
      if (e.first == key) return &e.second;
    return nullptr;
  }
};

inline void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  for (const auto& c : m.comments) out << "# " << c << "\n";
  for (const auto& [k, v] : m.entries) out << k << " = " << v << "\n";
  if (!out) throw io_error(path + ": write failed");
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = line;
    size_t a = t.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    if (t[a] == '#') {
      m.comments.push_back(t.substr(std::min(a + 2, t.size())));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw io_error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    m.entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return m;
}

// ---- PNG export (visualization only) ---------------------------------------

// 16-bit grayscale; linear map of [lo, hi] (data range by default) to
// [0, 65535]. log_scale compresses with log(1 + x) first, the usual display
// transform for diffraction intensities.
inline void write_png16(const std::string& path, const ScalarField& f, bool log_scale = false) {
  ScalarField g = f;
  if (log_scale)
    for (auto& a : g.v) a = std::log1p(std::max(a, 0.0));
  double lo = g.v[0], hi = g.v[0];
  for (double a : g.v) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  double span = hi > lo ? hi - lo : 1.0;

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw io_error(path + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw io_error(path + ": png write failed");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, f.cols, f.rows, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(f.cols) * 2);
  for (int i = 0; i < f.rows; ++i) {
    for (int j = 0; j < f.cols; ++j) {
      double t = (g(i, j) - lo) / span;
      auto u = static_cast<uint16_t>(std::lround(t * 65535.0));
      row[2 * j] = static_cast<uint8_t>(u >> 8);  // network byte order
      row[2 * j + 1] = static_cast<uint8_t>(u & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---- Hashing ----------------------------------------------------------------

inline std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace phaseflow

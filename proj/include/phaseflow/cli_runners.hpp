#pragma once

// Implementations behind the CLI subcommands: each runner consumes a plain
// options struct, writes its output directory, and records a manifest whose
// key = value lines can be fed back through --config to reproduce the run
// byte-for-byte. Wall-clock timing goes to a separate timing.txt because it
// is the one output that legitimately differs between identical runs.

#include <chrono>
#include <filesystem>
#include <regex>

#include "phaseflow/phaseflow.hpp"

namespace phaseflow::cli {

inline constexpr const char* kToolVersion = "phaseflow 1.0.0";

namespace fs = std::filesystem;

inline std::string fmt(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << text;
  if (!out) throw io_error(path + ": write failed");
}

inline void write_timing(const std::string& dir, double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "wall_seconds = %.3f\n", seconds);
  write_text(dir + "/timing.txt", buf);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Load a GridFile as diffraction amplitudes; negative values are an input
// format problem, not a numerical one.
inline DiffractionData load_data(const std::string& path) {
  ScalarField f = read_grid(path);
  try {
    return DiffractionData(std::move(f));
  } catch (const std::invalid_argument& e) {
    throw io_error(path + ": " + e.what());
  }
}

// ---- simulate ----------------------------------------------------------------

struct SimulateOpts {
  std::string target, out;
  double max_intensity = 100.0;
  bool poisson = false;
  bool quantize = false;
  double gaussian_std = 0.0;
  double target_snr = std::numeric_limits<double>::quiet_NaN();  // NaN: off
  uint64_t seed = 0;
  bool png = true;
};

inline int run_simulate(const SimulateOpts& o) {
  Stopwatch sw;
  ScalarField target = read_grid(o.target);
  NoiseModel nm;
  nm.max_intensity = o.max_intensity;
  nm.poisson = o.poisson;
  nm.quantize = o.quantize;
  nm.gaussian_std = o.gaussian_std;
  nm.seed = o.seed;
  if (!std::isnan(o.target_snr))
    nm.gaussian_std = calibrate_gaussian_std(target, o.max_intensity, o.target_snr, o.seed);
  Measurement m = simulate_measurement(target, nm);

  fs::create_directories(o.out);
  write_grid(o.out + "/b.txt", m.b.values);
  write_text(o.out + "/snr.txt", fmt(m.snr) + "\n");
  if (o.png) write_png16(o.out + "/intensity.png", m.intensity_measured, /*log_scale=*/true);

  Manifest mf;
  mf.comment(std::string("tool = ") + kToolVersion);
  mf.comment("command = simulate");
  mf.comment("hash.target = " + hash_file(o.target));
  mf.comment("gaussian-std-used = " + fmt(nm.gaussian_std));
  mf.comment("snr = " + fmt(m.snr));
  mf.set("target", o.target);
  mf.set("max-intensity", fmt(o.max_intensity));
  mf.set("poisson", o.poisson ? "1" : "0");
  mf.set("quantize", o.quantize ? "1" : "0");
  mf.set("gaussian-std", fmt(o.gaussian_std));
  if (!std::isnan(o.target_snr)) mf.set("target-snr", fmt(o.target_snr));
  mf.set("seed", std::to_string(o.seed));
  mf.set("png", o.png ? "1" : "0");
  write_manifest(o.out + "/manifest.txt", mf);
  write_timing(o.out, sw.seconds());
  return 0;
}

// ---- template ----------------------------------------------------------------

struct TemplateOpts {
  std::string data, out;
  std::string mode = "mass";   // geometric | mass
  double G = 4.0;
  std::string shape = "disk";  // disk | rect
  double threshold = 1e-3;     // autocorrelation support threshold (noise-free
                               // default; 5e-2 suits noisy data)
  double aspect = 2.0;
  bool png = true;
};

inline int run_template(const TemplateOpts& o) {
  Stopwatch sw;
  DiffractionData b = load_data(o.data);
  ScalarField ac = autocorrelation(b);
  if (!(field_max(ac) > 0.0)) throw degenerate_error("template: degenerate autocorrelation");
  double A = support_size(ac, o.threshold);
  double m = mass_from_data(b);
  if (!(m > 0.0)) throw degenerate_error("template: zero mass at k = 0");
  bool geometric = o.mode == "geometric";
  // Geometric action needs the user-supplied ratio G; with the
  // mass-preserving action only the total mass matters and G = 4 serves as
  // a shape heuristic for the initial support size.
  double a0 = geometric ? estimate_amplitude(m, A, o.G) : m / (A / 4.0);
  double S = geometric ? A / o.G : A / 4.0;

  TemplateSpec spec;
  spec.shape = o.shape == "rect" ? TemplateShape::Rectangle : TemplateShape::Disk;
  spec.support_area = S;
  spec.amplitude = a0;
  spec.mass = a0 * S;
  spec.aspect = o.aspect;
  ScalarField tmpl = build_template(spec, b.values.rows, b.values.cols);

  fs::create_directories(o.out);
  write_grid(o.out + "/template.txt", tmpl);
  std::ostringstream rep;
  rep << "mode = " << o.mode << "\n"
      << "m = " << fmt(m) << "\n"
      << "autocorr_support = " << fmt(A) << "\n"
      << "threshold = " << fmt(o.threshold) << "\n";
  if (geometric) rep << "G = " << fmt(o.G) << "\n";
  rep << "support_area = " << fmt(S) << "\n"
      << "a0 = " << fmt(a0) << "\n"
      << "shape = " << o.shape << "\n";
  write_text(o.out + "/report.txt", rep.str());
  if (o.png) write_png16(o.out + "/template.png", tmpl);

  Manifest mf;
  mf.comment(std::string("tool = ") + kToolVersion);
  mf.comment("command = template");
  mf.comment("hash.data = " + hash_file(o.data));
  mf.set("data", o.data);
  mf.set("mode", o.mode);
  mf.set("G", fmt(o.G));
  mf.set("shape", o.shape);
  mf.set("threshold", fmt(o.threshold));
  mf.set("aspect", fmt(o.aspect));
  mf.set("png", o.png ? "1" : "0");
  write_manifest(o.out + "/manifest.txt", mf);
  write_timing(o.out, sw.seconds());
  return 0;
}

// ---- retrieve / register-direct ------------------------------------------------

struct RetrieveOpts {
  std::string data;  // measured amplitudes (indirect) or target image (direct)
  std::string tmpl, out;
  std::string action = "geometric";  // geometric | mass
  std::string similarity = "cc";     // l2 | cc
  double sigma = 1e-3;
  double eta = 5e-3;
  double gamma = 1.0;
  int steps = 10;
  double cap = 1.0 / 500.0;
  int iters = 1000;
  bool half_density = false;
  bool png = true;
};

inline RunConfig to_config(const RetrieveOpts& o, Mode mode) {
  RunConfig cfg;
  cfg.sigma = o.sigma;
  cfg.kernel = {o.eta, o.gamma};
  cfg.n_steps = o.steps;
  cfg.c = o.cap;
  cfg.k_max = o.iters;
  cfg.action = o.action == "mass" ? Action::MassPreserving : Action::Geometric;
  cfg.similarity = o.similarity == "l2" ? Similarity::L2 : Similarity::CrossCorrelation;
  cfg.mode = mode;
  cfg.mass_form = o.half_density ? MassForm::Sqrt : MassForm::Full;
  return cfg;
}

inline int run_retrieve(const RetrieveOpts& o, Mode mode) {
  Stopwatch sw;
  ScalarField data =
      mode == Mode::Indirect ? load_data(o.data).values : read_grid(o.data);
  ScalarField I0 = read_grid(o.tmpl);
  if (!I0.same_shape(data)) throw io_error("retrieve: data and template shapes differ");
  RunConfig cfg = to_config(o, mode);

  fs::create_directories(o.out);
  std::ostringstream csv;
  csv << "iter,E,E1,E2,max_v\n";
  RunResult r = run_registration(I0, data, cfg, [&](int it, double E, double E1, double E2,
                                                    double mv) {
    csv << it << "," << fmt(E) << "," << fmt(E1) << "," << fmt(E2) << "," << fmt(mv) << "\n";
  });

  write_grid(o.out + "/recon.txt", r.recon);
  write_text(o.out + "/energy.csv", csv.str());
  for (int j = 0; j <= cfg.n_steps; ++j) {
    ScalarField est = transported_template(I0, r.path, j, cfg.action, cfg.mass_form);
    char name[48];
    std::snprintf(name, sizeof name, "/estimate_t%02d.txt", j);
    write_grid(o.out + name, est);
  }
  const CoordField& phi = r.path.phi_t0[cfg.n_steps];
  ScalarField dr(I0.rows, I0.cols), dc(I0.rows, I0.cols);
  for (int i = 0; i < I0.rows; ++i)
    for (int j = 0; j < I0.cols; ++j) {
      dr(i, j) = wrap_half(phi.x(i, j) - i, I0.rows);
      dc(i, j) = wrap_half(phi.y(i, j) - j, I0.cols);
    }
  write_grid(o.out + "/disp_row.txt", dr);
  write_grid(o.out + "/disp_col.txt", dc);
  write_text(o.out + "/path_distance.txt", fmt(path_distance_unit(r.v, cfg)) + "\n");
  if (o.png) write_png16(o.out + "/recon.png", r.recon);

  bool direct = mode == Mode::Direct;
  Manifest mf;
  mf.comment(std::string("tool = ") + kToolVersion);
  mf.comment(std::string("command = ") + (direct ? "register-direct" : "retrieve"));
  mf.comment(std::string("hash.") + (direct ? "target" : "data") + " = " + hash_file(o.data));
  mf.comment("hash.template = " + hash_file(o.tmpl));
  mf.comment(std::string("status = ") +
             (r.status == RunStatus::Completed ? "completed" : "stalled"));
  mf.comment("iterations = " + std::to_string(r.trace.size()));
  mf.comment("final_E = " + fmt(r.trace.back().E));
  mf.set(direct ? "target" : "data", o.data);
  mf.set("template", o.tmpl);
  mf.set("action", o.action);
  mf.set("similarity", o.similarity);
  mf.set("sigma", fmt(o.sigma));
  mf.set("eta", fmt(o.eta));
  mf.set("gamma", fmt(o.gamma));
  mf.set("steps", std::to_string(o.steps));
  mf.set("cap", fmt(o.cap));
  mf.set("iters", std::to_string(o.iters));
  mf.set("half-density", o.half_density ? "1" : "0");
  mf.set("png", o.png ? "1" : "0");
  write_manifest(o.out + "/manifest.txt", mf);
  write_timing(o.out, sw.seconds());
  return 0;
}

// ---- erhio -------------------------------------------------------------------

struct ErhioOpts {
  std::string data, out, truth;
  std::string schedule = "ER50HIO100x20";
  double threshold = 0.15;
  int restarts = 20;
  uint64_t seed = 0;
  double beta = 0.9;
  int sw_cadence = 50;
  double sw_sigma = 3.0;
  double sw_decay = 0.99;
  double sw_floor = 1.5;
  int threads = 0;
  bool png = true;
};

inline Schedule parse_schedule(const std::string& s) {
  std::smatch m;
  static const std::regex re(R"(^[Ee][Rr](\d+)[Hh][Ii][Oo](\d+)[xX](\d+)$)");
  if (!std::regex_match(s, m, re))
    throw std::invalid_argument("schedule: want ER<n>HIO<m>x<k>, got '" + s + "'");
  return Schedule{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
}

inline int run_erhio(const ErhioOpts& o) {
  Stopwatch sw;
  DiffractionData b = load_data(o.data);
  BaselineConfig cfg;
  cfg.schedule = parse_schedule(o.schedule);
  cfg.shrinkwrap.threshold = o.threshold;
  cfg.shrinkwrap.cadence = o.sw_cadence;
  cfg.shrinkwrap.sigma0 = o.sw_sigma;
  cfg.shrinkwrap.decay = o.sw_decay;
  cfg.shrinkwrap.sigma_floor = o.sw_floor;
  cfg.hio_beta = o.beta;
  cfg.n_restarts = o.restarts;
  cfg.seed = o.seed;
  cfg.n_threads = o.threads;

  std::function<double(const ScalarField&)> metric;
  ScalarField truth;
  if (!o.truth.empty()) {
    truth = read_grid(o.truth);
    metric = [&truth](const ScalarField& x) { return recon_error(x, truth); };
  }
  BaselineResult res = run_er_hio(b, cfg, metric);

  fs::create_directories(o.out);
  write_grid(o.out + "/best.txt", res.best);
  std::ostringstream csv;
  csv << "restart,error\n";
  for (size_t i = 0; i < res.errors.size(); ++i) csv << i << "," << fmt(res.errors[i]) << "\n";
  write_text(o.out + "/errors.csv", csv.str());
  if (o.png) write_png16(o.out + "/best.png", res.best);

  Manifest mf;
  mf.comment(std::string("tool = ") + kToolVersion);
  mf.comment("command = erhio");
  mf.comment("hash.data = " + hash_file(o.data));
  if (!o.truth.empty()) mf.comment("hash.truth = " + hash_file(o.truth));
  mf.comment("iterations = " + std::to_string(cfg.schedule.total()));
  mf.comment("best_restart = " + std::to_string(res.best_index));
  mf.comment("best_error = " + fmt(res.errors[res.best_index]));
  mf.set("data", o.data);
  if (!o.truth.empty()) mf.set("truth", o.truth);
  mf.set("schedule", o.schedule);
  mf.set("threshold", fmt(o.threshold));
  mf.set("restarts", std::to_string(o.restarts));
  mf.set("seed", std::to_string(o.seed));
  mf.set("beta", fmt(o.beta));
  mf.set("sw-cadence", std::to_string(o.sw_cadence));
  mf.set("sw-sigma", fmt(o.sw_sigma));
  mf.set("sw-decay", fmt(o.sw_decay));
  mf.set("sw-floor", fmt(o.sw_floor));
  mf.set("threads", std::to_string(o.threads));
  mf.set("png", o.png ? "1" : "0");
  write_manifest(o.out + "/manifest.txt", mf);
  write_timing(o.out, sw.seconds());
  return 0;
}

// ---- compare -----------------------------------------------------------------

struct CompareOpts {
  std::vector<std::string> runs;
  std::string truth, out;
};

inline int run_compare(const CompareOpts& o) {
  ScalarField truth = read_grid(o.truth);
  struct Row {
    std::string run, method, snr = "-", iterations = "-", wall = "-";
    double error = 0.0;
  };
  std::vector<Row> rows;
  for (const auto& dir : o.runs) {
    Row row;
    row.run = fs::path(dir).filename().string();
    if (row.run.empty()) row.run = dir;
    Manifest mf = read_manifest(dir + "/manifest.txt");
    for (const auto& c : mf.comments) {
      auto eq = c.find('=');
      if (eq == std::string::npos) continue;
      auto key = c.substr(0, c.find(" ="));
      auto val = c.substr(eq + 1);
      val.erase(0, val.find_first_not_of(' '));
      if (key == "command") row.method = val;
      if (key == "snr") row.snr = val;
      if (key == "iterations") row.iterations = val;
    }
    std::string recon_path = fs::exists(dir + "/recon.txt") ? dir + "/recon.txt"
                                                            : dir + "/best.txt";
    row.error = recon_error(read_grid(recon_path), truth);
    if (fs::exists(dir + "/timing.txt")) {
      Manifest t = read_manifest(dir + "/timing.txt");
      if (const std::string* w = t.get("wall_seconds")) row.wall = *w;
    }
    rows.push_back(std::move(row));
  }

  std::ostringstream csv, txt;
  csv << "run,method,snr,error,iterations,wall_seconds\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-16s %-12s %-12s %-10s %s\n", "run", "method", "snr",
                "error", "iters", "wall_s");
  txt << line;
  for (const auto& r : rows) {
    csv << r.run << "," << r.method << "," << r.snr << "," << fmt(r.error) << ","
        << r.iterations << "," << r.wall << "\n";
    std::snprintf(line, sizeof line, "%-24s %-16s %-12s %-12.6g %-10s %s\n", r.run.c_str(),
                  r.method.c_str(), r.snr.c_str(), r.error, r.iterations.c_str(),
                  r.wall.c_str());
    txt << line;
  }
  fs::path outp(o.out);
  if (!outp.parent_path().empty()) fs::create_directories(outp.parent_path());
  write_text(o.out + ".csv", csv.str());
  write_text(o.out + ".txt", txt.str());
  return 0;
}

}  // namespace phaseflow::cli

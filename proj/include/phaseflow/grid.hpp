#pragma once

// Periodic-grid field arithmetic on the flat 2-torus: DFTs, centered
// difference operators, bilinear interpolation, Jacobian determinants.
// Row index = first coordinate (x), column index = second coordinate (y),
// grid spacing fixed at 1 pixel.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace phaseflow {

struct ScalarField {
  int rows = 0, cols = 0;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {
    if (r <= 0 || c <= 0) throw std::invalid_argument("ScalarField: nonpositive shape");
  }

  double& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }

  // Wrapped accessor for stencils; accepts any integer index.
  double at(long long i, long long j) const {
    i %= rows; if (i < 0) i += rows;
    j %= cols; if (j < 0) j += cols;
    return v[static_cast<size_t>(i) * cols + j];
  }

  size_t size() const { return v.size(); }
  bool same_shape(const ScalarField& o) const { return rows == o.rows && cols == o.cols; }
};

struct ComplexField {
  int rows = 0, cols = 0;
  std::vector<std::complex<double>> v;

  ComplexField() = default;
  ComplexField(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c) {
    if (r <= 0 || c <= 0) throw std::invalid_argument("ComplexField: nonpositive shape");
  }

  std::complex<double>& operator()(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  std::complex<double> operator()(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return v.size(); }
};

// Two-component field; x = component along the row axis, y = along columns.
struct VectorField {
  ScalarField x, y;
  VectorField() = default;
  VectorField(int r, int c) : x(r, c), y(r, c) {}
  int rows() const { return x.rows; }
  int cols() const { return x.cols; }
};

// Sampled map phi: node (i,j) -> continuous coordinates (x(i,j), y(i,j)).
// Values may leave [0, N); they are interpreted modulo the torus.
struct CoordField {
  ScalarField x, y;
  CoordField() = default;
  CoordField(int r, int c) : x(r, c), y(r, c) {}
  int rows() const { return x.rows; }
  int cols() const { return x.cols; }
};

inline CoordField identity_coords(int rows, int cols) {
  CoordField p(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) { p.x(i, j) = i; p.y(i, j) = j; }
  return p;
}

inline bool all_finite(const ScalarField& f) {
  for (double a : f.v) if (!std::isfinite(a)) return false;
  return true;
}

inline double field_sum(const ScalarField& f) {
  double s = 0.0;
  for (double a : f.v) s += a;
  return s;
}

inline double field_max(const ScalarField& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (double a : f.v) m = std::max(m, a);
  return m;
}

inline double dot_plain(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

inline ScalarField circshift(const ScalarField& f, int dr, int dc) {
  ScalarField out(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j)
      out((i + dr % f.rows + f.rows) % f.rows, (j + dc % f.cols + f.cols) % f.cols) = f(i, j);
  return out;
}

// Reduce d to the representative in (-n/2, n/2].
inline double wrap_half(double d, int n) {
  return d - n * std::ceil(d / n - 0.5);
}

namespace detail {

struct PlanKey {
  int rows, cols, sign;
  bool operator<(const PlanKey& o) const {
    return std::tie(rows, cols, sign) < std::tie(o.rows, o.cols, o.sign);
  }
};

struct PlanEntry {
  fftw_plan plan = nullptr;
  fftw_complex* in = nullptr;   // kept alive: plan creation buffers
  fftw_complex* out = nullptr;
};

// Plan creation is not thread-safe in FFTW; executions via the new-array
// interface on distinct fftw_malloc'd buffers are. One cached plan per
// (shape, direction), guarded by a global mutex.
inline fftw_plan get_plan(int rows, int cols, int sign) {
  static std::mutex mu;
  static std::map<PlanKey, PlanEntry> cache;
  std::lock_guard<std::mutex> lock(mu);
  PlanKey key{rows, cols, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second.plan;
  PlanEntry e;
  size_t n = static_cast<size_t>(rows) * cols;
  e.in = fftw_alloc_complex(n);
  e.out = fftw_alloc_complex(n);
  e.plan = fftw_plan_dft_2d(rows, cols, e.in, e.out, sign, FFTW_ESTIMATE);
  if (!e.plan) throw std::runtime_error("fftw plan creation failed");
  cache[key] = e;
  return e.plan;
}

inline void execute_dft(const ComplexField& f, ComplexField& out, int sign) {
  size_t n = f.v.size();
  fftw_plan plan = get_plan(f.rows, f.cols, sign);
  fftw_complex* in = fftw_alloc_complex(n);
  fftw_complex* ou = fftw_alloc_complex(n);
  for (size_t i = 0; i < n; ++i) { in[i][0] = f.v[i].real(); in[i][1] = f.v[i].imag(); }
  fftw_execute_dft(plan, in, ou);
  out.rows = f.rows; out.cols = f.cols; out.v.resize(n);
  for (size_t i = 0; i < n; ++i) out.v[i] = {ou[i][0], ou[i][1]};
  fftw_free(in);
  fftw_free(ou);
}

}  // namespace detail

// Unnormalized forward DFT: mode (0,0) = sum of all values.
inline ComplexField dft2(const ComplexField& f) {
  ComplexField out;
  detail::execute_dft(f, out, FFTW_FORWARD);
  return out;
}

inline ComplexField dft2(const ScalarField& f) {
  ComplexField c(f.rows, f.cols);
  for (size_t i = 0; i < f.v.size(); ++i) c.v[i] = {f.v[i], 0.0};
  return dft2(c);
}

// Inverse DFT with the 1/(N1*N2) factor.
inline ComplexField idft2(const ComplexField& F) {
  ComplexField out;
  detail::execute_dft(F, out, FFTW_BACKWARD);
  double inv = 1.0 / (static_cast<double>(F.rows) * F.cols);
  for (auto& z : out.v) z *= inv;
  return out;
}

inline ScalarField real_part(const ComplexField& f) {
  ScalarField out(f.rows, f.cols);
  for (size_t i = 0; i < f.v.size(); ++i) out.v[i] = f.v[i].real();
  return out;
}

// Centered differences with periodic wraparound, spacing 1.
inline VectorField gradient(const ScalarField& f) {
  VectorField g(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i) {
    int ip = (i + 1) % f.rows, im = (i + f.rows - 1) % f.rows;
    for (int j = 0; j < f.cols; ++j) {
      int jp = (j + 1) % f.cols, jm = (j + f.cols - 1) % f.cols;
      g.x(i, j) = 0.5 * (f(ip, j) - f(im, j));
      g.y(i, j) = 0.5 * (f(i, jp) - f(i, jm));
    }
  }
  return g;
}

// Matching periodic divergence stencil (exact negative adjoint of gradient).
inline ScalarField divergence(const VectorField& h) {
  ScalarField d(h.rows(), h.cols());
  for (int i = 0; i < d.rows; ++i) {
    int ip = (i + 1) % d.rows, im = (i + d.rows - 1) % d.rows;
    for (int j = 0; j < d.cols; ++j) {
      int jp = (j + 1) % d.cols, jm = (j + d.cols - 1) % d.cols;
      d(i, j) = 0.5 * (h.x(ip, j) - h.x(im, j)) + 0.5 * (h.y(i, jp) - h.y(i, jm));
    }
  }
  return d;
}

// Bilinear interpolation with torus index wrapping; exact at integer coords.
inline double interp_at(const ScalarField& f, double x, double y) {
  double fx = std::floor(x), fy = std::floor(y);
  long long i0 = static_cast<long long>(fx), j0 = static_cast<long long>(fy);
  double ax = x - fx, ay = y - fy;
  double f00 = f.at(i0, j0), f01 = f.at(i0, j0 + 1);
  double f10 = f.at(i0 + 1, j0), f11 = f.at(i0 + 1, j0 + 1);
  return (1 - ax) * ((1 - ay) * f00 + ay * f01) + ax * ((1 - ay) * f10 + ay * f11);
}

inline ScalarField interp(const ScalarField& f, const CoordField& coords) {
  ScalarField out(coords.rows(), coords.cols());
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j)
      out(i, j) = interp_at(f, coords.x(i, j), coords.y(i, j));
  return out;
}

// Determinant of the centered-difference Jacobian of phi. Each two-node
// coordinate difference is unwrapped to the representative nearest the
// identity's difference (2 along the differenced axis, 0 across), so maps
// stored modulo the torus do not produce seams.
inline ScalarField jacobian_det(const CoordField& phi) {
  int R = phi.rows(), C = phi.cols();
  ScalarField det(R, C);
  for (int i = 0; i < R; ++i) {
    int ip = (i + 1) % R, im = (i + R - 1) % R;
    for (int j = 0; j < C; ++j) {
      int jp = (j + 1) % C, jm = (j + C - 1) % C;
      double dxx = wrap_half(phi.x(ip, j) - phi.x(im, j) - 2.0, R) + 2.0;
      double dxy = wrap_half(phi.x(i, jp) - phi.x(i, jm), R);
      double dyx = wrap_half(phi.y(ip, j) - phi.y(im, j), C);
      double dyy = wrap_half(phi.y(i, jp) - phi.y(i, jm) - 2.0, C) + 2.0;
      det(i, j) = 0.25 * (dxx * dyy - dxy * dyx);
    }
  }
  return det;
}

}  // namespace phaseflow

#pragma once

// Shared fixtures: deterministic random fields, smooth phantoms, a
// direct-summation DFT oracle, and the finite-difference machinery used by
// the gradient tests.

#include <complex>
#include <vector>

#include "phaseflow/phaseflow.hpp"

namespace pftest {

using namespace phaseflow;

inline ScalarField random_field(int rows, int cols, uint64_t seed, double lo = -1.0,
                                double hi = 1.0) {
  Rng rng(seed);
  ScalarField f(rows, cols);
  for (auto& a : f.v) a = lo + (hi - lo) * rng.uniform();
  return f;
}

inline VectorField random_vector_field(int rows, int cols, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  VectorField w(rows, cols);
  for (auto& a : w.x.v) a = scale * (2.0 * rng.uniform() - 1.0);
  for (auto& a : w.y.v) a = scale * (2.0 * rng.uniform() - 1.0);
  return w;
}

// Kernel-smoothed positive noise: a generic smooth image bounded away from
// zero, so cc denominators and modulus phases stay well conditioned.
inline ScalarField smooth_positive_image(int rows, int cols, uint64_t seed) {
  VectorField w = random_vector_field(rows, cols, seed);
  KernelParams k{2e-3 * rows * cols, 1.0};
  VectorField s = kernel_smooth(w, k);
  ScalarField f(rows, cols);
  double mx = 0.0;
  for (size_t i = 0; i < f.v.size(); ++i) mx = std::max(mx, std::abs(s.x.v[i]));
  for (size_t i = 0; i < f.v.size(); ++i) f.v[i] = 1.0 + s.x.v[i] / (mx > 0 ? mx : 1.0);
  return f;  // values in [0, 2], smooth
}

inline VectorField smooth_vector_field(int rows, int cols, uint64_t seed, double amp = 1.0) {
  VectorField w = random_vector_field(rows, cols, seed);
  KernelParams k{2e-3 * rows * cols, 1.0};
  VectorField s = kernel_smooth(w, k);
  double mx = 0.0;
  for (size_t i = 0; i < s.x.v.size(); ++i) mx = std::max(mx, std::hypot(s.x.v[i], s.y.v[i]));
  if (mx > 0)
    for (size_t i = 0; i < s.x.v.size(); ++i) {
      s.x.v[i] *= amp / mx;
      s.y.v[i] *= amp / mx;
    }
  return s;
}

inline VelocityPath smooth_velocity_path(int n_steps, int rows, int cols, uint64_t seed,
                                         double amp) {
  VelocityPath p(n_steps, rows, cols);
  for (int j = 0; j < n_steps; ++j) p.v[j] = smooth_vector_field(rows, cols, seed + 97 * j, amp);
  return p;
}

// O(P^2) reference DFT, unnormalized forward convention.
inline std::vector<std::complex<double>> dft_reference(const ScalarField& f) {
  int R = f.rows, C = f.cols;
  std::vector<std::complex<double>> F(static_cast<size_t>(R) * C);
  for (int k1 = 0; k1 < R; ++k1)
    for (int k2 = 0; k2 < C; ++k2) {
      std::complex<double> acc = 0.0;
      for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
          double ph = -2.0 * std::numbers::pi * (double(k1) * i / R + double(k2) * j / C);
          acc += f(i, j) * std::complex<double>(std::cos(ph), std::sin(ph));
        }
      F[static_cast<size_t>(k1) * C + k2] = acc;
    }
  return F;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

// Predicted first variation of E along direction h at velocity v:
// sum_j dt * <grad_j, h_j>_V, the pairing the V-gradient is defined against.
inline double predicted_variation(const VelocityPath& grad, const VelocityPath& h,
                                  const RunConfig& cfg) {
  KernelParams keff = effective_kernel(cfg.kernel, grad.v[0].rows(), grad.v[0].cols());
  double dt = 1.0 / grad.n_steps();
  double acc = 0.0;
  for (int j = 0; j < grad.n_steps(); ++j) acc += dt * v_inner(grad.v[j], h.v[j], keff);
  return acc;
}

inline VelocityPath axpy(const VelocityPath& v, double eps, const VelocityPath& h) {
  VelocityPath out = v;
  for (int j = 0; j < out.n_steps(); ++j)
    for (size_t i = 0; i < out.v[j].x.v.size(); ++i) {
      out.v[j].x.v[i] += eps * h.v[j].x.v[i];
      out.v[j].y.v[i] += eps * h.v[j].y.v[i];
    }
  return out;
}

// Centered finite difference of the full energy along h, swept over epsilon
// decades; returns the best relative agreement with the predicted variation.
inline double best_fd_relative_error(const ScalarField& I0, const ScalarField& data,
                                     const VelocityPath& v, const VelocityPath& h,
                                     const RunConfig& cfg, double predicted) {
  double best = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    double ep = evaluate_energy(I0, data, axpy(v, eps, h), cfg);
    double em = evaluate_energy(I0, data, axpy(v, -eps, h), cfg);
    double fd = (ep - em) / (2.0 * eps);
    double denom = std::max(std::abs(fd), std::abs(predicted));
    if (denom == 0.0) return 0.0;
    best = std::min(best, std::abs(fd - predicted) / denom);
  }
  return best;
}

// Full gradient at v for a given problem, via the engine's own assembly path.
inline VelocityPath gradient_at(const ScalarField& I0, const ScalarField& data,
                                const VelocityPath& v, const RunConfig& cfg) {
  DeformationPath path(v.n_steps(), I0.rows, I0.cols);
  update_phi_t0(path, v);
  update_phi_t1(path, v);
  ScalarField est = transported_template(I0, path, v.n_steps(), cfg.action, cfg.mass_form);
  detail::DataTerm dt = detail::data_term(est, data, cfg, true);
  return assemble_gradient(I0, dt.rprime_eff, path, v, cfg);
}

}  // namespace pftest

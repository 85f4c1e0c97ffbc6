#pragma once

// Alternating-projection phase retrieval: error reduction (ER), hybrid
// input-output (HIO), shrinkwrap support refinement, and the multi-restart
// schedule driver used as the classical baseline.

#include <atomic>
#include <functional>
#include <thread>

#include "phaseflow/rng.hpp"
#include "phaseflow/template_est.hpp"

namespace phaseflow {

struct SupportMask {
  int rows = 0, cols = 0;
  std::vector<uint8_t> inside;

  SupportMask() = default;
  SupportMask(int r, int c, bool fill = false)
      : rows(r), cols(c), inside(static_cast<size_t>(r) * c, fill ? 1 : 0) {}
  bool at(int i, int j) const { return inside[static_cast<size_t>(i) * cols + j] != 0; }
  void set(int i, int j, bool b) { inside[static_cast<size_t>(i) * cols + j] = b ? 1 : 0; }
  long long count() const {
    long long n = 0;
    for (uint8_t b : inside) n += b;
    return n;
  }
};

struct ProjectionState {
  ScalarField estimate;
  SupportMask support;
  int iteration = 0;
  uint64_t seed = 0;
};

// Replace the spectrum's modulus by b, keeping the phase of the estimate
// (guarded modes drop out, as in backproject).
inline ScalarField modulus_projection(const ScalarField& estimate, const DiffractionData& b) {
  return backproject(b.values, estimate);
}

// ER: modulus projection, then zero outside the support and clamp negatives
// inside it.
inline ProjectionState er_step(const ProjectionState& state, const DiffractionData& b) {
  ProjectionState out = state;
  ScalarField y = modulus_projection(state.estimate, b);
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j)
      out.estimate(i, j) = state.support.at(i, j) ? std::max(y(i, j), 0.0) : 0.0;
  out.iteration = state.iteration + 1;
  return out;
}

// HIO: keep the projected value where it satisfies the constraints, apply
// negative feedback x - beta*y elsewhere.
inline ProjectionState hio_step(const ProjectionState& state, const DiffractionData& b,
                                double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("hio_step: beta in (0,1]");
  ProjectionState out = state;
  ScalarField y = modulus_projection(state.estimate, b);
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j) {
      bool ok = state.support.at(i, j) && y(i, j) >= 0.0;
      out.estimate(i, j) = ok ? y(i, j) : state.estimate(i, j) - beta * y(i, j);
    }
  out.iteration = state.iteration + 1;
  return out;
}

// Periodic Gaussian blur with std sigma pixels, applied spectrally.
inline ScalarField gaussian_blur(const ScalarField& f, double sigma) {
  ComplexField F = dft2(f);
  constexpr double pi = std::numbers::pi;
  for (int i = 0; i < F.rows; ++i) {
    double fr = wrap_half(i, F.rows) / F.rows;
    for (int j = 0; j < F.cols; ++j) {
      double fc = wrap_half(j, F.cols) / F.cols;
      F(i, j) *= std::exp(-2.0 * pi * pi * sigma * sigma * (fr * fr + fc * fc));
    }
  }
  return real_part(idft2(F));
}

// Threshold the blurred magnitude of the estimate. A degenerate estimate
// (all zero / nonfinite max) keeps the previous mask and reports failure.
inline std::pair<SupportMask, bool> shrinkwrap_update(const ProjectionState& state,
                                                      double blur_sigma, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("shrinkwrap_update: threshold in (0,1)");
  ScalarField mag(state.estimate.rows, state.estimate.cols);
  for (size_t i = 0; i < mag.v.size(); ++i) mag.v[i] = std::abs(state.estimate.v[i]);
  ScalarField blurred = gaussian_blur(mag, blur_sigma);
  double mx = field_max(blurred);
  if (!(mx > 0.0) || !std::isfinite(mx)) return {state.support, false};
  SupportMask mask(mag.rows, mag.cols);
  double cut = threshold * mx;
  for (int i = 0; i < mag.rows; ++i)
    for (int j = 0; j < mag.cols; ++j) mask.set(i, j, blurred(i, j) >= cut);
  if (mask.count() == 0) return {state.support, false};
  return {mask, true};
}

// Initial support: bounding box of the autocorrelation thresholded at
// autoc_frac of its peak, halved about the grid center (the autocorrelation
// support is roughly twice the object support).
inline SupportMask initial_support(const DiffractionData& b, double autoc_frac = 0.04) {
  ScalarField ac = autocorrelation(b);
  double cut = autoc_frac * field_max(ac);
  int rmin = ac.rows, rmax = -1, cmin = ac.cols, cmax = -1;
  for (int i = 0; i < ac.rows; ++i)
    for (int j = 0; j < ac.cols; ++j)
      if (ac(i, j) >= cut) {
        rmin = std::min(rmin, i);
        rmax = std::max(rmax, i);
        cmin = std::min(cmin, j);
        cmax = std::max(cmax, j);
      }
  if (rmax < 0) throw degenerate_error("initial_support: empty autocorrelation support");
  double rh = (rmax - rmin) / 4.0, ch = (cmax - cmin) / 4.0;
  double rc = ac.rows / 2.0, cc = ac.cols / 2.0;
  SupportMask mask(ac.rows, ac.cols);
  for (int i = 0; i < ac.rows; ++i)
    for (int j = 0; j < ac.cols; ++j)
      mask.set(i, j, std::abs(i - rc) <= rh && std::abs(j - cc) <= ch);
  if (mask.count() == 0) throw degenerate_error("initial_support: empty mask");
  return mask;
}

struct Schedule {
  int er_iters = 50;
  int hio_iters = 100;
  int repeats = 20;
  int total() const { return (er_iters + hio_iters) * repeats; }
};

struct ShrinkwrapConfig {
  bool enabled = true;
  int cadence = 50;          // refresh every this many iterations
  double sigma0 = 3.0;       // initial blur std (px)
  double decay = 0.99;       // per-refresh multiplier
  double sigma_floor = 1.5;  // blur std floor (px)
  double threshold = 0.15;
};

struct BaselineConfig {
  Schedule schedule;
  ShrinkwrapConfig shrinkwrap;
  double hio_beta = 0.9;
  int n_restarts = 20;
  uint64_t seed = 0;
  int n_threads = 0;  // 0: hardware concurrency
};

struct BaselineResult {
  ScalarField best;
  std::vector<double> errors;  // per restart, in restart order
  int best_index = -1;
};

namespace detail {

inline double data_fidelity(const ScalarField& est, const DiffractionData& b) {
  DiffractionData beta = forward_modulus(est);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < beta.values.v.size(); ++i) {
    double d = beta.values.v[i] - b.values.v[i];
    num += d * d;
    den += b.values.v[i] * b.values.v[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace detail

// One seeded restart: random nonnegative start inside the initial support,
// then the ER/HIO schedule with periodic shrinkwrap refreshes.
inline ScalarField run_single_restart(const DiffractionData& b, const SupportMask& init_support,
                                      const BaselineConfig& cfg, uint64_t restart_seed) {
  Rng rng(restart_seed);
  ProjectionState st;
  st.seed = restart_seed;
  st.support = init_support;
  st.estimate = ScalarField(b.values.rows, b.values.cols);
  for (int i = 0; i < st.estimate.rows; ++i)
    for (int j = 0; j < st.estimate.cols; ++j)
      st.estimate(i, j) = st.support.at(i, j) ? rng.uniform() : 0.0;

  double sigma = cfg.shrinkwrap.sigma0;
  int it = 0;
  for (int rep = 0; rep < cfg.schedule.repeats; ++rep) {
    for (int phase = 0; phase < 2; ++phase) {
      int n = phase == 0 ? cfg.schedule.er_iters : cfg.schedule.hio_iters;
      for (int s = 0; s < n; ++s, ++it) {
        if (cfg.shrinkwrap.enabled && it > 0 && it % cfg.shrinkwrap.cadence == 0) {
          auto [mask, ok] = shrinkwrap_update(st, sigma, cfg.shrinkwrap.threshold);
          if (ok) st.support = mask;
          sigma = std::max(cfg.shrinkwrap.sigma_floor, sigma * cfg.shrinkwrap.decay);
        }
        st = phase == 0 ? er_step(st, b) : hio_step(st, b, cfg.hio_beta);
      }
    }
  }
  return st.estimate;
}

// recon_error lives in simkit; the driver takes the metric as a callable so
// the two modules stay decoupled.
inline BaselineResult run_er_hio(const DiffractionData& b, const BaselineConfig& cfg,
                                 const std::function<double(const ScalarField&)>& error_metric) {
  SupportMask init = initial_support(b);
  int n = cfg.n_restarts;
  std::vector<ScalarField> recons(n);
  int hw = cfg.n_threads > 0 ? cfg.n_threads
                             : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next.fetch_add(1); r < n; r = next.fetch_add(1))
      recons[r] = run_single_restart(b, init, cfg, cfg.seed + 7919ull * r);
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(hw, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  BaselineResult res;
  res.errors.resize(n);
  for (int r = 0; r < n; ++r) {
    res.errors[r] = error_metric ? error_metric(recons[r]) : detail::data_fidelity(recons[r], b);
    if (res.best_index < 0 || res.errors[r] < res.errors[res.best_index]) res.best_index = r;
  }
  res.best = recons[res.best_index];
  return res;
}

}  // namespace phaseflow

#pragma once

// Synthetic-data generation: noise models on diffraction intensities, the
// SNR definition, the translation/twin-invariant reconstruction error, and
// phantom images / smooth warps for experiments.

#include "phaseflow/actions.hpp"
#include "phaseflow/forward.hpp"
#include "phaseflow/rng.hpp"

namespace phaseflow {

struct NoiseModel {
  double max_intensity = 100.0;  // ideal peak counts after scaling
  bool poisson = false;
  bool quantize = false;
  double gaussian_std = 0.0;  // counts
  uint64_t seed = 0;
};

// 10*log10(|I| / |I - Im|) with plain (unsquared) L2 norms of the intensity
// fields. Infinity when the fields agree exactly.
inline double snr_db(const ScalarField& ideal, const ScalarField& measured) {
  double s = 0.0, d = 0.0;
  for (size_t i = 0; i < ideal.v.size(); ++i) {
    s += ideal.v[i] * ideal.v[i];
    double e = ideal.v[i] - measured.v[i];
    d += e * e;
  }
  if (d == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(std::sqrt(s) / std::sqrt(d));
}

struct Measurement {
  DiffractionData b;          // measured amplitudes, ideal units
  double snr = 0.0;           // dB; +inf when noise-free
  double scale = 1.0;         // counts per ideal intensity unit
  ScalarField intensity_ideal;     // scaled counts
  ScalarField intensity_measured;  // scaled counts
};

// Noise acts on intensities I = b^2 scaled so max I = max_intensity counts:
// Poisson sampling, additive Gaussian, round to integer counts, clamp at 0.
// Measured amplitudes are sqrt(I_m / scale).
inline Measurement simulate_measurement(const ScalarField& target, const NoiseModel& noise) {
  if (!all_finite(target)) throw std::invalid_argument("simulate_measurement: nonfinite target");
  if (!(noise.max_intensity > 0.0))
    throw std::invalid_argument("simulate_measurement: max_intensity must be positive");
  DiffractionData ideal = forward_modulus(target);
  ScalarField I(ideal.values.rows, ideal.values.cols);
  double imax = 0.0;
  for (size_t i = 0; i < I.v.size(); ++i) {
    I.v[i] = ideal.values.v[i] * ideal.values.v[i];
    imax = std::max(imax, I.v[i]);
  }
  if (imax <= 0.0) throw degenerate_error("simulate_measurement: zero target");
  double scale = noise.max_intensity / imax;
  for (auto& a : I.v) a *= scale;

  Rng rng(noise.seed);
  ScalarField Im = I;
  if (noise.poisson)
    for (auto& a : Im.v) a = static_cast<double>(rng.poisson(a));
  if (noise.gaussian_std > 0.0)
    for (auto& a : Im.v) a += noise.gaussian_std * rng.normal();
  if (noise.quantize)
    for (auto& a : Im.v) a = std::round(a);
  for (auto& a : Im.v) a = std::max(a, 0.0);

  Measurement m;
  m.snr = snr_db(I, Im);
  m.scale = scale;
  ScalarField b(I.rows, I.cols);
  for (size_t i = 0; i < b.v.size(); ++i) b.v[i] = std::sqrt(Im.v[i] / scale);
  m.b = DiffractionData(std::move(b));
  m.intensity_ideal = std::move(I);
  m.intensity_measured = std::move(Im);
  return m;
}

// Bisect gaussian_std so the measured SNR hits target_snr_db (Poisson and
// quantization off; fixed seed makes the map strictly monotone). The
// gaussian-noise draw scales linearly with std for a fixed seed, so the
// bisection converges to the exact std.
inline double calibrate_gaussian_std(const ScalarField& target, double max_intensity,
                                     double target_snr_db, uint64_t seed, int iters = 80) {
  NoiseModel nm;
  nm.max_intensity = max_intensity;
  nm.seed = seed;
  double lo = 0.0, hi = 1.0;
  nm.gaussian_std = hi;
  while (simulate_measurement(target, nm).snr > target_snr_db) {
    hi *= 10.0;
    nm.gaussian_std = hi;
    if (hi > 1e12) throw degenerate_error("calibrate_gaussian_std: no bracket");
  }
  for (int i = 0; i < iters; ++i) {
    double mid = 0.5 * (lo + hi);
    nm.gaussian_std = mid;
    if (simulate_measurement(target, nm).snr > target_snr_db)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Translation- and twin-invariant normalized RMS error:
//   min over circular shifts s and flip in {id, point inversion} of
//   |lambda*shift_flip(recon) - truth| / |truth|, lambda optimal (>= 0).
// The shift search maximizes the circular cross-correlation via FFT
// (whole-pixel shifts). Returns 1 when no positively correlated alignment
// exists.
inline double recon_error(const ScalarField& recon, const ScalarField& truth) {
  if (!recon.same_shape(truth)) throw std::invalid_argument("recon_error: shape mismatch");
  double t2 = dot_plain(truth, truth);
  if (t2 <= 0.0) throw std::invalid_argument("recon_error: zero truth");
  double r2 = dot_plain(recon, recon);
  if (r2 <= 0.0) return 1.0;

  ComplexField R = dft2(recon), T = dft2(truth);
  double cmax = 0.0;
  // corr(s) = sum_x recon(x+s)*truth(x) = idft2(R * conj(T));
  // the point-inverted recon has spectrum conj(R) (real input).
  for (int flip = 0; flip < 2; ++flip) {
    ComplexField W(R.rows, R.cols);
    for (size_t i = 0; i < W.v.size(); ++i) {
      std::complex<double> rk = flip ? std::conj(R.v[i]) : R.v[i];
      W.v[i] = rk * std::conj(T.v[i]);
    }
    ScalarField corr = real_part(idft2(W));
    cmax = std::max(cmax, field_max(corr));
  }
  if (cmax <= 0.0) return 1.0;
  double e2 = 1.0 - (cmax * cmax) / (r2 * t2);
  return std::sqrt(std::max(e2, 0.0));
}

// ---- Phantoms and warps ---------------------------------------------------

inline ScalarField disk_image(int rows, int cols, double cr, double cc, double radius,
                              double amplitude = 1.0) {
  ScalarField f(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if ((i - cr) * (i - cr) + (j - cc) * (j - cc) <= radius * radius) f(i, j) = amplitude;
  return f;
}

// Disk with a sigmoid edge profile of width edge pixels.
inline ScalarField smooth_disk(int rows, int cols, double cr, double cc, double radius,
                               double edge, double amplitude = 1.0) {
  ScalarField f(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double d = std::hypot(i - cr, j - cc);
      f(i, j) = amplitude / (1.0 + std::exp((d - radius) / edge));
    }
  return f;
}

inline ScalarField gauss_blob(int rows, int cols, double cr, double cc, double sigma,
                              double amplitude) {
  ScalarField f(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double d2 = (i - cr) * (i - cr) + (j - cc) * (j - cc);
      f(i, j) = amplitude * std::exp(-0.5 * d2 / (sigma * sigma));
    }
  return f;
}

inline void add_field(ScalarField& dst, const ScalarField& src) {
  for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

// Axis-aligned binary rectangle over pixel index ranges [r0, r1) x [c0, c1).
inline ScalarField rect_image(int rows, int cols, int r0, int r1, int c0, int c1,
                              double amplitude = 1.0) {
  ScalarField f(rows, cols);
  for (int i = r0; i < r1; ++i)
    for (int j = c0; j < c1; ++j) f(i, j) = amplitude;
  return f;
}

// Right triangle with legs along the axes: nodes with (i-r0) + (j-c0) < leg,
// i >= r0, j >= c0.
inline ScalarField triangle_image(int rows, int cols, int r0, int c0, int leg,
                                  double amplitude = 1.0) {
  ScalarField f(rows, cols);
  for (int i = 0; i < leg; ++i)
    for (int j = 0; j < leg - i; ++j) f(r0 + i, c0 + j) = amplitude;
  return f;
}

// Single-mode smooth displacement field (pixels).
inline VectorField smooth_warp_field(int rows, int cols, double ax, double ay, int kx = 1,
                                     int ky = 1) {
  VectorField u(rows, cols);
  constexpr double pi = std::numbers::pi;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      u.x(i, j) = ax * std::sin(2.0 * pi * kx * i / rows) * std::cos(2.0 * pi * ky * j / cols);
      u.y(i, j) = ay * std::cos(2.0 * pi * kx * i / rows) * std::sin(2.0 * pi * ky * j / cols);
    }
  return u;
}

// Pull the image back through phi(x) = x + u(x).
inline ScalarField warp_image(const ScalarField& f, const VectorField& u, Action action,
                              MassForm form = MassForm::Full) {
  CoordField phi(f.rows, f.cols);
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) {
      phi.x(i, j) = i + u.x(i, j);
      phi.y(i, j) = j + u.y(i, j);
    }
  return pullback(f, phi, action, form);
}

}  // namespace phaseflow

#pragma once

// Fourier-modulus forward operator, back-projected residuals, and the two
// similarity energies (plain L2 and normalized cross-correlation).

#include "phaseflow/grid.hpp"

namespace phaseflow {

// Numerical degeneracy (flat cc input, empty data) distinct from bad usage.
struct degenerate_error : std::runtime_error {
  explicit degenerate_error(const std::string& m) : std::runtime_error(m) {}
};

enum class Similarity { L2, CrossCorrelation };

// Nonnegative amplitude data on the measurement grid (same shape as the
// image domain), with the domain mean cached.
struct DiffractionData {
  ScalarField values;
  double mean = 0.0;

  DiffractionData() = default;
  explicit DiffractionData(ScalarField f) : values(std::move(f)) {
    for (double a : values.v)
      if (!(a >= 0.0) || !std::isfinite(a))
        throw std::invalid_argument("DiffractionData: values must be finite and >= 0");
    mean = field_sum(values) / static_cast<double>(values.size());
  }
};

// |DFT| of the image.
inline DiffractionData forward_modulus(const ScalarField& f) {
  ComplexField F = dft2(f);
  ScalarField b(f.rows, f.cols);
  for (size_t i = 0; i < b.v.size(); ++i) b.v[i] = std::abs(F.v[i]);
  return DiffractionData(std::move(b));
}

// R' = Re[idft2(residual * alpha~/|alpha~|)], alpha~ = dft2(estimate).
// Modes with |alpha~| <= eps*max get phase factor 0 (subgradient choice at
// the nondifferentiable point of |.|).
inline ScalarField backproject(const ScalarField& residual, const ScalarField& estimate) {
  if (!residual.same_shape(estimate)) throw std::invalid_argument("backproject: shape mismatch");
  ComplexField A = dft2(estimate);
  double maxmod = 0.0;
  for (const auto& z : A.v) maxmod = std::max(maxmod, std::abs(z));
  double guard = 1e-12 * maxmod;
  ComplexField W(residual.rows, residual.cols);
  for (size_t i = 0; i < A.v.size(); ++i) {
    double m = std::abs(A.v[i]);
    W.v[i] = (m > guard) ? residual.v[i] * (A.v[i] / m) : std::complex<double>(0.0, 0.0);
  }
  return real_part(idft2(W));
}

struct L2Result {
  double energy = 0.0;
  ScalarField residual;
};

// E2 = sum (beta - b)^2 over the measurement grid, plus the residual field.
inline L2Result l2_energy(const ScalarField& beta, const ScalarField& b) {
  if (!beta.same_shape(b)) throw std::invalid_argument("l2_energy: shape mismatch");
  L2Result r;
  r.residual = ScalarField(beta.rows, beta.cols);
  for (size_t i = 0; i < beta.v.size(); ++i) {
    double d = beta.v[i] - b.v[i];
    r.residual.v[i] = d;
    r.energy += d * d;
  }
  return r;
}

inline L2Result l2_energy(const DiffractionData& beta, const DiffractionData& b) {
  return l2_energy(beta.values, b.values);
}

struct CCResult {
  double energy = 0.0;  // -A^2/(2BC), in [-1/2, 0]
  double A = 0.0, B = 0.0, C = 0.0;
};

// Cross-correlation energy -A^2/(2BC) with A = <beta_c, b_c>, B = |beta_c|^2,
// C = |b_c|^2; fields are mean-subtracted over the whole domain. Invariant
// under positive rescaling and constant offsets of either argument.
inline CCResult cc_energy(const ScalarField& beta, const ScalarField& b) {
  if (!beta.same_shape(b)) throw std::invalid_argument("cc_energy: shape mismatch");
  double n = static_cast<double>(beta.size());
  double mb = field_sum(beta) / n, md = field_sum(b) / n;
  CCResult r;
  for (size_t i = 0; i < beta.v.size(); ++i) {
    double x = beta.v[i] - mb, y = b.v[i] - md;
    r.A += x * y;
    r.B += x * x;
    r.C += y * y;
  }
  if (r.B <= 0.0 || r.C <= 0.0)
    throw degenerate_error("cc_energy: flat input (zero variance)");
  r.energy = -(r.A * r.A) / (2.0 * r.B * r.C);
  return r;
}

inline CCResult cc_energy(const DiffractionData& beta, const DiffractionData& b) {
  return cc_energy(beta.values, b.values);
}

// Data-space Gateaux derivative of the cc energy, back-projected to image
// space through the phase of the current estimate:
// R' = (A/(BC)) * ((A/B)*bp(beta_c) - bp(b_c)).
inline ScalarField cc_residual(const ScalarField& beta, const ScalarField& b,
                               const ScalarField& estimate) {
  CCResult r = cc_energy(beta, b);
  double n = static_cast<double>(beta.size());
  double mb = field_sum(beta) / n, md = field_sum(b) / n;
  ScalarField bc(beta.rows, beta.cols), dc(beta.rows, beta.cols);
  for (size_t i = 0; i < beta.v.size(); ++i) {
    bc.v[i] = beta.v[i] - mb;
    dc.v[i] = b.v[i] - md;
  }
  ScalarField bp_beta = backproject(bc, estimate);
  ScalarField bp_b = backproject(dc, estimate);
  double k = r.A / (r.B * r.C);
  ScalarField out(beta.rows, beta.cols);
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = k * ((r.A / r.B) * bp_beta.v[i] - bp_b.v[i]);
  return out;
}

inline ScalarField cc_residual(const DiffractionData& beta, const DiffractionData& b,
                               const ScalarField& estimate) {
  return cc_residual(beta.values, b.values, estimate);
}

}  // namespace phaseflow

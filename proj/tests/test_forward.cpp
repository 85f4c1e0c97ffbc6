#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace phaseflow;
using pftest::random_field;

TEST(ForwardModulus, KnownTwoByTwo) {
  ScalarField f(2, 2);
  f(0, 0) = 1;
  f(0, 1) = 2;
  f(1, 0) = 3;
  f(1, 1) = 4;
  DiffractionData b = forward_modulus(f);
  EXPECT_NEAR(b.values(0, 0), 10.0, 1e-12);
  EXPECT_NEAR(b.values(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(b.values(1, 0), 4.0, 1e-12);
  EXPECT_NEAR(b.values(1, 1), 0.0, 1e-12);
}

TEST(ForwardModulus, InvariantToShiftAndPointInversion) {
  ScalarField f = random_field(16, 16, 3);
  ScalarField b0 = forward_modulus(f).values;
  ScalarField b1 = forward_modulus(circshift(f, 5, -3)).values;
  ScalarField flipped(16, 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) flipped(i, j) = f.at(-i, -j);
  ScalarField b2 = forward_modulus(flipped).values;
  EXPECT_LE(pftest::max_abs_diff(b0, b1), 1e-10);
  EXPECT_LE(pftest::max_abs_diff(b0, b2), 1e-10);
}

TEST(DiffractionData, RejectsNegativeAndNonFinite) {
  ScalarField f(2, 2, 1.0);
  f(0, 1) = -0.25;
  EXPECT_THROW(DiffractionData d(f), std::invalid_argument);
  f(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DiffractionData d(f), std::invalid_argument);
  f(0, 1) = 0.0;
  DiffractionData d(f);
  EXPECT_NEAR(d.mean, 3.0 / 4.0, 1e-15);
}

TEST(L2Energy, ZeroAtMatchAndKnownValue) {
  ScalarField b = random_field(8, 8, 5, 0.0, 2.0);
  EXPECT_DOUBLE_EQ(l2_energy(b, b).energy, 0.0);
  ScalarField beta(2, 2), bb(2, 2, 1.0);
  beta(0, 0) = 1;
  beta(0, 1) = 2;
  beta(1, 0) = 3;
  beta(1, 1) = 4;
  L2Result r = l2_energy(beta, bb);
  EXPECT_DOUBLE_EQ(r.energy, 0.0 + 1.0 + 4.0 + 9.0);
  EXPECT_DOUBLE_EQ(r.residual(1, 1), 3.0);
}

TEST(CcEnergy, PerfectMatchIsMinusHalf) {
  ScalarField b = random_field(12, 12, 7, 0.0, 3.0);
  CCResult r = cc_energy(b, b);
  EXPECT_NEAR(r.energy, -0.5, 1e-12);
}

TEST(CcEnergy, AffineInvariance) {
  ScalarField beta = random_field(10, 10, 11, 0.5, 2.0);
  ScalarField b = random_field(10, 10, 13, 0.5, 2.0);
  double e0 = cc_energy(beta, b).energy;
  for (double a : {2.7, -2.7, 0.01}) {
    ScalarField scaled(10, 10);
    for (size_t i = 0; i < scaled.v.size(); ++i) scaled.v[i] = a * beta.v[i] + 5.5;
    EXPECT_NEAR(cc_energy(scaled, b).energy, e0, 1e-10);
  }
}

TEST(CcEnergy, OrthogonalPatternsScoreZero) {
  int N = 16;
  ScalarField beta(N, N), b(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      beta(i, j) = 2.0 + std::sin(2.0 * std::numbers::pi * i / N);
      b(i, j) = 2.0 + std::sin(2.0 * std::numbers::pi * j / N);
    }
  EXPECT_NEAR(cc_energy(beta, b).energy, 0.0, 1e-12);
}

TEST(CcEnergy, FlatInputThrows) {
  ScalarField flat(8, 8, 3.0);
  ScalarField b = random_field(8, 8, 17, 0.5, 2.0);
  EXPECT_THROW(cc_energy(flat, b), degenerate_error);
  EXPECT_THROW(cc_energy(b, flat), degenerate_error);
}

TEST(CcResidual, VanishesAtPerfectMatch) {
  ScalarField est = pftest::smooth_positive_image(16, 16, 19);
  DiffractionData b = forward_modulus(est);
  ScalarField r = cc_residual(b, b, est);
  double scale = field_max(b.values);
  for (double a : r.v) EXPECT_NEAR(a, 0.0, 1e-12 * scale);
}

TEST(Backproject, ZeroEstimateYieldsZeroWithoutNan) {
  ScalarField zero(8, 8, 0.0);
  ScalarField r = random_field(8, 8, 23);
  ScalarField g = backproject(r, zero);
  EXPECT_TRUE(all_finite(g));
  for (double a : g.v) EXPECT_DOUBLE_EQ(a, 0.0);
}

TEST(Backproject, IsModulusDerivativeTranspose) {
  // d/deps sum_k w(k)*|F(est + eps h)(k)| = P * <backproject(w, est), h>.
  // The factor P is Parseval's constant for the unnormalized transform; the
  // engine's Riesz scalings (P^2, P^2/2, P, P/2) all build on this identity.
  int N = 12;
  double P = double(N) * N;
  ScalarField est = pftest::smooth_positive_image(N, N, 29);
  ScalarField h = pftest::smooth_positive_image(N, N, 31);
  ScalarField w = random_field(N, N, 37, 0.5, 1.5);
  auto weighted_modulus = [&](const ScalarField& x) {
    DiffractionData b = forward_modulus(x);
    double acc = 0.0;
    for (size_t i = 0; i < w.v.size(); ++i) acc += w.v[i] * b.values.v[i];
    return acc;
  };
  double best = std::numeric_limits<double>::infinity();
  double pred = P * dot_plain(backproject(w, est), h);
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    ScalarField xp = est, xm = est;
    for (size_t i = 0; i < est.v.size(); ++i) {
      xp.v[i] += eps * h.v[i];
      xm.v[i] -= eps * h.v[i];
    }
    double fd = (weighted_modulus(xp) - weighted_modulus(xm)) / (2.0 * eps);
    best = std::min(best, std::abs(fd - pred) / std::abs(pred));
  }
  EXPECT_LE(best, 1e-6);
}

TEST(Forward, ShapeMismatchThrows) {
  ScalarField a(4, 4), b(4, 5);
  EXPECT_THROW(backproject(a, b), std::invalid_argument);
  EXPECT_THROW(l2_energy(a, b), std::invalid_argument);
  EXPECT_THROW(cc_energy(a, b), std::invalid_argument);
}

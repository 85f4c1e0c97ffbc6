#pragma once

// Deterministic random streams built on mt19937_64 with explicit transforms
// (no std:: distributions), so seeded sequences are identical across
// standard library implementations.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace phaseflow {

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Poisson sample: Knuth's product method for small means, Hormann's PTRS
  // transformed rejection for large ones. Exact distribution, uniform draws
  // only.
  long long poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 10.0) {
      double L = std::exp(-lambda), p = 1.0;
      long long k = 0;
      do {
        ++k;
        p *= uniform();
      } while (p > L);
      return k - 1;
    }
    double b = 0.931 + 2.53 * std::sqrt(lambda);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    double log_lam = std::log(lambda);
    for (;;) {
      double U = uniform() - 0.5;
      double V = uniform();
      double us = 0.5 - std::abs(U);
      long long k = static_cast<long long>(std::floor((2.0 * a / us + b) * U + lambda + 0.43));
      if (us >= 0.07 && V <= v_r) return k;
      if (k < 0 || (us < 0.013 && V > us)) continue;
      if (std::log(V * inv_alpha / (a / (us * us) + b)) <=
          k * log_lam - lambda - std::lgamma(static_cast<double>(k) + 1.0))
        return k;
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace phaseflow

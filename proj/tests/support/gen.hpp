#pragma once

// Seeded parameter generators for property tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "optocool/params.hpp"

namespace gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }

  /// Any red-detuned point, stable or not.
  optocool::ReducedParams red_detuned() {
    optocool::ReducedParams rp;
    rp.kappa = log_uniform(1e-3, 10.0);
    rp.gamma = log_uniform(1e-6, 1e-2);
    rp.detuning = -log_uniform(0.05, 5.0);
    rp.g_eff = log_uniform(1e-4, 0.5);
    rp.n_th = log_uniform(1e-2, 1e4);
    rp.g_phase = uniform(-3.14, 3.14);
    return rp;
  }

  /// Stable red-detuned point with |G| < ω_m/2.
  optocool::ReducedParams stable() {
    auto rp = red_detuned();
    const double d = rp.detuning;
    const double bound = -(4.0 * d * d + rp.kappa * rp.kappa) / (16.0 * d);
    rp.g_eff = std::min(std::sqrt(uniform(0.01, 0.9) * bound), uniform(0.01, 0.45));
    return rp;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace gen

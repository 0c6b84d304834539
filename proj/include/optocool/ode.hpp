#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

#include "optocool/errors.hpp"

namespace optocool::ode {

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_min = 1e-12;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Adaptive Dormand–Prince 5(4) integrator for dx/dt = f(x) (autonomous).
/// `advance` integrates exactly to a target time, never stepping past it, so
/// callers can force step boundaries at discontinuities of the right-hand side.
template <typename Vector>
class DormandPrince {
 public:
  DormandPrince(Tolerances tol, double h_max) : tol_(tol), h_max_(h_max), h_(h_max) {}

  template <typename Rhs>
  void advance(const Rhs& f, Vector& x, double t0, double t1, StepStats* stats = nullptr) {
    double t = t0;
    while (t < t1) {
      const double remaining = t1 - t;
      double h = std::min({h_, h_max_, remaining});
      // Avoid a sliver step at the end of the interval.
      if (remaining - h < 1e-3 * h) h = remaining;

      Vector x5, err;
      step(f, x, h, x5, err);
      const double e = error_norm(x, x5, err);
      if (e <= 1.0 || h <= tol_.h_min) {
        if (!std::isfinite(e)) throw StepUnderflow("Dormand-Prince: non-finite state");
        x = x5;
        t = (h == remaining) ? t1 : t + h;
        if (stats) ++stats->accepted;
        const double grow = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
        // A step clipped to hit t1 says nothing about growing beyond h_.
        const bool clipped = h < h_;
        h_ = std::min(h_max_, (clipped && grow >= 1.0) ? h_ : h * grow);
      } else {
        if (stats) ++stats->rejected;
        const double shrink = std::clamp(0.9 * std::pow(e, -0.25), 0.1, 0.9);
        h_ = h * shrink;
        if (h_ < tol_.h_min)
          throw StepUnderflow("Dormand-Prince: step size fell below 1e-12; the system is too "
                              "stiff for the configured tolerances");
      }
    }
  }

  void set_max_step(double h_max) {
    h_max_ = h_max;
    h_ = std::min(h_, h_max_);
  }

 private:
  template <typename Rhs>
  static void step(const Rhs& f, const Vector& x, double h, Vector& x5, Vector& err) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    const Vector k1 = f(x);
    const Vector k2 = f(x + h * (a21 * k1));
    const Vector k3 = f(x + h * (a31 * k1 + a32 * k2));
    const Vector k4 = f(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = f(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = f(x5);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  }

  double error_norm(const Vector& x0, const Vector& x1, const Vector& err) const {
    double e = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double scale =
          tol_.atol + tol_.rtol * std::max(std::abs(x0[i]), std::abs(x1[i]));
      e = std::max(e, std::abs(err[i]) / scale);
    }
    return e;
  }

  Tolerances tol_;
  double h_max_;
  double h_;
};

}  // namespace optocool::ode

#include "optocool/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/Polynomials>

#include "optocool/constants.hpp"
#include "optocool/errors.hpp"

namespace optocool {

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// Frequency pull per unit intracavity intensity: Δ′ = Δ + η|α|².
double intensity_pull(const PhysicalParams& p) {
  const double w = p.omega_m;
  return 2.0 * p.g * p.g * w / (w * w + 0.25 * p.gamma * p.gamma);
}

struct Cubic {
  double eta, delta, kappa, drive_sq;
  double value(double n) const {
    const double d = delta + eta * n;
    return n * (d * d + 0.25 * kappa * kappa) - drive_sq;
  }
  double slope(double n) const {
    const double d = delta + eta * n;
    return d * d + 0.25 * kappa * kappa + 2.0 * eta * n * d;
  }
};

double polish(const Cubic& c, double n) {
  const double scale = std::max(1.0, c.drive_sq);
  for (int it = 0; it < 100; ++it) {
    const double f = c.value(n);
    if (std::abs(f) <= 1e-10 * scale) {
      // one extra step to land on the rounding floor
      const double s = c.slope(n);
      if (s != 0.0) n -= c.value(n) / s;
      return n;
    }
    const double s = c.slope(n);
    if (s == 0.0 || !std::isfinite(s)) break;
    n -= f / s;
  }
  throw NoConvergence("classical_steady_state: Newton polish of the intensity cubic did not "
                      "reach residual 1e-10 in 100 steps");
}

ClassicalFixedPoint fixed_point_from_intensity(const PhysicalParams& p, double n) {
  const std::complex<double> I(0.0, 1.0);
  const auto drive = drive_amplitude(p.power, p.omega_in, p.kappa_ex, p.phase);
  const double kappa = p.kappa_total();
  const double det_eff = p.detuning() + intensity_pull(p) * n;

  ClassicalFixedPoint fp;
  fp.detuning_eff = det_eff;
  fp.alpha = -I * drive / (-I * det_eff + 0.5 * kappa);
  fp.beta = -I * p.g * std::norm(fp.alpha) / (I * p.omega_m + 0.5 * p.gamma);
  fp.coupling = fp.alpha * p.g;
  return fp;
}

}  // namespace

void PhysicalParams::validate() const {
  require(finite_positive(omega_m), "omega_m", "must be > 0");
  require(finite_positive(omega_c), "omega_c", "must be > 0");
  require(finite_positive(omega_in), "omega_in", "must be > 0");
  require(finite_positive(kappa_0), "kappa_0", "must be > 0");
  require(finite_positive(kappa_ex), "kappa_ex", "must be > 0");
  require(finite_positive(gamma), "gamma", "must be > 0");
  require(std::isfinite(g) && g >= 0.0, "g", "must be >= 0");
  require(finite_positive(m_eff), "m_eff", "must be > 0");
  require(std::isfinite(power) && power >= 0.0, "power", "must be >= 0");
  require(std::isfinite(phase), "phase", "must be finite");
  require(std::isfinite(temperature) && temperature >= 0.0, "temperature", "must be >= 0");
}

void ReducedParams::validate() const {
  require(finite_positive(kappa), "kappa", "must be > 0");
  require(finite_positive(gamma), "gamma", "must be > 0");
  require(std::isfinite(g_eff) && g_eff >= 0.0, "g_eff", "must be >= 0");
  require(std::isfinite(detuning), "detuning", "must be finite");
  require(std::isfinite(n_th) && n_th >= 0.0, "n_th", "must be >= 0");
  require(std::isfinite(g_phase), "g_phase", "must be finite");
  require(finite_positive(omega_m), "omega_m", "must be > 0");
}

double thermal_occupancy(double omega_m, double temperature) {
  if (temperature <= 0.0) return 0.0;
  const double x = constants::hbar * omega_m / (constants::k_B * temperature);
  return 1.0 / std::expm1(x);
}

std::complex<double> drive_amplitude(double power, double omega_in, double kappa_ex,
                                     double phase) {
  const double mag = std::sqrt(kappa_ex * power / (constants::hbar * omega_in));
  return std::polar(mag, phase);
}

double zero_point_fluctuation(double m_eff, double omega_m) {
  return std::sqrt(constants::hbar / (2.0 * m_eff * omega_m));
}

std::vector<ClassicalFixedPoint> classical_steady_state(const PhysicalParams& p) {
  p.validate();
  const auto drive = drive_amplitude(p.power, p.omega_in, p.kappa_ex, p.phase);
  const Cubic cubic{intensity_pull(p), p.detuning(), p.kappa_total(), std::norm(drive)};

  std::vector<double> intensities;
  if (cubic.drive_sq == 0.0) {
    intensities.push_back(0.0);
  } else if (cubic.eta == 0.0) {
    intensities.push_back(cubic.drive_sq /
                          (cubic.delta * cubic.delta + 0.25 * cubic.kappa * cubic.kappa));
  } else {
    // Work in a scaled variable u = n / n0 so the coefficients are O(1).
    const double n0 = cubic.drive_sq / (cubic.delta * cubic.delta +
                                        0.25 * cubic.kappa * cubic.kappa);
    Eigen::Vector4d coeffs;
    coeffs << -cubic.drive_sq / n0,
        cubic.delta * cubic.delta + 0.25 * cubic.kappa * cubic.kappa,
        2.0 * cubic.delta * cubic.eta * n0, cubic.eta * cubic.eta * n0 * n0;
    Eigen::PolynomialSolver<double, 3> solver(coeffs);
    std::vector<double> roots;
    solver.realRoots(roots, 1e-6);
    for (double u : roots) {
      if (u <= 0.0) continue;
      intensities.push_back(polish(cubic, u * n0));
    }
    std::sort(intensities.begin(), intensities.end());
    intensities.erase(std::unique(intensities.begin(), intensities.end(),
                                  [](double a, double b) {
                                    return std::abs(a - b) <= 1e-9 * std::max(a, b);
                                  }),
                      intensities.end());
    if (intensities.empty())
      throw NoConvergence("classical_steady_state: intensity cubic has no positive root");
  }

  std::vector<ClassicalFixedPoint> out;
  out.reserve(intensities.size());
  for (double n : intensities) {
    auto fp = fixed_point_from_intensity(p, n);
    fp.branch_count = static_cast<int>(intensities.size());
    // Slope criterion: dP/dn < 0 marks the middle branch of an S-curve.
    fp.stable = cubic.slope(n) > 0.0;
    out.push_back(fp);
  }
  return out;
}

FixedPointResidual fixed_point_residual(const PhysicalParams& p, const ClassicalFixedPoint& fp) {
  const std::complex<double> I(0.0, 1.0);
  const auto drive = drive_amplitude(p.power, p.omega_in, p.kappa_ex, p.phase);
  const double det_eff = p.detuning() - p.g * 2.0 * fp.beta.real();
  FixedPointResidual r;
  r.alpha = std::abs((I * det_eff - 0.5 * p.kappa_total()) * fp.alpha - I * drive);
  r.beta = std::abs((-I * p.omega_m - 0.5 * p.gamma) * fp.beta - I * p.g * std::norm(fp.alpha));
  return r;
}

ReducedParams to_si_linearized(const PhysicalParams& p, const ClassicalFixedPoint& fp) {
  ReducedParams rp;
  rp.omega_m = p.omega_m;
  rp.kappa = p.kappa_total();
  rp.gamma = p.gamma;
  rp.g_eff = std::abs(fp.coupling);
  rp.g_phase = rp.g_eff > 0.0 ? std::arg(fp.coupling) : 0.0;
  rp.detuning = fp.detuning_eff;
  rp.n_th = thermal_occupancy(p.omega_m, p.temperature);
  return rp;
}

ReducedParams to_reduced(const PhysicalParams& p, const ClassicalFixedPoint& fp) {
  ReducedParams rp = to_si_linearized(p, fp);
  const double w = p.omega_m;
  rp.kappa /= w;
  rp.gamma /= w;
  rp.g_eff /= w;
  rp.detuning /= w;
  rp.omega_m = 1.0;
  return rp;
}

ReducedParams to_reduced(const PhysicalParams& p) {
  const auto fps = classical_steady_state(p);
  const auto it = std::find_if(fps.begin(), fps.end(), [](const auto& f) { return f.stable; });
  return to_reduced(p, it != fps.end() ? *it : fps.front());
}

double cooperativity(const ReducedParams& rp) {
  return 4.0 * rp.g_eff * rp.g_eff / (rp.gamma * rp.kappa);
}

bool stability_check(const ReducedParams& rp) {
  if (!(rp.detuning < 0.0))
    throw UnsupportedRegime("stability_check: the stability bound is defined only for red "
                            "detuning (detuning < 0)");
  const double d = rp.detuning;
  const double bound = -(4.0 * d * d + rp.kappa * rp.kappa) * rp.omega_m / (16.0 * d);
  return rp.g_eff * rp.g_eff < bound;
}

}  // namespace optocool

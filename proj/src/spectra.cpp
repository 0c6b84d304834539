#include "optocool/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "optocool/constants.hpp"
#include "optocool/errors.hpp"

namespace optocool::spectra {

namespace {
constexpr std::complex<double> I(0.0, 1.0);
}

std::string_view to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::force: return "force";
    case SpectrumKind::mechanical: return "mechanical";
    case SpectrumKind::self_energy: return "self_energy";
  }
  return "unknown";
}

std::complex<double> cavity_response(double omega, const ReducedParams& rp) {
  return 1.0 / (-I * (omega + rp.detuning) + 0.5 * rp.kappa);
}

double force_spectrum(double omega, const ReducedParams& rp) {
  return rp.kappa * rp.g_eff * rp.g_eff * std::norm(cavity_response(omega, rp));
}

double force_spectrum_normalized(double omega, const ReducedParams& rp) {
  const double peak = 4.0 * rp.g_eff * rp.g_eff / rp.kappa;
  return peak > 0.0 ? force_spectrum(omega, rp) / peak : 0.0;
}

double force_spectrum_si(double omega, const PhysicalParams& p, const ClassicalFixedPoint& fp) {
  const double kappa = p.kappa_total();
  const auto chi = 1.0 / (-I * (omega + fp.detuning_eff) + 0.5 * kappa);
  const double x_zpf = zero_point_fluctuation(p.m_eff, p.omega_m);
  return kappa * std::norm(fp.coupling * chi) / (x_zpf * x_zpf);
}

std::complex<double> self_energy(double omega, const ReducedParams& rp) {
  const double g2 = rp.g_eff * rp.g_eff;
  return -I * g2 * (cavity_response(omega, rp) - std::conj(cavity_response(-omega, rp)));
}

CoolingRates scattering_rates(const ReducedParams& rp) {
  const double g2 = rp.g_eff * rp.g_eff;
  const double k2 = 0.25 * rp.kappa * rp.kappa;
  const double wm = rp.omega_m;
  const double dp = wm + rp.detuning;
  const double dm = wm - rp.detuning;
  const auto sigma = self_energy(wm, rp);

  CoolingRates r;
  r.a_minus = g2 * rp.kappa / (dp * dp + k2);
  r.a_plus = g2 * rp.kappa / (dm * dm + k2);
  r.gamma_opt = -2.0 * sigma.imag();
  r.spring_shift = sigma.real();
  return r;
}

double spring_shift_explicit(const ReducedParams& rp) {
  const double wm = rp.omega_m;
  const auto bracket = 1.0 / (-I * (wm + rp.detuning) + 0.5 * rp.kappa) -
                       1.0 / (-I * (wm - rp.detuning) + 0.5 * rp.kappa);
  return rp.g_eff * rp.g_eff * bracket.imag();
}

double optical_damping_explicit(const ReducedParams& rp) {
  const double wm = rp.omega_m;
  const auto bracket = 1.0 / (-I * (wm + rp.detuning) + 0.5 * rp.kappa) -
                       1.0 / (-I * (wm - rp.detuning) + 0.5 * rp.kappa);
  return 2.0 * rp.g_eff * rp.g_eff * bracket.real();
}

double mechanical_spectrum(double omega, const ReducedParams& rp) {
  const double numer =
      rp.gamma * rp.n_th + rp.kappa * rp.g_eff * rp.g_eff * std::norm(cavity_response(-omega, rp));
  const auto denom = I * omega - I * (rp.omega_m + self_energy(omega, rp)) - 0.5 * rp.gamma;
  return numer / std::norm(denom);
}

CoolingLimit cooling_limit(const ReducedParams& rp) {
  const auto rates = scattering_rates(rp);
  if (!(rates.gamma_opt > 0.0) || !(rp.detuning < 0.0))
    throw HeatingRegime("cooling_limit: optical damping is not positive (requires red detuning "
                        "and nonzero coupling)");
  CoolingLimit out;
  out.n_classical = rp.gamma * rp.n_th / rates.gamma_opt;
  out.n_quantum = rates.a_plus / rates.gamma_opt;
  out.n_f = out.n_classical + out.n_quantum;
  const double wm = rp.omega_m;
  const double s = wm + rp.detuning;
  out.n_quantum_simplified =
      (4.0 * s * s + rp.kappa * rp.kappa) / (-16.0 * wm * rp.detuning);
  return out;
}

QuantumLimit min_quantum_limit(double kappa, double omega_m) {
  if (!(kappa > 0.0)) throw DomainError("min_quantum_limit: kappa must be > 0");
  const double r = kappa / omega_m;
  QuantumLimit q;
  // ½(sqrt(1 + r²/4) − 1) written without cancellation for small r.
  const double x = 0.25 * r * r;
  q.n_min = 0.5 * x / (std::sqrt(1.0 + x) + 1.0);
  q.detuning_opt = -std::sqrt(omega_m * omega_m + 0.25 * kappa * kappa);
  return q;
}

std::vector<double> frequency_grid(const ReducedParams& rp, const GridSpec& spec) {
  const double span = 2.0 * std::max(rp.omega_m, std::abs(rp.detuning));
  const double lo = spec.omega_min.value_or(-span);
  const double hi = spec.omega_max.value_or(span);
  if (!(hi > lo) || spec.points < 2) throw ConfigError("grid: need omega_max > omega_min and points >= 2");

  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(spec.points + spec.dense_points));
  for (int i = 0; i < spec.points; ++i)
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (spec.points - 1));
  if (spec.dense_points >= 2 && spec.dense_halfwidth > 0.0) {
    const double a = rp.omega_m - spec.dense_halfwidth;
    const double b = rp.omega_m + spec.dense_halfwidth;
    for (int i = 0; i < spec.dense_points; ++i)
      grid.push_back(a + (b - a) * static_cast<double>(i) / (spec.dense_points - 1));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  return grid;
}

SpectrumSeries sample(SpectrumKind kind, const ReducedParams& rp, const std::vector<double>& omegas) {
  SpectrumSeries s;
  s.kind = kind;
  s.omegas = omegas;
  s.values.reserve(omegas.size());
  for (double w : omegas) {
    switch (kind) {
      case SpectrumKind::force: s.values.emplace_back(force_spectrum(w, rp)); break;
      case SpectrumKind::mechanical: s.values.emplace_back(mechanical_spectrum(w, rp)); break;
      case SpectrumKind::self_energy: s.values.push_back(self_energy(w, rp)); break;
    }
  }
  return s;
}

double integrated_occupancy(const ReducedParams& rp, const std::vector<double>& omegas) {
  double acc = 0.0;
  double prev = mechanical_spectrum(omegas.front(), rp);
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    const double cur = mechanical_spectrum(omegas[i], rp);
    acc += 0.5 * (prev + cur) * (omegas[i] - omegas[i - 1]);
    prev = cur;
  }
  return acc / (2.0 * constants::pi);
}

}  // namespace optocool::spectra

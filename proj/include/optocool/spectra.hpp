#pragma once

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include "optocool/params.hpp"

namespace optocool::spectra {

enum class SpectrumKind { force, mechanical, self_energy };

std::string_view to_string(SpectrumKind kind);

/// Samples on a strictly increasing frequency grid. `values` holds the real
/// spectrum for force/mechanical; self-energy samples are complex.
struct SpectrumSeries {
  std::vector<double> omegas;
  std::vector<std::complex<double>> values;
  SpectrumKind kind = SpectrumKind::force;
};

struct CoolingRates {
  double a_minus = 0.0;  // phonon absorption A₋
  double a_plus = 0.0;   // phonon emission A₊
  double gamma_opt = 0.0;
  double spring_shift = 0.0;
};

struct CoolingLimit {
  double n_f = 0.0;
  double n_classical = 0.0;
  double n_quantum = 0.0;             // A₊/Γ_opt
  double n_quantum_simplified = 0.0;  // (4(ω_m+Δ′)² + κ²)/(−16 ω_m Δ′)
};

struct QuantumLimit {
  double n_min = 0.0;
  double detuning_opt = 0.0;
};

/// χ(ω) = 1/(−i(ω+Δ′) + κ/2).
std::complex<double> cavity_response(double omega, const ReducedParams& rp);

/// S_FF(ω) = κ|Gχ(ω)|² in units of 1/x_zpf².
double force_spectrum(double omega, const ReducedParams& rp);

/// S_FF normalized to its peak 4|G|²/κ.
double force_spectrum_normalized(double omega, const ReducedParams& rp);

/// S_FF in N²/Hz-style SI units: κ|Gχ|²/x_zpf², evaluated directly from the
/// physical description at the given fixed point (omega in rad/s).
double force_spectrum_si(double omega, const PhysicalParams& params,
                         const ClassicalFixedPoint& fp);

/// Σ(ω) = −i|G|²[χ(ω) − χ*(−ω)].
std::complex<double> self_energy(double omega, const ReducedParams& rp);

/// A∓ = |G|²κ/((ω_m ± Δ′)² + κ²/4); Γ_opt and δω_m from Σ(ω_m).
CoolingRates scattering_rates(const ReducedParams& rp);

/// δω_m and Γ_opt from the explicit bracketed formulas (second route to the
/// values in CoolingRates).
double spring_shift_explicit(const ReducedParams& rp);
double optical_damping_explicit(const ReducedParams& rp);

/// S_bb(ω) = (γ n_th + κ|Gχ(−ω)|²) / |iω − i(ω_m + Σ(ω)) − γ/2|².
/// Valid near ω ≈ ω_m (|ω − ω_m| ≲ κ), where the b† terms are negligible.
double mechanical_spectrum(double omega, const ReducedParams& rp);

/// n_f = (γ n_th + A₊)/Γ_opt with its classical/quantum split.
/// Throws HeatingRegime when Γ_opt ≤ 0.
CoolingLimit cooling_limit(const ReducedParams& rp);

/// Minimal quantum limit ½(sqrt(1 + κ²/4ω_m²) − 1) at Δ′ = −sqrt(ω_m² + κ²/4).
QuantumLimit min_quantum_limit(double kappa, double omega_m = 1.0);

/// Default grid: `points` samples over [−2, 2]·max(ω_m, |Δ′|), optionally
/// merged with a dense window of `dense_points` over ω_m ± `dense_halfwidth`.
struct GridSpec {
  int points = 2001;
  std::optional<double> omega_min;
  std::optional<double> omega_max;
  double dense_halfwidth = 0.0;
  int dense_points = 0;
};
std::vector<double> frequency_grid(const ReducedParams& rp, const GridSpec& spec = {});

SpectrumSeries sample(SpectrumKind kind, const ReducedParams& rp,
                      const std::vector<double>& omegas);

/// (1/2π) ∫ S_bb dω by the trapezoid rule on the given grid.
double integrated_occupancy(const ReducedParams& rp, const std::vector<double>& omegas);

}  // namespace optocool::spectra

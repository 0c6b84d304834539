#pragma once

#include <complex>
#include <vector>

namespace optocool {

/// System description in SI units. Rates and frequencies are angular (rad/s).
struct PhysicalParams {
  double omega_m = 0.0;   // mechanical frequency
  double omega_c = 0.0;   // cavity frequency
  double omega_in = 0.0;  // drive laser frequency
  double kappa_0 = 0.0;   // intrinsic cavity decay
  double kappa_ex = 0.0;  // external coupling decay
  double gamma = 0.0;     // mechanical damping
  double g = 0.0;         // single-photon coupling
  double m_eff = 0.0;     // effective mass (kg)
  double power = 0.0;     // input power (W)
  double phase = 0.0;     // drive phase (rad)
  double temperature = 0.0;  // bath temperature (K)

  double kappa_total() const { return kappa_0 + kappa_ex; }
  /// Bare detuning Δ = ω_in − ω_c.
  double detuning() const { return omega_in - omega_c; }

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Linearized-system parameters. All engines work in units of `omega_m`, which
/// is 1 after `to_reduced`; setting it to the SI value evaluates the same
/// formulas in rad/s.
struct ReducedParams {
  double kappa = 0.0;      // cavity decay κ
  double gamma = 0.0;      // mechanical damping γ
  double g_eff = 0.0;      // |G|, field-enhanced coupling
  double detuning = 0.0;   // effective detuning Δ′
  double n_th = 0.0;       // bath phonon number
  double g_phase = 0.0;    // arg G; cooling observables do not depend on it
  double omega_m = 1.0;

  std::complex<double> coupling() const { return std::polar(g_eff, g_phase); }

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct ClassicalFixedPoint {
  std::complex<double> alpha;  // intracavity amplitude
  std::complex<double> beta;   // mechanical amplitude
  double detuning_eff = 0.0;   // Δ′ in rad/s
  bool stable = true;
  int branch_count = 1;
  /// G = α g (rad/s).
  std::complex<double> coupling = 0.0;
};

/// Bose–Einstein occupancy (exp(ħω/k_B T) − 1)^−1; 0 at T = 0.
double thermal_occupancy(double omega_m, double temperature);

/// Ω = sqrt(κ_ex P / (ħ ω_in)) e^{iφ}.
std::complex<double> drive_amplitude(double power, double omega_in, double kappa_ex,
                                     double phase);

/// x_zpf = sqrt(ħ / (2 m_eff ω_m)).
double zero_point_fluctuation(double m_eff, double omega_m);

/// All self-consistent classical fixed points, ordered by increasing |α|².
/// The intensity n = |α|² obeys the cubic
///   η² n³ + 2Δη n² + (Δ² + κ²/4) n − |Ω|² = 0,   η = 2g²ω_m / (ω_m² + γ²/4),
/// whose real positive roots are polished by Newton iteration on the full
/// complex steady-state equations. Throws NoConvergence on failure.
std::vector<ClassicalFixedPoint> classical_steady_state(const PhysicalParams& params);

/// Residuals of the two steady-state equations at (α, β) for the given system.
struct FixedPointResidual {
  double alpha = 0.0;
  double beta = 0.0;
};
FixedPointResidual fixed_point_residual(const PhysicalParams& params,
                                        const ClassicalFixedPoint& fp);

/// Dimensionless reduction (ω_m = 1) around a chosen fixed point.
ReducedParams to_reduced(const PhysicalParams& params, const ClassicalFixedPoint& fp);

/// Reduction around the lowest-intensity stable branch.
ReducedParams to_reduced(const PhysicalParams& params);

/// The same linearized system with rates kept in rad/s (omega_m = SI value).
ReducedParams to_si_linearized(const PhysicalParams& params, const ClassicalFixedPoint& fp);

/// C = 4|G|²/(γκ).
double cooperativity(const ReducedParams& rp);

/// Red-detuned stability bound |G|² < −(4Δ′² + κ²) ω_m / (16 Δ′).
/// Throws UnsupportedRegime for Δ′ ≥ 0.
bool stability_check(const ReducedParams& rp);

}  // namespace optocool

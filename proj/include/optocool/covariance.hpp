#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "optocool/params.hpp"

namespace optocool::covariance {

using StateVector = Eigen::Matrix<double, 10, 1>;
using GeneratorMatrix = Eigen::Matrix<double, 10, 10>;

/// The six second moments of the displaced fluctuation operators a₁, b₁.
/// Packed layout (10 reals): n_a, n_b, Re/Im ⟨a†b⟩, Re/Im ⟨ab⟩, Re/Im ⟨a²⟩, Re/Im ⟨b²⟩.
struct MomentState {
  double n_a = 0.0;
  double n_b = 0.0;
  std::complex<double> adag_b;
  std::complex<double> a_b;
  std::complex<double> a_sq;
  std::complex<double> b_sq;

  /// Optical vacuum, mechanical thermal state.
  static MomentState thermal(double n_th) {
    MomentState s;
    s.n_b = n_th;
    return s;
  }

  StateVector pack() const;
  static MomentState unpack(const StateVector& v);
};

/// Right-hand sides of the six moment equations, returned as a tangent in the
/// same layout. n_a and n_b tangents are real by construction.
MomentState moment_derivatives(const MomentState& state, const ReducedParams& rp);

/// dx/dt = matrix·x + drive in the packed layout. The drive holds the
/// inhomogeneous γ n_th and quantum-backaction sources.
struct Generator {
  GeneratorMatrix matrix;
  StateVector drive;
};
Generator assemble_generator(const ReducedParams& rp);

struct Trajectory {
  std::vector<double> times;
  std::vector<MomentState> states;
  ReducedParams params;
};

enum class Backend { rk45, expm };

/// strict: refuse parameters that fail stability_check. warn: integrate anyway
/// (short-time studies of unstable or blue-detuned settings).
enum class StabilityPolicy { strict, warn };

struct EvolveOptions {
  double dt_max = 0.05;
  /// Output spacing; 0 means dt_max.
  double sample_dt = 0.0;
  double rtol = 1e-9;
  double atol = 1e-12;
  Backend backend = Backend::rk45;
  StabilityPolicy policy = StabilityPolicy::strict;
  /// Throw PhysicalityViolation if a sampled state breaks the Heisenberg bound.
  bool check_physicality = true;
};

/// Piecewise-constant κ(t): κ = segments[i].kappa on [previous t_end, t_end).
struct KappaSegment {
  double t_end = 0.0;
  double kappa = 0.0;
};

/// Integrates the moment equations from t = 0 to t_final, sampled on a uniform grid.
Trajectory evolve(const MomentState& initial, const ReducedParams& rp, double t_final,
                  const EvolveOptions& opts = {});

/// Same integration with κ replaced by a piecewise-constant schedule. The
/// integrator restarts at every segment edge. A single segment reproduces
/// `evolve` exactly.
Trajectory evolve_piecewise(const MomentState& initial, const ReducedParams& rp,
                            const std::vector<KappaSegment>& segments, double t_final,
                            const EvolveOptions& opts = {});

/// Solves the 10×10 steady-state system by LU with partial pivoting.
/// Throws UnstableParams / UnsupportedRegime outside the stable red-detuned
/// regime and SingularSystem if the factorization is rank-deficient.
MomentState steady_state_moments(const ReducedParams& rp);

/// Closed-form steady-state occupancies, derived for Δ′ = −ω_m and C ≫ 1.
struct ClosedForms {
  double full = 0.0;
  double resolved = 0.0;
  double weak = 0.0;
  double strong = 0.0;
  /// Set when Δ′ ≠ −ω_m, where none of these forms apply.
  bool off_design_point = false;
};
ClosedForms nstd_closed_form(const ReducedParams& rp);

/// n_th(γ + Γe^{−Γt})/(γ+Γ) + (κ²/16ω_m²)(1 − e^{−Γt}),  Γ = 4|G|²/κ.
double nb_weak_analytic(double t, const ReducedParams& rp);

/// Rabi-oscillating strong-coupling approximation with envelope e^{−(κ+γ)t/2}.
/// Throws DomainError if 2|G| > ω_m.
double nb_strong_analytic(double t, const ReducedParams& rp);

/// ω± = sqrt(ω_m² ± 2|G|ω_m). Throws DomainError if 2|G| > ω_m.
std::pair<double, double> normal_mode_freqs(const ReducedParams& rp);

/// 4×4 quadrature covariance in the vacuum-variance-1 convention
/// (x = a + a†, p = −i(a − a†)), ordered (x_a, p_a, x_b, p_b).
Eigen::Matrix4d covariance_matrix(const MomentState& s);

/// Smallest symplectic eigenvalue of covariance_matrix(s); ≥ 1 for a physical state.
double min_symplectic_eigenvalue(const MomentState& s);

struct PhysicalityReport {
  double min_symplectic = 0.0;
  double min_occupation = 0.0;
  bool ok = true;
};
/// Checks n_a, n_b ≥ −1e−9 and symplectic eigenvalues ≥ 1 − 1e−6.
PhysicalityReport check_physicality(const MomentState& s);

}  // namespace optocool::covariance

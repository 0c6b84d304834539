#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "optocool/covariance.hpp"
#include "optocool/params.hpp"

namespace optocool::lindblad {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Sparse = Eigen::SparseMatrix<Complex>;

/// Truncated two-mode Fock space. Basis index of |n photons, m phonons⟩ is
/// n·dim_b + m (photon ⊗ phonon).
struct FockConfig {
  int dim_a = 10;
  int dim_b = 20;
  std::size_t budget = 4096;

  int side() const { return dim_a * dim_b; }
  int index(int n, int m) const { return n * dim_b + m; }
  /// Throws ConfigError for cutoffs < 2 and BudgetExceeded above the budget.
  void validate() const;
};

struct HealthReport {
  double hermiticity_error = 0.0;  // max |ρ − ρ†|
  double trace_error = 0.0;        // |tr ρ − 1|
  double min_eigenvalue = 0.0;
  double top_photon_population = 0.0;
  double top_phonon_population = 0.0;

  bool truncation_ok() const {
    return top_photon_population < 1e-4 && top_phonon_population < 1e-4;
  }
  bool ok() const {
    return hermiticity_error < 1e-10 && trace_error < 1e-8 && min_eigenvalue >= -1e-8;
  }
};

class DensityMatrix {
 public:
  DensityMatrix(FockConfig cfg, Matrix entries);

  /// Optical vacuum ⊗ phonon vacuum.
  static DensityMatrix vacuum(const FockConfig& cfg);
  /// Thermal(n_a) ⊗ thermal(n_b), each truncated and renormalized.
  static DensityMatrix thermal(const FockConfig& cfg, double n_a, double n_b);
  /// Coherent |α⟩ ⊗ |β⟩, truncated and renormalized.
  static DensityMatrix coherent(const FockConfig& cfg, Complex alpha, Complex beta);

  const FockConfig& config() const { return cfg_; }
  const Matrix& entries() const { return rho_; }
  double trace() const { return trace_; }

  /// `with_spectrum` computes the minimum eigenvalue (O(side³)).
  HealthReport health(bool with_spectrum = true) const;

 private:
  FockConfig cfg_;
  Matrix rho_;
  double trace_;
};

/// Ladder operators a ⊗ 1 and 1 ⊗ b on the truncated space.
struct LadderOperators {
  Sparse a;
  Sparse b;
};
LadderOperators ladder_operators(const FockConfig& cfg);

/// Linearized Hamiltonian −Δ′a†a + ω_m b†b + (G a† + G* a)(b + b†).
Sparse hamiltonian(const ReducedParams& rp, const FockConfig& cfg);

/// Complex d×d matrix in column-major order, stored as separate real and
/// imaginary planes with `pad` zeros before and after each plane. The kernel
/// reads neighbours across column boundaries through the padding. Columns
/// are spaced an odd number of cache lines apart and the planes are skewed
/// so that the kernel's many streams do not collide in cache sets; the
/// spare rows stay zero.
class SplitMatrix {
 public:
  SplitMatrix(int side, int pad);
  SplitMatrix(const Matrix& m, int pad);

  int side() const { return side_; }
  Matrix to_matrix() const;
  /// Fills the strict lower triangle with the conjugate of the upper one,
  /// or only the `band` subdiagonals when band >= 0.
  void mirror_upper(int band = -1);

  double* re(int j) { return re_.data() + pad_ + std::ptrdiff_t(j) * ld_; }
  double* im(int j) { return im_.data() + pad_ + skew + std::ptrdiff_t(j) * ld_; }
  const double* re(int j) const { return re_.data() + pad_ + std::ptrdiff_t(j) * ld_; }
  const double* im(int j) const { return im_.data() + pad_ + skew + std::ptrdiff_t(j) * ld_; }
  /// Whole planes, padding included, for elementwise updates.
  std::vector<double>& re_plane() { return re_; }
  std::vector<double>& im_plane() { return im_; }
  const std::vector<double>& re_plane() const { return re_; }
  const std::vector<double>& im_plane() const { return im_; }

 private:
  static constexpr int skew = 24;
  int side_, pad_, ld_;
  std::vector<double> re_, im_;
};

/// Master-equation generator: −i[H, ρ] + κD[a]ρ + γ(n_th+1)D[b]ρ + γn_th D[b†]ρ.
/// Applied on the fly as −i(H_eff ρ − ρ H_eff†) + Σ_k J_k ρ J_k† with
/// H_eff = H − (i/2)Σ J_k†J_k.
class Generator {
 public:
  Generator(const ReducedParams& rp, const FockConfig& cfg);

  const FockConfig& config() const { return cfg_; }
  const ReducedParams& params() const { return rp_; }

  /// L(ρ) for any square matrix ρ.
  Matrix apply(const Matrix& rho) const;
  /// L(ρ) assuming ρ is Hermitian. Direct index kernel over the upper
  /// triangle; the result is exactly Hermitian.
  Matrix apply_hermitian(const Matrix& rho) const;
  /// Same, writing into a preallocated `out` (must not alias `rho`).
  void apply_hermitian_into(const Matrix& rho, Matrix& out) const;
  /// Hermitian kernel on split storage; both operands need padding() and
  /// must not alias.
  void apply_split(const SplitMatrix& rho, SplitMatrix& out) const;
  /// Fused Runge–Kutta stage with v = L(ρ), upper triangle only:
  /// next = base + h·v (when next is non-null) and acc = (fresh ? base : acc) + w·v.
  /// Callers mirror the results (padding() subdiagonals suffice) before the
  /// next application.
  void rk_stage(const SplitMatrix& rho, const SplitMatrix& base, double h, SplitMatrix* next,
                SplitMatrix& acc, double w, bool fresh) const;
  int padding() const { return cfg_.dim_b + 1; }

  /// Sparse superoperator acting on column-stacked vec(ρ). Throws
  /// BudgetExceeded above side 1024.
  Sparse superoperator() const;

 private:
  FockConfig cfg_;
  ReducedParams rp_;
  Sparse h_eff_;
  std::vector<Sparse> jumps_;  // rates folded in

  // Calls emit(j, i0, i1, re, im) with L(ρ)_ij for i ∈ [i0, i1], i ≤ j.
  template <class Emit>
  void sweep(const SplitMatrix& rho, Emit&& emit) const;

  // Kernel tables, per basis index i = (n, m), real and imaginary parts apart.
  // coupling[k][i] = ⟨i|H_eff|i + offset_[k]⟩, zero where the neighbour lies
  // outside the truncation.
  Eigen::VectorXd diag_re_, diag_im_;  // ⟨i|H_eff|i⟩
  std::array<Eigen::VectorXd, 4> coupling_re_, coupling_im_;
  std::array<int, 4> offset_{};
  Eigen::VectorXd jump_a_, jump_b_, jump_bd_;  // sqrt(rate·level) factors
};

/// Throws BudgetExceeded when dim_a·dim_b is over budget.
Generator build_generator(const ReducedParams& rp, const FockConfig& cfg);

struct EvolveOptions {
  double dt = 0.01;
  /// Snapshot spacing; rounded to a whole number of steps.
  double sample_dt = 0.5;
  bool keep_matrices = false;
  /// Compute min eigenvalues in snapshot health reports.
  bool check_positivity = true;
};

struct Snapshot {
  double t = 0.0;
  covariance::MomentState moments;
  HealthReport health;
};

struct EvolveResult {
  std::vector<Snapshot> snapshots;
  std::vector<DensityMatrix> matrices;  // filled when keep_matrices
  DensityMatrix final_state;
  std::size_t renormalizations = 0;
  double total_trace_correction = 0.0;
  double max_step_trace_drift = 0.0;
  /// Set when any snapshot has more than 1e−4 population in a top level.
  bool truncation_warning = false;
  double dt_used = 0.0;
};

/// Fixed-step RK4 on the master equation. The step is capped at
/// 0.01/max(ω_m, κ, |Δ′|). Trace drift above 1e−10 is renormalized and
/// recorded; a per-step drift above 1e−6 throws StepTooLarge.
EvolveResult evolve_rho(const DensityMatrix& rho0, const Generator& gen, double t_final,
                        const EvolveOptions& opts = {});

/// Expectation values of a†a, b†b, a†b, ab, a², b².
covariance::MomentState moments_from_rho(const DensityMatrix& rho);

/// d⟨O⟩/dt = tr(O L(ρ)) for the same six operators.
covariance::MomentState expectation_derivatives(const DensityMatrix& rho, const Generator& gen);

/// Plain-text dump: two header lines, then one row per line as
/// space-separated "re im" pairs, shortest round-trip formatting.
void write_matrix(std::ostream& out, const DensityMatrix& rho);
DensityMatrix read_matrix(std::istream& in);

}  // namespace optocool::lindblad

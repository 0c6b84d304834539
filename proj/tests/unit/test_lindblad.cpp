#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "gen.hpp"
#include "optocool/covariance.hpp"
#include "optocool/errors.hpp"
#include "optocool/lindblad.hpp"

using namespace optocool;
using namespace optocool::lindblad;
using covariance::MomentState;

namespace {

FockConfig fock(int da, int db) {
  FockConfig c;
  c.dim_a = da;
  c.dim_b = db;
  return c;
}

ReducedParams small(double g, double n_th, double kappa = 0.05) {
  ReducedParams rp;
  rp.kappa = kappa;
  rp.gamma = 1e-3;
  rp.g_eff = g;
  rp.detuning = -1.0;
  rp.n_th = n_th;
  return rp;
}

// Random density matrix A A† / tr.
Matrix random_rho(gen::Rng& r, int side) {
  Matrix a(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) a(i, j) = Complex(r.uniform(-1, 1), r.uniform(-1, 1));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Gaussian test state U (ρ_a ⊗ ρ_b) U† with U = exp(−iK), K quadratic.
DensityMatrix gaussian(gen::Rng& r, const FockConfig& cfg) {
  const auto ops = ladder_operators(cfg);
  const Matrix a = Matrix(ops.a), b = Matrix(ops.b);
  auto amp = [&](double s) { return Complex(r.uniform(-s, s), r.uniform(-s, s)); };
  Matrix k = amp(0.3) * a.adjoint() * b + amp(0.08) * a * b + amp(0.08) * a * a +
             amp(0.05) * b * b;
  k += Matrix(k.adjoint());
  const Matrix u = (Complex(0.0, -1.0) * k).exp();
  const auto th = DensityMatrix::thermal(cfg, r.uniform(0.0, 0.05), r.uniform(0.0, 0.12));
  return {cfg, u * th.entries() * u.adjoint()};
}

}  // namespace

TEST_CASE("fock config validation") {
  CHECK_THROWS_AS(fock(1, 5).validate(), ConfigError);
  CHECK_THROWS_AS(fock(5, 1).validate(), ConfigError);
  CHECK_NOTHROW(fock(2, 2).validate());
  CHECK_THROWS_AS(fock(64, 65).validate(), BudgetExceeded);
  CHECK_NOTHROW(fock(64, 64).validate());
  auto big = fock(100, 100);
  big.budget = 10000;
  CHECK_NOTHROW(big.validate());
  CHECK_THROWS_AS(build_generator(small(0.05, 1.0), fock(80, 80)), BudgetExceeded);
  CHECK_THROWS_AS(build_generator(small(0.05, 1.0), fock(40, 40)).superoperator(),
                  BudgetExceeded);
}

TEST_CASE("vacuum is a fixed point without coupling and bath") {
  const auto cfg = fock(6, 7);
  const auto gen = build_generator(small(0.0, 0.0), cfg);
  const auto vac = DensityMatrix::vacuum(cfg);
  CHECK(max_abs(gen.apply(vac.entries())) == 0.0);
  CHECK(max_abs(gen.apply_hermitian(vac.entries())) == 0.0);
}

TEST_CASE("generator is trace-free and Hermiticity-preserving; three paths agree") {
  gen::Rng r(21);
  for (int draw = 0; draw < 25; ++draw) {
    const auto cfg = fock(int(r.integer(2, 6)), int(r.integer(2, 7)));
    auto rp = r.red_detuned();
    rp.g_eff = std::min(rp.g_eff, 0.3);
    rp.n_th = std::min(rp.n_th, 3.0);
    const auto gen = build_generator(rp, cfg);
    const Matrix rho = random_rho(r, cfg.side());
    const Matrix l = gen.apply(rho);
    CHECK(std::abs(l.trace()) < 1e-12);
    CHECK(max_abs(l - l.adjoint()) < 1e-12);

    const Matrix lh = gen.apply_hermitian(rho);
    CHECK(max_abs(lh - l) < 1e-12 * std::max(1.0, max_abs(l)));

    const Eigen::VectorXcd vec = Eigen::Map<const Eigen::VectorXcd>(rho.data(), rho.size());
    const Eigen::VectorXcd lv = gen.superoperator() * vec;
    const Matrix ls = Eigen::Map<const Matrix>(lv.data(), rho.rows(), rho.cols());
    CHECK(max_abs(ls - l) < 1e-12 * std::max(1.0, max_abs(l)));
  }
}

TEST_CASE("split storage round-trips and mirrors") {
  gen::Rng r(5);
  const Matrix rho = random_rho(r, 30);
  const SplitMatrix s(rho, 7);
  CHECK(s.to_matrix() == rho);
  SplitMatrix upper(30, 7);
  for (int j = 0; j < 30; ++j)
    for (int i = 0; i <= j; ++i) {
      upper.re(j)[i] = rho(i, j).real();
      upper.im(j)[i] = rho(i, j).imag();
    }
  upper.mirror_upper(3);
  for (int j = 0; j < 30; ++j)
    for (int i = j; i <= std::min(29, j + 3); ++i)
      CHECK(Complex(upper.re(j)[i], upper.im(j)[i]) == (i == j ? rho(i, j) : std::conj(rho(j, i))));
  upper.mirror_upper();
  CHECK(max_abs(upper.to_matrix() - rho) < 1e-16);
}

TEST_CASE("expectation derivatives reproduce the moment equations on Gaussian states") {
  gen::Rng r(99);
  const auto cfg = fock(15, 15);
  for (int draw = 0; draw < 6; ++draw) {
    ReducedParams rp;
    rp.kappa = r.log_uniform(0.01, 1.0);
    rp.gamma = r.log_uniform(1e-4, 1e-2);
    rp.g_eff = r.uniform(0.0, 0.2);
    rp.g_phase = r.uniform(-M_PI, M_PI);
    rp.detuning = -r.uniform(0.5, 1.5);
    rp.n_th = r.uniform(0.0, 2.0);
    const auto rho = gaussian(r, cfg);
    const auto h = rho.health(false);
    REQUIRE(h.top_photon_population < 1e-9);
    REQUIRE(h.top_phonon_population < 1e-9);
    const auto lhs = expectation_derivatives(rho, build_generator(rp, cfg)).pack();
    const auto rhs = covariance::moment_derivatives(moments_from_rho(rho), rp).pack();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("moment extraction") {
  const auto cfg = fock(12, 16);
  const auto vac = moments_from_rho(DensityMatrix::vacuum(cfg));
  CHECK(vac.pack().cwiseAbs().maxCoeff() == 0.0);

  // Renormalized geometric distribution truncated at 16 levels.
  const auto th = DensityMatrix::thermal(cfg, 0.0, 1.0);
  const double q16 = std::pow(0.5, 16);
  CHECK(moments_from_rho(th).n_b == doctest::Approx(1.0 - 16.0 * q16 / (1.0 - q16)).epsilon(1e-12));
  CHECK(std::abs(moments_from_rho(th).n_b - 1.0) < 3e-4);
  CHECK(th.health().top_phonon_population < 1e-4);

  const Complex alpha(0.6, -0.3), beta(-0.4, 0.5);
  const auto m = moments_from_rho(DensityMatrix::coherent(fock(20, 20), alpha, beta));
  CHECK(m.n_a == doctest::Approx(std::norm(alpha)).epsilon(1e-10));
  CHECK(m.n_b == doctest::Approx(std::norm(beta)).epsilon(1e-10));
  CHECK(std::abs(m.adag_b - std::conj(alpha) * beta) < 1e-10);
  CHECK(std::abs(m.a_b - alpha * beta) < 1e-10);
  CHECK(std::abs(m.a_sq - alpha * alpha) < 1e-10);
  CHECK(std::abs(m.b_sq - beta * beta) < 1e-10);
}

TEST_CASE("thermal phonons in an empty cavity are stationary without coupling") {
  const auto cfg = fock(4, 16);
  const auto gen = build_generator(small(0.0, 1.0), cfg);
  const auto rho0 = DensityMatrix::thermal(cfg, 0.0, 1.0);
  EvolveOptions o;
  o.sample_dt = 2.5;
  const auto res = evolve_rho(rho0, gen, 5.0, o);
  CHECK(max_abs(res.final_state.entries() - rho0.entries()) < 1e-8);
  CHECK(res.snapshots.size() == 3);
}

TEST_CASE("evolution keeps the state healthy and caps the step") {
  const auto cfg = fock(6, 12);
  const auto rp = small(0.1, 0.5);
  const auto gen = build_generator(rp, cfg);
  EvolveOptions o;
  o.dt = 1.0;
  o.sample_dt = 1.0;
  const auto res = evolve_rho(DensityMatrix::thermal(cfg, 0.0, 0.5), gen, 10.0, o);
  CHECK(res.dt_used <= 0.01 + 1e-15);
  CHECK(res.snapshots.size() == 11);
  for (const auto& s : res.snapshots) {
    CHECK(s.health.ok());
    CHECK(s.moments.n_a >= 0.0);
  }
  CHECK(res.max_step_trace_drift < 1e-12);
  CHECK(res.renormalizations == 0);

  // Faster dynamics tighten the cap.
  const auto fast = build_generator(small(0.1, 0.5, 4.0), cfg);
  CHECK(evolve_rho(DensityMatrix::vacuum(cfg), fast, 0.1, o).dt_used <= 0.0025 + 1e-15);
}

TEST_CASE("trace drift is renormalized and recorded") {
  const auto cfg = fock(3, 4);
  Matrix m = DensityMatrix::thermal(cfg, 0.1, 0.2).entries();
  m *= 1.0 + 1e-8;
  const auto res = evolve_rho(DensityMatrix(cfg, m), build_generator(small(0.05, 0.2), cfg), 0.05);
  CHECK(res.renormalizations == 1);
  CHECK(res.total_trace_correction == doctest::Approx(1e-8).epsilon(1e-3));
  CHECK(std::abs(res.final_state.trace() - 1.0) < 1e-12);
}

TEST_CASE("truncation warning on a crowded top level") {
  const auto cfg = fock(3, 4);
  EvolveOptions o;
  o.sample_dt = 0.1;
  const auto res = evolve_rho(DensityMatrix::thermal(cfg, 1.0, 1.0),
                              build_generator(small(0.05, 1.0), cfg), 0.1, o);
  CHECK(res.truncation_warning);
  CHECK_FALSE(res.snapshots.front().health.truncation_ok());
}

TEST_CASE("a strong dissipation pulse empties the cavity") {
  const auto cfg = fock(12, 6);
  const auto rho0 = DensityMatrix::coherent(cfg, {1.5, 0.5}, {0.3, 0.0});
  const double before = moments_from_rho(rho0).n_a;
  const auto rp = small(0.2, 0.2, 50.0);  // κ_pulse·duration = 10
  const auto res = evolve_rho(rho0, build_generator(rp, cfg), 0.2);
  CHECK(res.dt_used <= 0.01 / 50.0 + 1e-15);
  CHECK(moments_from_rho(res.final_state).n_a < 0.01 * before);
}

TEST_CASE("oracle tracks the covariance engine at small occupancy") {
  const auto cfg = fock(8, 16);
  const auto rp = small(0.05, 1.0);
  auto rpc = rp;
  EvolveOptions o;
  o.sample_dt = 1.0;
  o.check_positivity = false;
  const auto res = evolve_rho(DensityMatrix::thermal(cfg, 0.0, 1.0), build_generator(rp, cfg),
                              20.0, o);
  covariance::EvolveOptions co;
  co.sample_dt = 1.0;
  const auto tr = covariance::evolve(MomentState::thermal(1.0), rpc, 20.0, co);
  REQUIRE(tr.states.size() == res.snapshots.size());
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const double nb = tr.states[i].n_b;
    CHECK(std::abs(res.snapshots[i].moments.n_b - nb) <= 0.02 * std::max(1.0, nb));
  }
}

TEST_CASE("matrix dump round-trips exactly") {
  gen::Rng r(3);
  const auto cfg = fock(3, 4);
  const DensityMatrix rho(cfg, random_rho(r, cfg.side()));
  std::stringstream ss;
  write_matrix(ss, rho);
  const std::string text = ss.str();
  CHECK(text.rfind("# optocool density matrix", 0) == 0);
  const auto back = read_matrix(ss);
  CHECK(back.config().dim_a == 3);
  CHECK(back.config().dim_b == 4);
  CHECK(back.entries() == rho.entries());

  std::istringstream no_header("3 4\n");
  CHECK_THROWS_AS(read_matrix(no_header), ConfigError);
  std::istringstream short_rows("# x\n2 2\n1 0 0 0 0 0 0 0\n");
  CHECK_THROWS_AS(read_matrix(short_rows), ConfigError);
  std::istringstream bad_dims("# x\n1 4\n");
  CHECK_THROWS_AS(read_matrix(bad_dims), ConfigError);
}

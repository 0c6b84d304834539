#include "optocool/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "optocool/errors.hpp"
#include "optocool/ode.hpp"

namespace optocool::covariance {

namespace {

constexpr std::complex<double> I(0.0, 1.0);

using Augmented = Eigen::Matrix<double, 11, 11>;

std::vector<double> uniform_times(double t_final, double spacing) {
  const auto intervals =
      static_cast<std::size_t>(std::max(1.0, std::ceil(t_final / spacing - 1e-9)));
  std::vector<double> times(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i)
    times[i] = t_final * static_cast<double>(i) / static_cast<double>(intervals);
  times.back() = t_final;
  return times;
}

Augmented augmented(const Generator& gen) {
  Augmented m = Augmented::Zero();
  m.topLeftCorner<10, 10>() = gen.matrix;
  m.topRightCorner<10, 1>() = gen.drive;
  return m;
}

void record(Trajectory& tr, std::size_t i, const StateVector& x, bool check) {
  tr.states[i] = MomentState::unpack(x);
  if (check) {
    const auto rep = check_physicality(tr.states[i]);
    if (!rep.ok)
      throw PhysicalityViolation("evolve: state at t = " + std::to_string(tr.times[i]) +
                                 " violates the Heisenberg bound (min symplectic eigenvalue " +
                                 std::to_string(rep.min_symplectic) + ", min occupation " +
                                 std::to_string(rep.min_occupation) + ")");
  }
}

}  // namespace

StateVector MomentState::pack() const {
  StateVector v;
  v << n_a, n_b, adag_b.real(), adag_b.imag(), a_b.real(), a_b.imag(), a_sq.real(), a_sq.imag(),
      b_sq.real(), b_sq.imag();
  return v;
}

MomentState MomentState::unpack(const StateVector& v) {
  MomentState s;
  s.n_a = v[0];
  s.n_b = v[1];
  s.adag_b = {v[2], v[3]};
  s.a_b = {v[4], v[5]};
  s.a_sq = {v[6], v[7]};
  s.b_sq = {v[8], v[9]};
  return s;
}

MomentState moment_derivatives(const MomentState& s, const ReducedParams& rp) {
  const auto G = rp.coupling();
  const auto Gc = std::conj(G);
  const double k = rp.kappa;
  const double g = rp.gamma;
  const double d = rp.detuning;
  const double w = rp.omega_m;
  const auto X = s.adag_b;
  const auto Y = s.a_b;
  const auto A = s.a_sq;
  const auto B = s.b_sq;

  MomentState ds;
  ds.n_a = (-I * (G * X - Gc * std::conj(X) + G * std::conj(Y) - Gc * Y)).real() - k * s.n_a;
  ds.n_b = (-I * (-G * X + Gc * std::conj(X) + G * std::conj(Y) - Gc * Y)).real() - g * s.n_b +
           g * rp.n_th;
  ds.adag_b = (-I * (d + w) - 0.5 * (k + g)) * X -
              I * (Gc * s.n_a - Gc * s.n_b + G * std::conj(A) - Gc * B);
  // The lone G is the quantum-backaction source from [a, a†] = 1.
  ds.a_b = (I * (d - w) - 0.5 * (k + g)) * Y -
           I * (G * s.n_a + G * s.n_b + G + Gc * A + G * B);
  ds.a_sq = (2.0 * I * d - k) * A - 2.0 * I * G * (Y + std::conj(X));
  ds.b_sq = (-2.0 * I * w - g) * B - 2.0 * I * (Gc * Y + G * X);
  return ds;
}

Generator assemble_generator(const ReducedParams& rp) {
  Generator gen;
  gen.drive = moment_derivatives(MomentState{}, rp).pack();
  for (int i = 0; i < 10; ++i) {
    StateVector e = StateVector::Zero();
    e[i] = 1.0;
    gen.matrix.col(i) = moment_derivatives(MomentState::unpack(e), rp).pack() - gen.drive;
  }
  return gen;
}

Trajectory evolve(const MomentState& initial, const ReducedParams& rp, double t_final,
                  const EvolveOptions& opts) {
  return evolve_piecewise(initial, rp, {KappaSegment{t_final, rp.kappa}}, t_final, opts);
}

Trajectory evolve_piecewise(const MomentState& initial, const ReducedParams& rp,
                            const std::vector<KappaSegment>& segments, double t_final,
                            const EvolveOptions& opts) {
  rp.validate();
  if (!(t_final > 0.0)) throw ConfigError("t_final: must be > 0");
  if (!(opts.dt_max > 0.0)) throw ConfigError("dt_max: must be > 0");
  if (segments.empty() || segments.back().t_end < t_final)
    throw ConfigError("kappa schedule does not cover [0, t_final]");
  for (std::size_t i = 1; i < segments.size(); ++i)
    if (!(segments[i].t_end > segments[i - 1].t_end))
      throw ConfigError("kappa schedule edges must be strictly increasing");

  if (opts.policy == StabilityPolicy::strict && !stability_check(rp))
    throw UnstableParams("evolve: parameters violate the red-detuned stability bound "
                         "|G|^2 < -(4D'^2 + k^2) w_m / (16 D')");

  Trajectory tr;
  tr.params = rp;
  tr.times = uniform_times(t_final, opts.sample_dt > 0.0 ? opts.sample_dt : opts.dt_max);
  tr.states.resize(tr.times.size());

  StateVector x = initial.pack();
  record(tr, 0, x, opts.check_physicality);

  const ode::Tolerances tol{opts.rtol, opts.atol, 1e-12};
  const double edge_slack = 1e-12 * t_final;
  double t = 0.0;
  std::size_t next = 1;

  for (const auto& seg : segments) {
    const double seg_end = std::min(seg.t_end, t_final);
    if (seg_end <= t) continue;

    ReducedParams local = rp;
    local.kappa = seg.kappa;
    const Generator gen = assemble_generator(local);
    const double scale = std::max({seg.kappa, rp.omega_m, std::abs(rp.detuning)});
    const double h_max = std::min(opts.dt_max, 0.05 / scale);

    if (opts.backend == Backend::rk45) {
      const auto rhs = [&gen](const StateVector& v) -> StateVector {
        return gen.matrix * v + gen.drive;
      };
      ode::DormandPrince<StateVector> stepper(tol, h_max);
      while (next < tr.times.size() && tr.times[next] <= seg_end + edge_slack) {
        stepper.advance(rhs, x, t, tr.times[next]);
        t = tr.times[next];
        record(tr, next++, x, opts.check_physicality);
      }
      if (t < seg_end) {
        stepper.advance(rhs, x, t, seg_end);
        t = seg_end;
      }
    } else {
      const Augmented m = augmented(gen);
      Eigen::Matrix<double, 11, 1> y;
      y << x, 1.0;
      double cached_h = -1.0;
      Augmented cached;
      const auto propagate = [&](double h) {
        if (h != cached_h) {
          cached = (m * h).exp();
          cached_h = h;
        }
        y = cached * y;
      };
      while (next < tr.times.size() && tr.times[next] <= seg_end + edge_slack) {
        propagate(tr.times[next] - t);
        t = tr.times[next];
        x = y.head<10>();
        record(tr, next++, x, opts.check_physicality);
      }
      if (t < seg_end) {
        propagate(seg_end - t);
        t = seg_end;
        x = y.head<10>();
      }
    }
  }
  return tr;
}

MomentState steady_state_moments(const ReducedParams& rp) {
  rp.validate();
  if (!stability_check(rp))
    throw UnstableParams("steady_state_moments: parameters violate the stability bound; no "
                         "steady state exists");
  const Generator gen = assemble_generator(rp);
  const StateVector rhs = -gen.drive;
  Eigen::PartialPivLU<GeneratorMatrix> lu(gen.matrix);
  if (!(lu.rcond() > 1e-14))
    throw SingularSystem("steady_state_moments: moment system is singular (rcond " +
                         std::to_string(lu.rcond()) + ")");
  StateVector x = lu.solve(rhs);
  // One step of iterative refinement.
  x += lu.solve(rhs - gen.matrix * x);
  const double resid = (gen.matrix * x - rhs).norm();
  if (!(resid <= 1e-10 * std::max(rhs.norm(), 1e-300)) && rhs.norm() > 0.0)
    throw SingularSystem("steady_state_moments: residual " + std::to_string(resid) +
                         " exceeds 1e-10 relative");
  return MomentState::unpack(x);
}

ClosedForms nstd_closed_form(const ReducedParams& rp) {
  const double g2 = rp.g_eff * rp.g_eff;
  const double k = rp.kappa;
  const double g = rp.gamma;
  const double w2 = rp.omega_m * rp.omega_m;
  const double k2 = k * k;
  if (16.0 * g2 >= 4.0 * w2 + k2)
    throw DomainError("nstd_closed_form: 16|G|^2 >= 4 w_m^2 + k^2 (pole of the full form)");

  const double thermal = g * rp.n_th;
  ClosedForms f;
  const double classical = thermal == 0.0 ? 0.0 : (4.0 * g2 + k2) / (4.0 * g2 * (k + g)) * thermal;
  f.full = classical + (4.0 * w2 * (k2 + 8.0 * g2) + k2 * (k2 - 8.0 * g2)) /
                           (16.0 * w2 * (4.0 * w2 + k2 - 16.0 * g2));
  const bool below_resolved_pole = 4.0 * g2 < w2;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  f.resolved = below_resolved_pole ? classical + (k2 + 8.0 * g2) / (16.0 * (w2 - 4.0 * g2)) : nan;
  const double cooling_rate = 4.0 * g2 / k;
  f.weak = (thermal == 0.0 ? 0.0 : thermal / (cooling_rate + g)) + k2 / (16.0 * w2);
  f.strong = below_resolved_pole ? thermal / (k + g) + g2 / (2.0 * (w2 - 4.0 * g2)) : nan;
  f.off_design_point = std::abs(rp.detuning + rp.omega_m) > 1e-9 * rp.omega_m;
  return f;
}

double nb_weak_analytic(double t, const ReducedParams& rp) {
  const double rate = 4.0 * rp.g_eff * rp.g_eff / rp.kappa;
  const double decay = std::exp(-rate * t);
  const double quantum = rp.kappa * rp.kappa / (16.0 * rp.omega_m * rp.omega_m);
  return rp.n_th * (rp.gamma + rate * decay) / (rp.gamma + rate) + quantum * (1.0 - decay);
}

double nb_strong_analytic(double t, const ReducedParams& rp) {
  const auto [wp, wm] = normal_mode_freqs(rp);
  const double k = rp.kappa;
  const double g = rp.gamma;
  const double env = std::exp(-0.5 * (k + g) * t);
  const double beat = std::cos((wp - wm) * t);
  const double exchange =
      rp.n_th * (g + 0.5 * env * (k - g + (k + g) * beat)) / (k + g);
  const double g2 = rp.g_eff * rp.g_eff;
  const double backaction = g2 * (1.0 - env * std::cos((wp + wm) * t) * beat) /
                            (2.0 * (rp.omega_m * rp.omega_m - 4.0 * g2));
  return exchange + backaction;
}

std::pair<double, double> normal_mode_freqs(const ReducedParams& rp) {
  const double w = rp.omega_m;
  if (2.0 * rp.g_eff > w)
    throw DomainError("normal_mode_freqs: 2|G| > w_m, the lower normal mode is not oscillatory");
  return {std::sqrt(w * w + 2.0 * rp.g_eff * w), std::sqrt(w * w - 2.0 * rp.g_eff * w)};
}

Eigen::Matrix4d covariance_matrix(const MomentState& s) {
  Eigen::Matrix4d v;
  const double xa = 2.0 * s.a_sq.real() + 2.0 * s.n_a + 1.0;
  const double pa = -2.0 * s.a_sq.real() + 2.0 * s.n_a + 1.0;
  const double xpa = 2.0 * s.a_sq.imag();
  const double xb = 2.0 * s.b_sq.real() + 2.0 * s.n_b + 1.0;
  const double pb = -2.0 * s.b_sq.real() + 2.0 * s.n_b + 1.0;
  const double xpb = 2.0 * s.b_sq.imag();
  const double xx = 2.0 * s.a_b.real() + 2.0 * s.adag_b.real();
  const double xp = 2.0 * s.a_b.imag() + 2.0 * s.adag_b.imag();
  const double px = 2.0 * s.a_b.imag() - 2.0 * s.adag_b.imag();
  const double pp = -2.0 * s.a_b.real() + 2.0 * s.adag_b.real();
  v << xa, xpa, xx, xp,
       xpa, pa, px, pp,
       xx, px, xb, xpb,
       xp, pp, xpb, pb;
  return v;
}

double min_symplectic_eigenvalue(const MomentState& s) {
  const Eigen::Matrix4d v = covariance_matrix(s);
  const double det_a = v.topLeftCorner<2, 2>().determinant();
  const double det_b = v.bottomRightCorner<2, 2>().determinant();
  const double det_c = v.topRightCorner<2, 2>().determinant();
  const double invariant = det_a + det_b + 2.0 * det_c;
  const double det_v = v.determinant();
  const double disc = std::max(0.0, invariant * invariant - 4.0 * det_v);
  // ν₋² = (Δ − sqrt(Δ² − 4 det V))/2, rationalized to avoid cancellation at large occupancy.
  const double denom = invariant + std::sqrt(disc);
  if (!(denom > 0.0)) return 0.0;
  return std::sqrt(std::max(0.0, 2.0 * det_v / denom));
}

PhysicalityReport check_physicality(const MomentState& s) {
  PhysicalityReport r;
  r.min_symplectic = min_symplectic_eigenvalue(s);
  r.min_occupation = std::min(s.n_a, s.n_b);
  r.ok = r.min_symplectic >= 1.0 - 1e-6 && r.min_occupation >= -1e-9;
  return r;
}

}  // namespace optocool::covariance

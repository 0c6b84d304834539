// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gen.hpp"
#include "optocool/covariance.hpp"
#include "optocool/lindblad.hpp"
#include "optocool/modulation.hpp"
#include "optocool/params.hpp"
#include "optocool/spectra.hpp"

using namespace optocool;
using covariance::MomentState;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [!]");
  }
};

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Smallest symplectic eigenvalue seen on any covariance trajectory.
double min_symplectic = INFINITY;

void track(const covariance::Trajectory& tr) {
  for (const auto& s : tr.states)
    min_symplectic = std::min(min_symplectic, covariance::min_symplectic_eigenvalue(s));
}

// Oracle health across every snapshot of every run.
struct OracleHealth {
  double hermiticity = 0.0, trace = 0.0, min_eig = INFINITY;
  int runs = 0;
  bool all_ok = true;
} oracle_health;

void track(const lindblad::EvolveResult& res) {
  ++oracle_health.runs;
  for (const auto& s : res.snapshots) {
    oracle_health.hermiticity = std::max(oracle_health.hermiticity, s.health.hermiticity_error);
    oracle_health.trace = std::max(oracle_health.trace, s.health.trace_error);
    oracle_health.min_eig = std::min(oracle_health.min_eig, s.health.min_eigenvalue);
    oracle_health.all_ok = oracle_health.all_ok && s.health.ok();
  }
}

ReducedParams point(double g, double kappa, double gamma, double n_th) {
  ReducedParams rp;
  rp.kappa = kappa;
  rp.gamma = gamma;
  rp.g_eff = g;
  rp.detuning = -1.0;
  rp.n_th = n_th;
  return rp;
}

covariance::EvolveOptions sampled(double dt) {
  covariance::EvolveOptions o;
  o.sample_dt = dt;
  return o;
}

// Least-squares slope of log(y) against t.
double log_slope(const std::vector<double>& t, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome showcase() {
  Outcome o;
  const auto rp = point(0.3, 0.003, 1e-5, 1e3);
  const double nstd = covariance::nstd_closed_form(rp).full;
  const double nins = modulation::ninsmat_limit(rp);
  o.require(std::abs(nstd - 3.4) <= 0.03 * 3.4, "nstd=" + num(nstd) + " (3.4 +-3%)");
  o.require(nins >= 0.0265 && nins < 0.0305, "ninsmat=" + num(nins) + " (0.027-0.03)");
  o.require(nstd / nins > 100.0, "suppression=" + num(nstd / nins) + " (>100)");
  return o;
}

Outcome quantum_limit() {
  Outcome o;
  gen::Rng r(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto cl = spectra::cooling_limit(r.red_detuned());
    worst = std::max(worst, gen::rel_err(cl.n_quantum, cl.n_quantum_simplified));
  }
  o.require(worst <= 1e-10, "n_f^q forms agree to " + num(worst, 2) + " over 1000 draws");

  const double spacing = 1e-3;
  double worst_arg = 0.0;
  for (double kappa : {0.05, 0.5, 1.0, 3.0, 10.0}) {
    const double expect = -std::sqrt(1.0 + kappa * kappa / 4.0);
    double best = 0.0, best_n = INFINITY;
    for (double d = expect - 1.0; d <= expect + 1.0; d += spacing) {
      auto rp = point(0.01, kappa, 1e-5, 0.0);
      rp.detuning = d;
      const double n = spectra::cooling_limit(rp).n_quantum;
      if (n < best_n) best_n = n, best = d;
    }
    worst_arg = std::max(worst_arg, std::abs(best - expect));
  }
  o.require(worst_arg <= spacing, "argmin off by " + num(worst_arg, 2) + " (grid " +
                                      num(spacing) + ", 5 kappas)");

  double worst_res = 0.0;
  for (double kappa : {0.001, 0.005, 0.01, 0.02, 0.05})
    worst_res = std::max(worst_res, std::abs(spectra::min_quantum_limit(kappa).n_min /
                                                 (kappa * kappa / 16.0) -
                                             1.0));
  o.require(worst_res <= 1e-3, "resolved limit kappa^2/16 to " + num(worst_res, 2));
  return o;
}

Outcome rate_identity() {
  Outcome o;
  gen::Rng r(7);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto rp = r.red_detuned();
    const double from_sigma = -2.0 * spectra::self_energy(rp.omega_m, rp).imag();
    const auto rates = spectra::scattering_rates(rp);
    worst = std::max(worst, gen::rel_err(from_sigma, rates.a_minus - rates.a_plus));
  }
  o.require(worst <= 1e-12, "Gamma_opt vs A- - A+ worst rel " + num(worst, 2) + " over 1e4 draws");
  return o;
}

Outcome covariance_vs_closed_form(double& slowest) {
  Outcome o;
  double worst = 0.0;
  for (double g : {0.005, 0.01, 0.02, 0.1}) {
    const auto rp = point(g, 0.05, 1e-5, 1e3);
    if (cooperativity(rp) < 100.0) o.require(false, "C<100 at G=" + num(g));
    const double nb = covariance::steady_state_moments(rp).n_b;
    worst = std::max(worst, std::abs(nb / covariance::nstd_closed_form(rp).full - 1.0));
  }
  o.require(worst <= 0.05, "steady n_b vs closed form worst " + num(100 * worst, 3) + "%");

  // Weak coupling: G <= kappa/8 keeps the golden-rule rate 4G^2/kappa exact to O((G/kappa)^2).
  for (double g : {0.0025, 0.005}) {
    const auto rp = point(g, 0.05, 1e-5, 1e3);
    const double rate = 4.0 * g * g / rp.kappa;
    const auto t0 = std::chrono::steady_clock::now();
    const auto tr = covariance::evolve(MomentState::thermal(rp.n_th), rp, 3.0 / rate,
                                       sampled(0.05 / rate));
    slowest = std::max(slowest, seconds_since(t0));
    track(tr);
    const double ss = covariance::steady_state_moments(rp).n_b;
    std::vector<double> t, y;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      if (tr.times[i] >= 0.4 / rate) t.push_back(tr.times[i]), y.push_back(tr.states[i].n_b - ss);
    const double fitted = -log_slope(t, y);
    o.require(std::abs(fitted / rate - 1.0) <= 0.10,
              "weak G=" + num(g) + " decay " + num(fitted / rate, 4) + "x 4G^2/kappa");
  }

  // Strong coupling: peaks of the photon-phonon beat.
  {
    const auto rp = point(0.1, 0.05, 1e-5, 1e3);
    const auto [wp, wm] = covariance::normal_mode_freqs(rp);
    const double period = 2.0 * M_PI / (wp - wm), dt = 0.01;
    const auto t0 = std::chrono::steady_clock::now();
    const auto tr =
        covariance::evolve(MomentState::thermal(rp.n_th), rp, 4.6 * period, sampled(dt));
    slowest = std::max(slowest, seconds_since(t0));
    track(tr);
    const double ss = covariance::steady_state_moments(rp).n_b;
    const int half = int(0.25 * period / dt);
    std::vector<double> pt, pv;
    for (int i = half; i + half < int(tr.times.size()); ++i) {
      bool peak = true;
      for (int k = i - half; k <= i + half && peak; ++k)
        peak = tr.states[k].n_b <= tr.states[i].n_b;
      if (!peak) continue;
      // Parabolic refinement through the three samples around the maximum.
      const double a = tr.states[i - 1].n_b, b = tr.states[i].n_b, c = tr.states[i + 1].n_b;
      const double shift = 0.5 * (a - c) / (a - 2.0 * b + c);
      pt.push_back(tr.times[i] + shift * dt);
      pv.push_back(b - 0.25 * (a - c) * shift - ss);
    }
    if (pt.size() < 3) {
      o.require(false, "strong: found " + std::to_string(pt.size()) + " beat peaks");
      return o;
    }
    const double spacing = (pt.back() - pt.front()) / double(pt.size() - 1);
    const double fringe = 2.0 * M_PI / spacing;
    const double envelope = -log_slope(pt, pv);
    const double expect_env = 0.5 * (rp.kappa + rp.gamma);
    o.require(std::abs(envelope / expect_env - 1.0) <= 0.15,
              "strong envelope " + num(envelope, 4) + " vs (kappa+gamma)/2=" + num(expect_env, 4));
    o.require(std::abs(fringe / (wp - wm) - 1.0) <= 0.02,
              "fringe " + num(fringe, 5) + " vs w+ - w- = " + num(wp - wm, 5));
  }
  o.require(slowest < 10.0, "slowest trajectory " + num(slowest, 2) + " s");
  return o;
}

Outcome oracle() {
  Outcome o;
  const auto rp = point(0.05, 0.05, 1e-5, 1.0);
  const double t_final = 40.0;

  auto run = [&](int da, int db, double sample, double& secs) {
    lindblad::FockConfig cfg;
    cfg.dim_a = da;
    cfg.dim_b = db;
    lindblad::EvolveOptions eo;
    eo.sample_dt = sample;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = lindblad::evolve_rho(lindblad::DensityMatrix::thermal(cfg, 0.0, rp.n_th),
                                    lindblad::build_generator(rp, cfg), t_final, eo);
    secs = seconds_since(t0);
    track(res);
    return res;
  };

  double secs = 0.0, secs2 = 0.0;
  const auto res = run(10, 20, 1.0, secs);
  const auto cov = covariance::evolve(MomentState::thermal(rp.n_th), rp, t_final, sampled(1.0));
  track(cov);
  double worst = 0.0;
  for (std::size_t i = 0; i < cov.states.size(); ++i) {
    const double nb = cov.states[i].n_b;
    worst = std::max(worst,
                     std::abs(res.snapshots[i].moments.n_b - nb) / std::max(1.0, nb));
  }
  o.require(worst <= 0.02, "(10,20) max|dn_b|/max(1,n_b)=" + num(worst, 3));
  o.require(!res.truncation_warning, "top-level populations < 1e-4");

  // Same run with both cutoffs doubled, compared on its coarser sample grid.
  const auto big = run(20, 40, 5.0, secs2);
  double drift = 0.0;
  for (std::size_t k = 0; k < big.snapshots.size(); ++k) {
    const double a = res.snapshots[5 * k].moments.n_b, b = big.snapshots[k].moments.n_b;
    drift = std::max(drift, std::abs(a - b) / std::max(1.0, b));
  }
  const double end_a = res.snapshots.back().moments.n_b, end_b = big.snapshots.back().moments.n_b;
  o.require(drift < 0.002, "doubling drift " + num(100 * drift, 3) + "% (n_b(t_final) " +
                               num(end_a, 5) + " -> " + num(end_b, 5) + ")");
  o.require(secs <= 120.0, "(10,20) run " + num(secs, 3) + " s");
  o.require(secs2 <= 120.0, "(20,40) run " + num(secs2, 3) + " s");
  return o;
}

Outcome modulated(double& longest) {
  using namespace modulation;
  Outcome o;
  const auto init = MomentState::thermal(1e3);
  {
    const auto rp = point(0.2, 0.05, 1e-5, 1e3);
    const double limit = covariance::steady_state_moments(rp).n_b;
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = make_schedule(rp, ScheduleMode::single, 1);
    const auto mod = evolve_modulated(init, rp, s, 600.0, sampled(0.05));
    const auto ref = covariance::evolve(init, rp, 600.0, sampled(0.05));
    longest = std::max(longest, seconds_since(t0));
    track(mod);
    track(ref);
    const auto sp = speedup_metric(mod, ref, 1.1 * limit);
    o.require(sp.t_mod <= 12.0, "pulse at " + num(s.pulses()[0].t_start, 4) + ": settles at t=" +
                                    num(sp.t_mod, 4));
    o.require(sp.t_ref >= 300.0, "unmodulated t=" + num(sp.t_ref, 4));
    o.require(sp.ratio >= 25.0 && sp.ratio <= 100.0, "speedup " + num(sp.ratio, 3) + " (50 x/ 2)");

    // Reported alongside: the undamped half-beat pulse time.
    const auto sn = make_schedule(rp, ScheduleMode::single, 1, {}, PulseTiming::normal_mode);
    const auto modn = evolve_modulated(init, rp, sn, 600.0, sampled(0.05));
    const auto spn = speedup_metric(modn, ref, 1.1 * limit);
    o.detail += "; info: pulse at pi/(w+ - w-)=" + num(sn.pulses()[0].t_start, 4) +
                " settles at t=" + num(spn.t_mod, 4);
  }
  for (double kappa : {0.01, 0.02}) {
    const auto rp = point(0.1, kappa, 1e-5, 1e3);
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = make_schedule(rp, ScheduleMode::periodic, 12);
    const auto tr = evolve_modulated(init, rp, s, 200.0, sampled(0.05));
    longest = std::max(longest, seconds_since(t0));
    track(tr);
    const auto st = on_phase_floor(tr, s, 1);
    const double nins = nins_limit(rp);
    const double ss1 = covariance::steady_state_moments(point(0.1, 0.01, 1e-5, 1e3)).n_b;
    const double ss2 = covariance::steady_state_moments(point(0.1, 0.02, 1e-5, 1e3)).n_b;
    o.require(std::abs(st.floor / nins - 1.0) <= 0.3 && st.floor < ss1 && st.floor < ss2,
              "kappa=" + num(kappa) + " floor " + num(st.floor, 4) + " vs nins " + num(nins, 4) +
                  ", steady " + num(ss1, 4) + "/" + num(ss2, 4));
  }
  o.require(longest < 60.0, "slowest run " + num(longest, 2) + " s");
  return o;
}

Outcome matching() {
  Outcome o;
  const double g = modulation::matched_params(3);
  o.require(g == 0.3, "matched_params(3)=" + num(g, 16));
  auto rp = point(g, 0.003, 1e-5, 1e3);
  const auto [wp, wm] = covariance::normal_mode_freqs(rp);
  const double ratio = (wp + wm) / (wp - wm);
  o.require(std::abs(ratio - 3.0) <= 1e-12, "ratio-3=" + num(ratio - 3.0, 2));
  return o;
}

Outcome thermal_vectors() {
  Outcome o;
  const double n1 = thermal_occupancy(2.0 * M_PI * 3.68e9, 20.0);
  const double n2 = thermal_occupancy(2.0 * M_PI * 78e6, 0.65);
  o.require(std::abs(n1 - 113.0) <= 1.0, "3.68 GHz, 20 K: " + num(n1, 5));
  o.require(std::abs(n2 - 173.0) <= 1.0, "78 MHz, 0.65 K: " + num(n2, 5));
  return o;
}

Outcome physicality() {
  Outcome o;
  o.require(min_symplectic >= 1.0 - 1e-6,
            "min symplectic eigenvalue " + num(min_symplectic, 10) + " over all trajectories");
  o.require(oracle_health.all_ok && oracle_health.runs > 0,
            std::to_string(oracle_health.runs) + " oracle runs: hermiticity " +
                num(oracle_health.hermiticity, 2) + ", trace " + num(oracle_health.trace, 2) +
                ", min eigenvalue " + num(oracle_health.min_eig, 2));
  return o;
}

}  // namespace

int main() {
  double slowest_traj = 0.0, longest_mod = 0.0;
  struct Criterion {
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"showcase numbers", 0.1, showcase},
      {"quantum-limit formulas", 1.0, quantum_limit},
      {"rate identity", 1.0, rate_identity},
      {"covariance vs closed form", 120.0, [&] { return covariance_vs_closed_form(slowest_traj); }},
      {"Lindblad oracle equivalence", 600.0, oracle},
      {"modulated cooling", 120.0, [&] { return modulated(longest_mod); }},
      {"matching condition", 1.0, matching},
      {"thermal occupancy vectors", 1.0, thermal_vectors},
      {"physicality suite", 1.0, physicality},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.require(false, std::string("threw: ") + e.what());
    }
    const double secs = seconds_since(t0);
    out.require(secs <= c.budget, "runtime " + num(secs, 3) + " s (budget " + num(c.budget) + " s)");
    if (!out.pass) ++failed;
    std::printf("AC%zu %s  %s: %s\n", i + 1, out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}

#include "optocool/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "optocool/constants.hpp"
#include "optocool/errors.hpp"

namespace optocool::modulation {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double interpolate_crossing(double t0, double n0, double t1, double n1, double thr) {
  if (n1 == n0) return t1;
  return t0 + (thr - n0) * (t1 - t0) / (n1 - n0);
}

void require_coupling_window(const ReducedParams& rp, const char* who) {
  if (!(rp.g_eff > 0.0) || !(2.0 * rp.g_eff < rp.omega_m))
    throw DomainError(std::string(who) + ": requires 0 < |G| < w_m/2");
}

}  // namespace

std::string_view to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::single: return "single";
    case ScheduleMode::periodic: return "periodic";
    case ScheduleMode::off: return "off";
  }
  return "unknown";
}

ModulationSchedule::ModulationSchedule(double kappa_base, std::vector<Pulse> pulses,
                                       ScheduleMode mode)
    : kappa_base_(kappa_base), pulses_(std::move(pulses)), mode_(mode) {
  if (!(kappa_base_ > 0.0)) throw ConfigError("kappa_base: must be > 0");
  if (mode_ == ScheduleMode::off && !pulses_.empty())
    throw ConfigError("schedule: mode 'off' takes no pulses");
  if (mode_ == ScheduleMode::single && pulses_.size() != 1)
    throw ConfigError("schedule: mode 'single' takes exactly one pulse");
  if (mode_ == ScheduleMode::periodic && pulses_.empty())
    throw ConfigError("schedule: mode 'periodic' needs at least one pulse");
  for (std::size_t i = 0; i < pulses_.size(); ++i) {
    const auto& p = pulses_[i];
    if (!(p.t_start >= 0.0)) throw ConfigError("pulse: t_start must be >= 0");
    if (!(p.duration > 0.0)) throw ConfigError("pulse: duration must be > 0");
    if (!(p.kappa_pulse > kappa_base_))
      throw ConfigError("pulse: kappa_pulse must exceed kappa_base");
    if (i > 0 && !(p.t_start >= pulses_[i - 1].t_end()))
      throw ConfigError("pulse: pulses must be sorted and non-overlapping");
  }
}

double ModulationSchedule::kappa_at(double t) const {
  for (const auto& p : pulses_) {
    if (t < p.t_start) break;
    if (t < p.t_end()) return p.kappa_pulse;
  }
  return kappa_base_;
}

std::vector<covariance::KappaSegment> ModulationSchedule::segments(double t_final) const {
  std::vector<covariance::KappaSegment> segs;
  for (const auto& p : pulses_) {
    if (p.t_start >= t_final) break;
    if (p.t_start > 0.0) segs.push_back({p.t_start, kappa_base_});
    segs.push_back({p.t_end(), p.kappa_pulse});
  }
  if (segs.empty() || segs.back().t_end < t_final) segs.push_back({t_final, kappa_base_});
  return segs;
}

std::vector<double> pulse_times(const ReducedParams& rp, int n_pulses) {
  if (n_pulses < 1) throw ConfigError("n_pulses: must be >= 1");
  const auto [wp, wm] = covariance::normal_mode_freqs(rp);
  const double spacing = constants::pi / (wp - wm);
  std::vector<double> times(static_cast<std::size_t>(n_pulses));
  for (int k = 0; k < n_pulses; ++k) times[static_cast<std::size_t>(k)] = (k + 1) * spacing;
  return times;
}

double damped_swap_time(const ReducedParams& rp) {
  const auto [wp, wm] = covariance::normal_mode_freqs(rp);
  const double beat = 0.5 * (wp - wm);
  const double eps = 0.25 * (rp.kappa - rp.gamma);
  if (!(beat > std::abs(eps)))
    throw DomainError("damped_swap_time: the photon-phonon beat is overdamped (no phonon "
                      "minimum)");
  const double shifted = std::sqrt(beat * beat - eps * eps);
  return (0.5 * constants::pi + std::atan(eps / shifted)) / shifted;
}

ModulationSchedule make_schedule(const ReducedParams& rp, ScheduleMode mode, int n_pulses,
                                 const PulseShape& shape, PulseTiming timing) {
  if (mode == ScheduleMode::off) return ModulationSchedule::off(rp.kappa);
  if (mode == ScheduleMode::single) n_pulses = 1;
  if (n_pulses < 1) throw ConfigError("n_pulses: must be >= 1");
  if (!(shape.kappa_pulse > 0.0) || !(shape.area > 0.0))
    throw ConfigError("pulse shape: kappa_pulse and area must be > 0");

  const double swap = timing == PulseTiming::normal_mode ? pulse_times(rp, 1).front()
                                                          : damped_swap_time(rp);
  std::vector<Pulse> pulses;
  double t = swap;
  for (int k = 0; k < n_pulses; ++k) {
    pulses.push_back({t, shape.duration(), shape.kappa_pulse});
    t += shape.duration() + swap;
  }
  return {rp.kappa, std::move(pulses), mode};
}

covariance::Trajectory evolve_modulated(const covariance::MomentState& initial,
                                        const ReducedParams& rp,
                                        const ModulationSchedule& schedule, double t_final,
                                        const covariance::EvolveOptions& opts) {
  ReducedParams base = rp;
  base.kappa = schedule.kappa_base();
  return covariance::evolve_piecewise(initial, base, schedule.segments(t_final), t_final, opts);
}

double nins_limit(const ReducedParams& rp) {
  require_coupling_window(rp, "nins_limit");
  const double G = rp.g_eff;
  const double w2 = rp.omega_m * rp.omega_m;
  const double g2 = G * G;
  return constants::pi * rp.gamma * rp.n_th / (4.0 * G) +
         constants::pi * constants::pi * g2 * g2 / ((w2 - g2) * (w2 - 4.0 * g2));
}

double matched_params(int k, double omega_m) {
  if (k < 3 || k % 2 == 0)
    throw InvalidK("matched_params: k must be an odd integer >= 3 (got " + std::to_string(k) +
                   ")");
  const double kd = k;
  return kd / (kd * kd + 1.0) * omega_m;
}

double ninsmat_limit(const ReducedParams& rp) {
  require_coupling_window(rp, "ninsmat_limit");
  const double G = rp.g_eff;
  const double g2 = G * G;
  const double w2 = rp.omega_m * rp.omega_m;
  return constants::pi * rp.kappa / (4.0 * G) *
         (rp.gamma * rp.n_th / rp.kappa + g2 / (2.0 * (w2 - 4.0 * g2)));
}

double settle_time(const covariance::Trajectory& tr, double threshold) {
  const auto& s = tr.states;
  if (s.empty() || s.back().n_b > threshold) return nan;
  for (std::size_t i = s.size() - 1; i-- > 0;) {
    if (s[i].n_b > threshold)
      return interpolate_crossing(tr.times[i], s[i].n_b, tr.times[i + 1], s[i + 1].n_b,
                                  threshold);
  }
  return tr.times.front();
}

double first_crossing(const covariance::Trajectory& tr, double threshold) {
  const auto& s = tr.states;
  if (s.empty()) return nan;
  if (s.front().n_b <= threshold) return tr.times.front();
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].n_b <= threshold)
      return interpolate_crossing(tr.times[i - 1], s[i - 1].n_b, tr.times[i], s[i].n_b,
                                  threshold);
  }
  return nan;
}

Speedup speedup_metric(const covariance::Trajectory& modulated,
                       const covariance::Trajectory& reference, double threshold) {
  Speedup out;
  out.t_mod = settle_time(modulated, threshold);
  out.t_ref = settle_time(reference, threshold);
  out.first_cross_mod = first_crossing(modulated, threshold);
  out.first_cross_ref = first_crossing(reference, threshold);
  if (std::isnan(out.t_mod) || std::isnan(out.t_ref))
    out.ratio = nan;
  else if (out.t_mod == out.t_ref)
    out.ratio = 1.0;
  else
    out.ratio = out.t_ref / out.t_mod;
  return out;
}

FloorStats on_phase_floor(const covariance::Trajectory& tr, const ModulationSchedule& schedule,
                          std::size_t warmup) {
  const auto& pulses = schedule.pulses();
  FloorStats st;
  double min_sum = 0.0;
  double area = 0.0;
  double span = 0.0;
  for (std::size_t p = warmup; p + 1 < pulses.size(); ++p) {
    const double a = pulses[p].t_end();
    const double b = pulses[p + 1].t_start;
    double lo = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double t = tr.times[i];
      if (t < a || t > b) continue;
      lo = std::min(lo, tr.states[i].n_b);
      if (any) {
        const double dt = t - tr.times[i - 1];
        area += 0.5 * (tr.states[i].n_b + tr.states[i - 1].n_b) * dt;
        span += dt;
      }
      any = true;
    }
    if (!any) continue;
    min_sum += lo;
    ++st.intervals;
  }
  if (st.intervals == 0) throw ConfigError("on_phase_floor: no complete inter-pulse interval");
  st.floor = min_sum / static_cast<double>(st.intervals);
  st.mean = span > 0.0 ? area / span : st.floor;
  return st;
}

}  // namespace optocool::modulation

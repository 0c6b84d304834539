#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "optocool/covariance.hpp"
#include "optocool/params.hpp"

namespace optocool::modulation {

enum class ScheduleMode { single, periodic, off };
std::string_view to_string(ScheduleMode mode);

struct Pulse {
  double t_start = 0.0;
  double duration = 0.0;
  double kappa_pulse = 0.0;
  double t_end() const { return t_start + duration; }
};

/// Piecewise-constant, right-continuous cavity decay κ(t): κ_pulse on
/// [t_start, t_start + duration), κ_base elsewhere.
class ModulationSchedule {
 public:
  /// Throws ConfigError unless pulses are sorted, non-overlapping, have
  /// positive duration and κ_pulse > κ_base, and the count matches `mode`.
  ModulationSchedule(double kappa_base, std::vector<Pulse> pulses, ScheduleMode mode);

  static ModulationSchedule off(double kappa_base) { return {kappa_base, {}, ScheduleMode::off}; }

  double kappa_base() const { return kappa_base_; }
  const std::vector<Pulse>& pulses() const { return pulses_; }
  ScheduleMode mode() const { return mode_; }

  double kappa_at(double t) const;

  /// Segments covering [0, t_final] for covariance::evolve_piecewise.
  std::vector<covariance::KappaSegment> segments(double t_final) const;

 private:
  double kappa_base_;
  std::vector<Pulse> pulses_;
  ScheduleMode mode_;
};

/// Rectangular pulse: height κ_pulse, duration area/κ_pulse. The default
/// height is absolute (ω_m units) because the dump must beat the photon→phonon
/// back-swap at rate ~|G|, whatever κ_base is.
struct PulseShape {
  double kappa_pulse = 50.0;
  double area = 10.0;
  double duration() const { return area / kappa_pulse; }
};

enum class PulseTiming {
  /// Undamped normal-mode half beat π/(ω₊ − ω₋).
  normal_mode,
  /// First phonon minimum of the damped beat (default).
  damped_minimum,
};

/// t_k = (k+1)·π/(ω₊ − ω₋), k = 0..n−1.
std::vector<double> pulse_times(const ReducedParams& rp, int n_pulses);

/// First phonon minimum of the damped photon–phonon beat starting from an
/// empty cavity: t = (π/2 + atan(ε/Ω′))/Ω′ with Ω = (ω₊ − ω₋)/2,
/// ε = (κ − γ)/4, Ω′ = sqrt(Ω² − ε²). Reduces to π/(ω₊ − ω₋) as κ, γ → 0.
double damped_swap_time(const ReducedParams& rp);

/// Pulses placed one swap time after t = 0 and then one swap time after the
/// end of each previous pulse (the dump re-initializes the beat).
ModulationSchedule make_schedule(const ReducedParams& rp, ScheduleMode mode, int n_pulses,
                                 const PulseShape& shape = {},
                                 PulseTiming timing = PulseTiming::damped_minimum);

/// Covariance integration with κ → κ(t); other parameters fixed. The base
/// decay of `rp` is replaced by `schedule.kappa_base()`.
covariance::Trajectory evolve_modulated(const covariance::MomentState& initial,
                                        const ReducedParams& rp,
                                        const ModulationSchedule& schedule, double t_final,
                                        const covariance::EvolveOptions& opts = {});

/// πγn_th/(4|G|) + π²|G|⁴/((ω_m² − |G|²)(ω_m² − 4|G|²)); requires 0 < |G| < ω_m/2.
double nins_limit(const ReducedParams& rp);

/// |G| satisfying (ω₊ + ω₋)/(ω₊ − ω₋) = k: k/(k² + 1)·ω_m. k odd, ≥ 3.
double matched_params(int k, double omega_m = 1.0);

/// (πκ/(4|G|))·[γn_th/κ + |G|²/(2(ω_m² − 4|G|²))]; requires 0 < |G| < ω_m/2.
double ninsmat_limit(const ReducedParams& rp);

/// Earliest time after which n_b stays ≤ threshold for the rest of the
/// trajectory (linearly interpolated). NaN if the last sample is above.
double settle_time(const covariance::Trajectory& tr, double threshold);

/// First time n_b ≤ threshold (interpolated); NaN if never.
double first_crossing(const covariance::Trajectory& tr, double threshold);

struct Speedup {
  double t_mod = 0.0;
  double t_ref = 0.0;
  double ratio = 0.0;  // t_ref / t_mod
  double first_cross_mod = 0.0;
  double first_cross_ref = 0.0;
};
Speedup speedup_metric(const covariance::Trajectory& modulated,
                       const covariance::Trajectory& reference, double threshold);

struct FloorStats {
  double floor = 0.0;  // mean of per-interval minima of n_b
  double mean = 0.0;   // time-average of n_b over the same intervals
  std::size_t intervals = 0;
};
/// Inter-pulse statistics of n_b, skipping the first `warmup` pulses.
FloorStats on_phase_floor(const covariance::Trajectory& tr, const ModulationSchedule& schedule,
                          std::size_t warmup);

}  // namespace optocool::modulation

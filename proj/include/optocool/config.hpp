#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optocool/covariance.hpp"
#include "optocool/lindblad.hpp"
#include "optocool/modulation.hpp"
#include "optocool/params.hpp"
#include "optocool/spectra.hpp"

namespace optocool::cli {

enum class Mode { limits, spectrum, evolve, modulate, oracle, sweep };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct SweepAxis {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int points = 1;
  bool log = false;
  std::vector<double> values() const;
};

/// Fully typed run description. Defaults give a resolved-sideband weak-coupling
/// point in ω_m units.
struct RunConfig {
  Mode mode = Mode::limits;

  // Parameter block: reduced (ω_m units) or physical (SI).
  bool physical = false;
  ReducedParams reduced{0.05, 1e-5, 0.01, -1.0, 1000.0, 0.0, 1.0};
  bool detuning_set = false;  // unset: Δ′ = −ω_m
  PhysicalParams phys;

  // evolve / modulate / oracle
  double t_final = 100.0;
  double n_a0 = 0.0;
  std::optional<double> n_b0;  // unset: n_th
  covariance::EvolveOptions evolve;

  // spectrum
  spectra::SpectrumKind kind = spectra::SpectrumKind::force;
  spectra::GridSpec grid;

  // modulate
  modulation::ScheduleMode schedule = modulation::ScheduleMode::single;
  int n_pulses = 1;
  modulation::PulseShape shape;
  modulation::PulseTiming timing = modulation::PulseTiming::damped_minimum;
  std::vector<modulation::Pulse> pulses;  // explicit list overrides n_pulses/shape
  std::optional<int> k_match;             // set: g_eff = matched_params(k)

  // oracle
  lindblad::FockConfig fock;
  lindblad::EvolveOptions oracle;
  std::string dump_matrix;

  // sweep
  std::vector<SweepAxis> axes;

  /// Reduced parameters after the physical → reduced map, Δ′ default and k.
  ReducedParams resolve() const;
  /// "key = value" lines recording every setting that affects `mode`.
  std::vector<std::string> header() const;
};

/// Parses config text, then applies `overrides` ("key=value", in order).
/// Every problem throws ConfigError naming the key. A `mode` key in the
/// text must agree with `mode`.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                       Mode mode);

/// Sets one scalar key on a config (the sweep driver uses this for axes).
void set_key(RunConfig& cfg, std::string_view key, std::string_view value);

/// Names accepted as sweep axes for the active parameter block.
bool is_sweepable(const RunConfig& cfg, std::string_view key);

}  // namespace optocool::cli

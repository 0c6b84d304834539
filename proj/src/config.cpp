#include "optocool/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "optocool/errors.hpp"
#include "optocool/io.hpp"

namespace optocool::cli {

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto comma = s.find(',');
    parts.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return parts;
}

std::string name(std::string_view key) { return std::string(key); }

double to_double(std::string_view v, std::string_view key) { return io::parse_number(v, key); }

int to_int(std::string_view v, std::string_view key) {
  const double d = io::parse_number(v, key);
  if (d != std::floor(d) || std::abs(d) > 1e9)
    throw ConfigError(name(key) + ": expected an integer, got '" + std::string(v) + "'");
  return static_cast<int>(d);
}

bool to_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(name(key) + ": expected true/false, got '" + std::string(v) + "'");
}

template <class E>
E to_enum(std::string_view v, std::string_view key,
          std::initializer_list<std::pair<std::string_view, E>> choices) {
  std::string allowed;
  for (const auto& [text, value] : choices) {
    if (v == text) return value;
    allowed += (allowed.empty() ? "" : "|") + std::string(text);
  }
  throw ConfigError(name(key) + ": expected one of " + allowed + ", got '" + std::string(v) + "'");
}

// Keys shared between the two parameter blocks are dispatched on `physical`.
const std::map<std::string, Setter, std::less<>>& reduced_keys() {
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"kappa", [](RunConfig& c, std::string_view v) { c.reduced.kappa = to_double(v, "kappa"); }},
      {"gamma", [](RunConfig& c, std::string_view v) { c.reduced.gamma = to_double(v, "gamma"); }},
      {"g_eff", [](RunConfig& c, std::string_view v) { c.reduced.g_eff = to_double(v, "g_eff"); }},
      {"detuning",
       [](RunConfig& c, std::string_view v) {
         c.reduced.detuning = to_double(v, "detuning");
         c.detuning_set = true;
       }},
      {"n_th", [](RunConfig& c, std::string_view v) { c.reduced.n_th = to_double(v, "n_th"); }},
      {"g_phase",
       [](RunConfig& c, std::string_view v) { c.reduced.g_phase = to_double(v, "g_phase"); }},
      {"omega_m",
       [](RunConfig& c, std::string_view v) { c.reduced.omega_m = to_double(v, "omega_m"); }},
  };
  return keys;
}

const std::map<std::string, Setter, std::less<>>& physical_keys() {
  static const std::map<std::string, Setter, std::less<>> keys = [] {
    std::map<std::string, Setter, std::less<>> k;
    const std::pair<const char*, double PhysicalParams::*> fields[] = {
        {"omega_m", &PhysicalParams::omega_m},   {"omega_c", &PhysicalParams::omega_c},
        {"omega_in", &PhysicalParams::omega_in}, {"kappa_0", &PhysicalParams::kappa_0},
        {"kappa_ex", &PhysicalParams::kappa_ex}, {"gamma", &PhysicalParams::gamma},
        {"g", &PhysicalParams::g},               {"m_eff", &PhysicalParams::m_eff},
        {"power", &PhysicalParams::power},       {"phase", &PhysicalParams::phase},
        {"temperature", &PhysicalParams::temperature},
    };
    for (const auto& [key, field] : fields) {
      k.emplace(key, [key = std::string(key), field = field](RunConfig& c, std::string_view v) {
        c.phys.*field = to_double(v, key);
      });
    }
    return k;
  }();
  return keys;
}

const std::map<std::string, Setter, std::less<>>& run_keys() {
  using spectra::SpectrumKind;
  using modulation::ScheduleMode;
  using modulation::PulseTiming;
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"t_final", [](RunConfig& c, std::string_view v) { c.t_final = to_double(v, "t_final"); }},
      {"n_a0", [](RunConfig& c, std::string_view v) { c.n_a0 = to_double(v, "n_a0"); }},
      {"n_b0", [](RunConfig& c, std::string_view v) { c.n_b0 = to_double(v, "n_b0"); }},
      {"dt_max",
       [](RunConfig& c, std::string_view v) { c.evolve.dt_max = to_double(v, "dt_max"); }},
      {"sample_dt",
       [](RunConfig& c, std::string_view v) { c.evolve.sample_dt = to_double(v, "sample_dt"); }},
      {"rtol", [](RunConfig& c, std::string_view v) { c.evolve.rtol = to_double(v, "rtol"); }},
      {"atol", [](RunConfig& c, std::string_view v) { c.evolve.atol = to_double(v, "atol"); }},
      {"backend",
       [](RunConfig& c, std::string_view v) {
         c.evolve.backend = to_enum<covariance::Backend>(
             v, "backend", {{"rk45", covariance::Backend::rk45}, {"expm", covariance::Backend::expm}});
       }},
      {"stability",
       [](RunConfig& c, std::string_view v) {
         c.evolve.policy = to_enum<covariance::StabilityPolicy>(
             v, "stability",
             {{"strict", covariance::StabilityPolicy::strict},
              {"warn", covariance::StabilityPolicy::warn}});
       }},
      {"check_physicality",
       [](RunConfig& c, std::string_view v) {
         c.evolve.check_physicality = to_bool(v, "check_physicality");
       }},
      {"kind",
       [](RunConfig& c, std::string_view v) {
         c.kind = to_enum<SpectrumKind>(v, "kind",
                                        {{"force", SpectrumKind::force},
                                         {"mechanical", SpectrumKind::mechanical},
                                         {"self_energy", SpectrumKind::self_energy}});
       }},
      {"points", [](RunConfig& c, std::string_view v) { c.grid.points = to_int(v, "points"); }},
      {"omega_min",
       [](RunConfig& c, std::string_view v) { c.grid.omega_min = to_double(v, "omega_min"); }},
      {"omega_max",
       [](RunConfig& c, std::string_view v) { c.grid.omega_max = to_double(v, "omega_max"); }},
      {"dense_halfwidth",
       [](RunConfig& c, std::string_view v) {
         c.grid.dense_halfwidth = to_double(v, "dense_halfwidth");
       }},
      {"dense_points",
       [](RunConfig& c, std::string_view v) { c.grid.dense_points = to_int(v, "dense_points"); }},
      {"schedule",
       [](RunConfig& c, std::string_view v) {
         c.schedule = to_enum<ScheduleMode>(v, "schedule",
                                            {{"single", ScheduleMode::single},
                                             {"periodic", ScheduleMode::periodic},
                                             {"off", ScheduleMode::off}});
       }},
      {"n_pulses", [](RunConfig& c, std::string_view v) { c.n_pulses = to_int(v, "n_pulses"); }},
      {"kappa_pulse",
       [](RunConfig& c, std::string_view v) {
         c.shape.kappa_pulse = to_double(v, "kappa_pulse");
       }},
      {"pulse_area",
       [](RunConfig& c, std::string_view v) { c.shape.area = to_double(v, "pulse_area"); }},
      {"timing",
       [](RunConfig& c, std::string_view v) {
         c.timing = to_enum<PulseTiming>(v, "timing",
                                         {{"damped_minimum", PulseTiming::damped_minimum},
                                          {"normal_mode", PulseTiming::normal_mode}});
       }},
      {"k", [](RunConfig& c, std::string_view v) { c.k_match = to_int(v, "k"); }},
      {"dim_a", [](RunConfig& c, std::string_view v) { c.fock.dim_a = to_int(v, "dim_a"); }},
      {"dim_b", [](RunConfig& c, std::string_view v) { c.fock.dim_b = to_int(v, "dim_b"); }},
      {"budget",
       [](RunConfig& c, std::string_view v) {
         const int b = to_int(v, "budget");
         if (b < 1) throw ConfigError("budget: must be >= 1");
         c.fock.budget = static_cast<std::size_t>(b);
       }},
      {"oracle_dt",
       [](RunConfig& c, std::string_view v) { c.oracle.dt = to_double(v, "oracle_dt"); }},
      {"oracle_sample_dt",
       [](RunConfig& c, std::string_view v) {
         c.oracle.sample_dt = to_double(v, "oracle_sample_dt");
       }},
      {"check_positivity",
       [](RunConfig& c, std::string_view v) {
         c.oracle.check_positivity = to_bool(v, "check_positivity");
       }},
      {"dump_matrix", [](RunConfig& c, std::string_view v) { c.dump_matrix = std::string(v); }},
  };
  return keys;
}

modulation::Pulse parse_pulse(std::string_view v) {
  const auto parts = split_commas(v);
  if (parts.size() != 3)
    throw ConfigError("pulse: expected 't_start, duration, kappa_pulse', got '" + std::string(v) +
                      "'");
  return {to_double(parts[0], "pulse"), to_double(parts[1], "pulse"),
          to_double(parts[2], "pulse")};
}

SweepAxis parse_axis(std::string_view v) {
  const auto parts = split_commas(v);
  if (parts.size() != 4 && parts.size() != 5)
    throw ConfigError("axis: expected 'name, min, max, points[, lin|log]', got '" +
                      std::string(v) + "'");
  SweepAxis a;
  a.name = std::string(parts[0]);
  a.min = to_double(parts[1], "axis");
  a.max = to_double(parts[2], "axis");
  a.points = to_int(parts[3], "axis");
  if (parts.size() == 5) a.log = to_enum<bool>(parts[4], "axis", {{"lin", false}, {"log", true}});
  if (a.points < 1) throw ConfigError("axis: points must be >= 1");
  if (a.log && !(a.min > 0.0 && a.max > 0.0) && !(a.min < 0.0 && a.max < 0.0))
    throw ConfigError("axis: log spacing needs min and max of the same sign, both nonzero");
  return a;
}

std::string fmt(double x) { return io::format_number(x); }

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::limits: return "limits";
    case Mode::spectrum: return "spectrum";
    case Mode::evolve: return "evolve";
    case Mode::modulate: return "modulate";
    case Mode::oracle: return "oracle";
    case Mode::sweep: return "sweep";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  return to_enum<Mode>(text, "mode",
                       {{"limits", Mode::limits},
                        {"spectrum", Mode::spectrum},
                        {"evolve", Mode::evolve},
                        {"modulate", Mode::modulate},
                        {"oracle", Mode::oracle},
                        {"sweep", Mode::sweep}});
}

std::vector<double> SweepAxis::values() const {
  std::vector<double> v(static_cast<std::size_t>(points));
  if (points == 1) {
    v[0] = min;
    return v;
  }
  for (int i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / (points - 1);
    if (log) {
      const double sign = min < 0.0 ? -1.0 : 1.0;
      v[static_cast<std::size_t>(i)] =
          sign * std::exp(std::log(sign * min) + f * (std::log(sign * max) - std::log(sign * min)));
    } else {
      v[static_cast<std::size_t>(i)] = min + f * (max - min);
    }
  }
  v.front() = min;
  v.back() = max;
  return v;
}

void set_key(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& params = cfg.physical ? physical_keys() : reduced_keys();
  if (auto it = params.find(key); it != params.end()) return it->second(cfg, value);
  if (auto it = run_keys().find(key); it != run_keys().end()) return it->second(cfg, value);
  const auto& other = cfg.physical ? reduced_keys() : physical_keys();
  if (other.count(key))
    throw ConfigError(name(key) + ": not a field of the active parameter block (params = " +
                      (cfg.physical ? "physical" : "reduced") + ")");
  throw ConfigError(name(key) + ": unknown key");
}

bool is_sweepable(const RunConfig& cfg, std::string_view key) {
  return (cfg.physical ? physical_keys() : reduced_keys()).count(key) > 0;
}

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                       Mode mode) {
  std::map<std::string, std::string, std::less<>> scalars;
  std::vector<std::string> pulses, axes;

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (key == "pulse")
      pulses.push_back(value);
    else if (key == "axis")
      axes.push_back(value);
    else if (!scalars.emplace(key, value).second)
      throw ConfigError(key + ": given more than once");
  }

  // Overrides replace scalar keys; the first override of a list key replaces
  // the file's list, later ones append.
  bool pulses_overridden = false, axes_overridden = false;
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw ConfigError("--set: expected key=value, got '" + ov + "'");
    const auto key = std::string(trim(std::string_view(ov).substr(0, eq)));
    const auto value = std::string(trim(std::string_view(ov).substr(eq + 1)));
    if (key == "pulse") {
      if (!std::exchange(pulses_overridden, true)) pulses.clear();
      pulses.push_back(value);
    } else if (key == "axis") {
      if (!std::exchange(axes_overridden, true)) axes.clear();
      axes.push_back(value);
    } else {
      scalars[key] = value;
    }
  }

  RunConfig cfg;
  cfg.mode = mode;
  if (auto it = scalars.find("mode"); it != scalars.end()) {
    if (parse_mode(it->second) != mode)
      throw ConfigError("mode: config says '" + it->second + "' but the subcommand is '" +
                        std::string(to_string(mode)) + "'");
    scalars.erase(it);
  }
  if (auto it = scalars.find("params"); it != scalars.end()) {
    cfg.physical =
        to_enum<bool>(it->second, "params", {{"reduced", false}, {"physical", true}});
    scalars.erase(it);
  }
  for (const auto& [key, value] : scalars) set_key(cfg, key, value);
  for (const auto& p : pulses) cfg.pulses.push_back(parse_pulse(p));
  for (const auto& a : axes) {
    auto axis = parse_axis(a);
    if (!is_sweepable(cfg, axis.name))
      throw ConfigError("axis: '" + axis.name + "' is not a parameter of the active block");
    cfg.axes.push_back(std::move(axis));
  }

  if (!cfg.axes.empty() && mode != Mode::sweep)
    throw ConfigError("axis: only valid in sweep mode");
  if (cfg.axes.size() > 2) throw ConfigError("axis: at most 2 sweep axes");
  if (cfg.axes.size() == 2 && cfg.axes[0].name == cfg.axes[1].name)
    throw ConfigError("axis: the two axes must differ");
  if (cfg.k_match && cfg.physical) throw ConfigError("k: only valid with params = reduced");
  if (!cfg.pulses.empty() && cfg.schedule == modulation::ScheduleMode::off)
    throw ConfigError("pulse: schedule 'off' takes no pulses");
  if (!(cfg.t_final > 0.0) || !std::isfinite(cfg.t_final))
    throw ConfigError("t_final: must be > 0");
  return cfg;
}

ReducedParams RunConfig::resolve() const {
  ReducedParams rp;
  if (physical) {
    rp = to_reduced(phys);
  } else {
    rp = reduced;
    if (!detuning_set) rp.detuning = -rp.omega_m;
    if (k_match) rp.g_eff = modulation::matched_params(*k_match, rp.omega_m);
  }
  rp.validate();
  return rp;
}

std::vector<std::string> RunConfig::header() const {
  std::vector<std::string> h;
  auto add = [&h](std::string_view key, std::string value) {
    h.push_back(std::string(key) + " = " + std::move(value));
  };
  add("tool", "optocool " OPTOCOOL_VERSION);
  add("mode", std::string(to_string(mode)));
  add("params", physical ? "physical" : "reduced");
  if (physical) {
    add("omega_m", fmt(phys.omega_m));
    add("omega_c", fmt(phys.omega_c));
    add("omega_in", fmt(phys.omega_in));
    add("kappa_0", fmt(phys.kappa_0));
    add("kappa_ex", fmt(phys.kappa_ex));
    add("gamma", fmt(phys.gamma));
    add("g", fmt(phys.g));
    add("m_eff", fmt(phys.m_eff));
    add("power", fmt(phys.power));
    add("phase", fmt(phys.phase));
    add("temperature", fmt(phys.temperature));
  }
  if (k_match) add("k", std::to_string(*k_match));
  const ReducedParams rp = resolve();
  const char* prefix = physical ? "resolved." : "";
  add(std::string(prefix) + "kappa", fmt(rp.kappa));
  add(std::string(prefix) + "gamma", fmt(rp.gamma));
  add(std::string(prefix) + "g_eff", fmt(rp.g_eff));
  add(std::string(prefix) + "detuning", fmt(rp.detuning));
  add(std::string(prefix) + "n_th", fmt(rp.n_th));
  add(std::string(prefix) + "g_phase", fmt(rp.g_phase));
  add(std::string(prefix) + "omega_m", fmt(rp.omega_m));

  auto add_evolve = [&] {
    add("t_final", fmt(t_final));
    add("n_a0", fmt(n_a0));
    add("n_b0", fmt(n_b0.value_or(rp.n_th)));
    add("dt_max", fmt(evolve.dt_max));
    add("sample_dt", fmt(evolve.sample_dt > 0.0 ? evolve.sample_dt : evolve.dt_max));
    add("rtol", fmt(evolve.rtol));
    add("atol", fmt(evolve.atol));
    add("backend", evolve.backend == covariance::Backend::rk45 ? "rk45" : "expm");
    add("stability", evolve.policy == covariance::StabilityPolicy::strict ? "strict" : "warn");
  };
  switch (mode) {
    case Mode::limits: break;
    case Mode::spectrum:
      add("kind", std::string(spectra::to_string(kind)));
      add("points", std::to_string(grid.points));
      if (grid.omega_min) add("omega_min", fmt(*grid.omega_min));
      if (grid.omega_max) add("omega_max", fmt(*grid.omega_max));
      if (grid.dense_points > 0) {
        add("dense_halfwidth", fmt(grid.dense_halfwidth));
        add("dense_points", std::to_string(grid.dense_points));
      }
      break;
    case Mode::evolve: add_evolve(); break;
    case Mode::modulate:
      add_evolve();
      add("schedule", std::string(modulation::to_string(schedule)));
      break;  // the runner appends the resolved pulse list
    case Mode::oracle:
      add_evolve();
      add("dim_a", std::to_string(fock.dim_a));
      add("dim_b", std::to_string(fock.dim_b));
      add("budget", std::to_string(fock.budget));
      add("oracle_dt", fmt(oracle.dt));
      add("oracle_sample_dt", fmt(oracle.sample_dt));
      break;
    case Mode::sweep:
      for (std::size_t i = 0; i < axes.size(); ++i) {
        const auto& a = axes[i];
        add("axis" + std::to_string(i + 1), a.name + ", " + fmt(a.min) + ", " + fmt(a.max) + ", " +
                        std::to_string(a.points) + ", " + (a.log ? "log" : "lin"));
      }
      break;
  }
  return h;
}

}  // namespace optocool::cli

#include "optocool/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "optocool/errors.hpp"
#include "optocool/lindblad.hpp"
#include "optocool/modulation.hpp"
#include "optocool/spectra.hpp"

namespace optocool::cli {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Regime and numerical failures of a single quantity become NaN cells.
template <class F>
double guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.family() == ErrorFamily::regime || e.family() == ErrorFamily::numerical) return nan;
    throw;
  }
}

const std::vector<std::string> moment_columns = {
    "n_a",     "n_b",     "re_adag_b", "im_adag_b", "re_a_b",
    "im_a_b",  "re_a_sq", "im_a_sq",   "re_b_sq",   "im_b_sq"};

void append_moments(std::vector<double>& row, const covariance::MomentState& s) {
  row.insert(row.end(), {s.n_a, s.n_b, s.adag_b.real(), s.adag_b.imag(), s.a_b.real(),
                         s.a_b.imag(), s.a_sq.real(), s.a_sq.imag(), s.b_sq.real(),
                         s.b_sq.imag()});
}

std::string fmt(double x) { return io::format_number(x); }

covariance::MomentState initial_state(const RunConfig& cfg, const ReducedParams& rp) {
  covariance::MomentState s;
  s.n_a = cfg.n_a0;
  s.n_b = cfg.n_b0.value_or(rp.n_th);
  if (!(s.n_a >= 0.0) || !(s.n_b >= 0.0)) throw ConfigError("n_a0/n_b0: must be >= 0");
  return s;
}

RunOutput run_limits(const RunConfig& cfg) {
  RunOutput out;
  out.table.header = cfg.header();
  out.table.columns = limits_columns();
  out.table.rows.push_back(limits_row(cfg.resolve()));
  return out;
}

RunOutput run_spectrum(const RunConfig& cfg) {
  const auto rp = cfg.resolve();
  const auto series = spectra::sample(cfg.kind, rp, spectra::frequency_grid(rp, cfg.grid));
  RunOutput out;
  out.table.header = cfg.header();
  const bool complex = cfg.kind == spectra::SpectrumKind::self_energy;
  out.table.columns = complex ? std::vector<std::string>{"omega", "re_value", "im_value"}
                              : std::vector<std::string>{"omega", "value"};
  for (std::size_t i = 0; i < series.omegas.size(); ++i) {
    if (complex)
      out.table.rows.push_back(
          {series.omegas[i], series.values[i].real(), series.values[i].imag()});
    else
      out.table.rows.push_back({series.omegas[i], series.values[i].real()});
  }
  return out;
}

RunOutput run_evolve(const RunConfig& cfg) {
  const auto rp = cfg.resolve();
  const auto tr = covariance::evolve(initial_state(cfg, rp), rp, cfg.t_final, cfg.evolve);
  RunOutput out;
  out.table.header = cfg.header();
  out.table.header.push_back("result.n_b_steady = " +
                             fmt(guarded([&] { return covariance::steady_state_moments(rp).n_b; })));
  out.table.columns = {"t"};
  out.table.columns.insert(out.table.columns.end(), moment_columns.begin(), moment_columns.end());
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<double> row{tr.times[i]};
    append_moments(row, tr.states[i]);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

modulation::ModulationSchedule resolve_schedule(const RunConfig& cfg, const ReducedParams& rp) {
  if (cfg.schedule == modulation::ScheduleMode::off)
    return modulation::ModulationSchedule::off(rp.kappa);
  if (!cfg.pulses.empty()) return {rp.kappa, cfg.pulses, cfg.schedule};
  return modulation::make_schedule(rp, cfg.schedule, cfg.n_pulses, cfg.shape, cfg.timing);
}

RunOutput run_modulate(const RunConfig& cfg) {
  const auto rp = cfg.resolve();
  const auto schedule = resolve_schedule(cfg, rp);
  const auto init = initial_state(cfg, rp);
  const auto tr = modulation::evolve_modulated(init, rp, schedule, cfg.t_final, cfg.evolve);
  const auto ref = covariance::evolve(init, rp, cfg.t_final, cfg.evolve);

  RunOutput out;
  auto& h = out.table.header = cfg.header();
  for (std::size_t i = 0; i < schedule.pulses().size(); ++i) {
    const auto& p = schedule.pulses()[i];
    h.push_back("pulse" + std::to_string(i + 1) + " = " + fmt(p.t_start) + ", " +
                fmt(p.duration) + ", " + fmt(p.kappa_pulse));
  }
  const double steady = guarded([&] { return covariance::steady_state_moments(rp).n_b; });
  h.push_back("result.n_b_steady = " + fmt(steady));
  h.push_back("result.nins_limit = " + fmt(guarded([&] { return modulation::nins_limit(rp); })));
  h.push_back("result.ninsmat_limit = " +
              fmt(guarded([&] { return modulation::ninsmat_limit(rp); })));
  if (std::isfinite(steady)) {
    const auto sp = modulation::speedup_metric(tr, ref, 1.1 * steady);
    h.push_back("result.settle_threshold = " + fmt(1.1 * steady));
    h.push_back("result.settle_time = " + fmt(sp.t_mod));
    h.push_back("result.settle_time_unmodulated = " + fmt(sp.t_ref));
    h.push_back("result.speedup = " + fmt(sp.ratio));
  }
  if (schedule.mode() == modulation::ScheduleMode::periodic && schedule.pulses().size() >= 3) {
    const auto fl = modulation::on_phase_floor(tr, schedule, 1);
    h.push_back("result.on_phase_floor = " + fmt(fl.floor));
    h.push_back("result.on_phase_mean = " + fmt(fl.mean));
  }

  out.table.columns = {"t", "kappa"};
  out.table.columns.insert(out.table.columns.end(), moment_columns.begin(), moment_columns.end());
  out.table.columns.push_back("n_b_unmodulated");
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    std::vector<double> row{tr.times[i], schedule.kappa_at(tr.times[i])};
    append_moments(row, tr.states[i]);
    row.push_back(ref.states[i].n_b);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

RunOutput run_oracle(const RunConfig& cfg) {
  const auto rp = cfg.resolve();
  const auto init = initial_state(cfg, rp);
  const lindblad::Generator gen(rp, cfg.fock);
  const auto rho0 = lindblad::DensityMatrix::thermal(cfg.fock, init.n_a, init.n_b);
  const auto res = lindblad::evolve_rho(rho0, gen, cfg.t_final, cfg.oracle);

  auto opts = cfg.evolve;
  opts.sample_dt = res.snapshots.size() > 1 ? res.snapshots[1].t - res.snapshots[0].t
                                            : cfg.t_final;
  const auto cov = covariance::evolve(init, rp, cfg.t_final, opts);
  if (cov.times.size() != res.snapshots.size())
    throw NoConvergence("oracle: covariance and oracle sample grids disagree");

  RunOutput out;
  out.table.columns = {"t",           "n_a",          "n_b",
                       "n_b_cov",     "rel_dev",      "trace_error",
                       "hermiticity_error", "min_eigenvalue", "top_photon_population",
                       "top_phonon_population"};
  double max_dev = 0.0;
  for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
    const auto& s = res.snapshots[i];
    const double ref = cov.states[i].n_b;
    const double dev = std::abs(s.moments.n_b - ref) / std::max(1.0, ref);
    max_dev = std::max(max_dev, dev);
    out.table.rows.push_back({s.t, s.moments.n_a, s.moments.n_b, ref, dev,
                              s.health.trace_error, s.health.hermiticity_error,
                              s.health.min_eigenvalue, s.health.top_photon_population,
                              s.health.top_phonon_population});
  }
  auto& h = out.table.header = cfg.header();
  h.push_back("result.dt_used = " + fmt(res.dt_used));
  h.push_back("result.max_rel_dev = " + fmt(max_dev));
  h.push_back("result.renormalizations = " + std::to_string(res.renormalizations));
  h.push_back("result.total_trace_correction = " + fmt(res.total_trace_correction));
  h.push_back("result.max_step_trace_drift = " + fmt(res.max_step_trace_drift));
  h.push_back(std::string("result.truncation_warning = ") +
              (res.truncation_warning ? "true" : "false"));
  if (res.truncation_warning)
    out.warnings.push_back("oracle: more than 1e-4 population in a top Fock level; raise dim_a/dim_b");

  if (!cfg.dump_matrix.empty()) {
    std::ofstream f(cfg.dump_matrix);
    if (!f) throw ConfigError("dump_matrix: cannot write '" + cfg.dump_matrix + "'");
    lindblad::write_matrix(f, res.final_state);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

const std::vector<std::string>& limits_columns() {
  static const std::vector<std::string> cols = {
      "n_f",         "n_f_c",       "n_f_q",         "n_f_q_simplified", "n_f_min_q",
      "detuning_opt", "nstd_full",  "nstd_resolved", "nstd_weak",        "nstd_strong",
      "n_b_steady",  "nins",        "nins_opt",      "cooperativity",    "gamma_opt",
      "spring_shift", "stable"};
  return cols;
}

std::vector<double> limits_row(const ReducedParams& rp) {
  rp.validate();
  std::vector<double> row;
  row.reserve(limits_columns().size());

  spectra::CoolingLimit cl{nan, nan, nan, nan};
  guarded([&] {
    cl = spectra::cooling_limit(rp);
    return 0.0;
  });
  row.insert(row.end(), {cl.n_f, cl.n_classical, cl.n_quantum, cl.n_quantum_simplified});

  spectra::QuantumLimit ql{nan, nan};
  guarded([&] {
    ql = spectra::min_quantum_limit(rp.kappa, rp.omega_m);
    return 0.0;
  });
  row.insert(row.end(), {ql.n_min, ql.detuning_opt});

  covariance::ClosedForms cf{nan, nan, nan, nan, true};
  guarded([&] {
    cf = covariance::nstd_closed_form(rp);
    return 0.0;
  });
  if (cf.off_design_point)
    row.insert(row.end(), {nan, nan, nan, nan});
  else
    row.insert(row.end(), {cf.full, cf.resolved, cf.weak, cf.strong});

  row.push_back(guarded([&] { return covariance::steady_state_moments(rp).n_b; }));
  row.push_back(guarded([&] { return modulation::nins_limit(rp); }));
  row.push_back(guarded([&] { return modulation::ninsmat_limit(rp); }));
  row.push_back(cooperativity(rp));
  const auto rates = spectra::scattering_rates(rp);
  row.push_back(rates.gamma_opt);
  row.push_back(rates.spring_shift);
  row.push_back(guarded([&] { return stability_check(rp) ? 1.0 : 0.0; }) == 1.0 ? 1.0 : 0.0);
  return row;
}

RunOutput run(const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::limits: return run_limits(cfg);
    case Mode::spectrum: return run_spectrum(cfg);
    case Mode::evolve: return run_evolve(cfg);
    case Mode::modulate: return run_modulate(cfg);
    case Mode::oracle: return run_oracle(cfg);
    case Mode::sweep: return run_sweep(cfg);
  }
  throw ConfigError("mode: unknown");
}

RunOutput run_sweep(const RunConfig& cfg, unsigned threads) {
  if (cfg.axes.empty()) {
    RunConfig single = cfg;
    single.mode = Mode::limits;
    return run_limits(single);
  }

  std::vector<std::vector<double>> grid;
  for (const auto& a : cfg.axes) grid.push_back(a.values());
  const std::size_t inner = grid.size() == 2 ? grid[1].size() : 1;
  const std::size_t total = grid[0].size() * inner;

  std::vector<std::vector<double>> rows(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < total;) {
      try {
        RunConfig point = cfg;
        std::vector<double> row;
        const std::size_t idx[2] = {i / inner, i % inner};
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const double v = grid[k][idx[k]];
          set_key(point, cfg.axes[k].name, fmt(v));
          row.push_back(v);
        }
        const auto lim = limits_row(point.resolve());
        row.insert(row.end(), lim.begin(), lim.end());
        rows[i] = std::move(row);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunOutput out;
  out.table.header = cfg.header();
  for (const auto& a : cfg.axes) out.table.columns.push_back(a.name);
  out.table.columns.insert(out.table.columns.end(), limits_columns().begin(),
                           limits_columns().end());
  out.table.rows = std::move(rows);
  return out;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cavity optomechanical cooling toolkit"};
  app.set_version_flag("--version", "optocool " OPTOCOOL_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_path, format = "csv";
  std::vector<std::string> sets;
  const std::pair<Mode, const char*> modes[] = {
      {Mode::limits, "Closed-form and steady-state cooling limits table"},
      {Mode::spectrum, "Force, mechanical or self-energy spectrum on a frequency grid"},
      {Mode::evolve, "Covariance (second-moment) time evolution"},
      {Mode::modulate, "Evolution under a modulated cavity decay kappa(t)"},
      {Mode::oracle, "Truncated Fock-space master equation vs covariance engine"},
      {Mode::sweep, "Limits table over 1-2 parameter axes"},
  };
  for (const auto& [mode, desc] : modes) {
    auto* sub = app.add_subcommand(std::string(to_string(mode)), desc);
    sub->add_option("--config", config_path, "Config file (key = value lines)");
    sub->add_option("--set", sets, "Override a config key (key=value), repeatable")
        ->allow_extra_args(false);
    sub->add_option("--out", out_path, "Output file (default: stdout)");
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return static_cast<int>(ErrorFamily::config);
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const Mode mode = parse_mode(sub->get_name());
    const std::string text = config_path.empty() ? std::string() : read_file(config_path);
    const auto cfg = parse_config(text, sets, mode);
    const auto result = run(cfg);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';

    std::ostringstream buf;
    if (format == "json")
      io::write_json(buf, result.table);
    else
      io::write_csv(buf, result.table);

    if (out_path.empty()) {
      out << buf.str();
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f || !(f << buf.str()) || !f.flush())
        throw ConfigError("out: cannot write '" + out_path + "'");
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace optocool::cli

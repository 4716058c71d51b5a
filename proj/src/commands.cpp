#include "hcmpc/commands.hpp"

#include "hcmpc/artifacts.hpp"

#include <fstream>
#include <ostream>

namespace hcmpc {

namespace {

struct Prepared {
  ScenarioConfig config;
  std::filesystem::path out;
};

// Loads the file and applies command-line overrides. Throws ConfigError.
Prepared prepare(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("<command line>:1: --config is required");
  LoadedConfig loaded = load_config(opts.config_path);
  ScenarioConfig& c = loaded.scenario;
  auto& a = c.analysis;
  const auto bad = [](const std::string& flag, const std::string& v) {
    return ConfigError("<command line>:1: invalid value '" + v + "' for " + flag);
  };
  if (opts.provenance) {
    if (*opts.provenance == "x0") a.provenance = Provenance::X0Only;
    else if (*opts.provenance == "trajectory") a.provenance = Provenance::FullTrajectory;
    else throw bad("--provenance", *opts.provenance);
  }
  if (opts.delta) {
    if (*opts.delta == "heuristic") a.delta_method = DeltaMethod::Heuristic;
    else if (*opts.delta == "prop4") a.delta_method = DeltaMethod::Prop4;
    else throw bad("--delta", *opts.delta);
  }
  if (opts.nu) {
    if (*opts.nu == "heuristic") a.nu_method = NuMethod::Heuristic;
    else if (*opts.nu == "prop7") a.nu_method = NuMethod::Prop7;
    else throw bad("--nu", *opts.nu);
  }
  if (opts.baseline_lcss) a.baseline_lcss = true;
  if (opts.jobs) {
    if (*opts.jobs < 1) throw bad("--jobs", std::to_string(*opts.jobs));
    c.jobs = *opts.jobs;
  }
  Prepared p;
  p.out = !opts.out_dir.empty() ? opts.out_dir : !loaded.output_dir.empty() ? loaded.output_dir : "hcmpc_out";
  p.config = std::move(c);
  return p;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const UnsupportedConfiguration& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Prepared p = prepare(opts);
    const auto& pair = p.config.pairs.front();
    // Every transition is analysed so the step CSV carries the online alpha;
    // the summary bounds follow the configured provenance.
    ScenarioConfig traj = p.config;
    traj.analysis.provenance = Provenance::FullTrajectory;
    SweepRow row = run_row(traj, pair);
    if (row.ok) {
      AnalysisOptions a = p.config.analysis;
      a.solver = p.config.closed_loop.solver;
      row.report = aggregate_bounds(row.run, a, row.steps);
    }
    write_simulation(p.out, p.config, row);
    out << "simulate N=" << pair.N << " Nt=" << pair.Ntilde << " steps=" << row.run.steps.size()
        << " J_T=" << format_number(row.cost.J_T) << " tail=" << format_number(row.cost.tail)
        << " termination=" << to_string(row.run.termination) << "\n";
    for (const auto& [k, v] : safety_minima(row.run)) out << "  min " << k << " = " << format_number(v) << "\n";
    out << "artifacts written to " << p.out.string() << "\n";
    if (!row.ok) {
      err << "run failed: " << row.error << "\n";
      return static_cast<int>(kExitSolverFailure);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Prepared p = prepare(opts);
    const auto rows = sweep(p.config, p.config.jobs);
    write_sweep(p.out, p.config, rows);
    int failed = 0;
    for (const auto& r : rows) {
      if (!r.ok) {
        ++failed;
        err << "row N=" << r.horizons.N << " Nt=" << r.horizons.Ntilde << " failed: " << r.error << "\n";
      }
    }
    out << "sweep " << p.config.name << ": " << rows.size() << " rows, " << failed << " failed; artifacts in "
        << p.out.string() << "\n";
    return static_cast<int>(failed ? kExitSolverFailure : kExitOk);
  });
}

int cmd_oracle_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Prepared p = prepare(opts);
    const auto rep = oracle_check(p.config);
    int failures = 0;
    for (const auto& e : rep.entries) failures += e.pass ? 0 : 1;
    out << "oracle-check: " << rep.entries.size() << " comparisons, " << failures << " failed\n";
    if (rep.worst >= 0) {
      const auto& w = rep.entries[static_cast<std::size_t>(rep.worst)];
      (rep.pass ? out : err) << "worst: " << w.check << " " << w.problem << " x0=" << format_number(w.x0)
                             << " computed=" << format_number(w.computed) << " reference=" << format_number(w.reference)
                             << " error=" << format_number(w.error) << " tolerance=" << format_number(w.tolerance)
                             << "\n";
    }
    return static_cast<int>(rep.pass ? kExitOk : kExitCheckFailed);
  });
}

int cmd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (opts.input.empty()) throw ConfigError("<command line>:1: --input is required");
    std::ifstream in(opts.input);
    if (!in) throw ConfigError(opts.input + ":1: cannot open file");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(opts.input + ":1: " + e.what());
    }
    const std::filesystem::path dir =
        !opts.out_dir.empty() ? std::filesystem::path(opts.out_dir) : std::filesystem::path(opts.input).parent_path();
    for (const auto& f : render_plots(doc, dir)) out << "wrote " << f.string() << "\n";
    return kExitOk;
  });
}

}  // namespace hcmpc

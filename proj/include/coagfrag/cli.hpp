#pragma once

// Command-line front end.
//
//   coagfrag simulate --config cfg.json [--out DIR]
//   coagfrag analyze  --config cfg.json [--p P] [--out DIR]
//   coagfrag converge --config cfg.json --sizes 25,50,100 [--ref 400] [--p P] [--weight W] [--out DIR]
//   coagfrag example  ID [--out DIR]
//
// Shared: --override key=value (repeatable), --grid-points N, --quiet, --verbose.
// Exit status: 0 success, 1 invalid input or usage, 2 failed integration.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coagfrag/config.hpp"
#include "coagfrag/errors.hpp"
#include "coagfrag/experiments.hpp"

namespace coagfrag {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 1, kExitFailed = 2 };

namespace detail {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::size_t> grid_points;
  std::optional<double> p;
  std::optional<double> weight;
  std::vector<SizeIndex> sizes;
  std::optional<SizeIndex> ref;
  int example_id = 0;
  bool quiet = false;
  bool verbose = false;
};

inline ScenarioConfig effective_config(const ScenarioConfig& base, const CliOptions& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.grid_points) overrides.push_back("run.output_grid_points=" + std::to_string(*o.grid_points));
  if (o.p) overrides.push_back("norm.p=" + format_double(*o.p));
  if (o.weight) overrides.push_back("norm.weight_exp=" + format_double(*o.weight));
  return overrides.empty() ? base : apply_overrides(base, overrides);
}

inline std::filesystem::path out_dir_for(const CliOptions& o, const std::string& fallback) {
  return o.out_dir.empty() ? std::filesystem::path("runs") / fallback : std::filesystem::path(o.out_dir);
}

inline int finish_run(const ScenarioRun& run, const std::filesystem::path& dir, const CliOptions& o,
                      std::ostream& out, std::ostream& err) {
  if (!o.quiet) {
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
  }
  if (!run.ok()) {
    err << "error: integration failed (" << to_string(run.trajectory.status) << "): " << run.trajectory.message
        << "\npartial output kept in " << dir.string() << '\n';
    return kExitFailed;
  }
  if (!o.quiet) {
    const auto& m = run.trajectory.moments;
    out << run.config.name << ": " << run.trajectory.stats.steps << " steps, " << run.trajectory.stats.rejected
        << " rejected, " << format_double(run.wall_seconds) << " s; wrote " << dir.string() << '\n';
    if (o.verbose) {
      out << "m0 " << m.front()[0] << " -> " << m.back()[0] << "\nm1 " << m.front()[1] << " -> " << m.back()[1]
          << "\nm2 " << m.front()[2] << " -> " << m.back()[2] << "\nm3 " << m.front()[3] << " -> " << m.back()[3]
          << '\n';
    }
  }
  return kExitOk;
}

inline int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = effective_config(load_config(o.config_path), o);
  const auto dir = out_dir_for(o, cfg.name);
  return finish_run(run_scenario(cfg, dir), dir, o, out, err);
}

inline int cmd_example(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = effective_config(builtin_example(o.example_id), o);
  const auto dir = out_dir_for(o, cfg.name);
  return finish_run(run_scenario(cfg, dir), dir, o, out, err);
}

inline int cmd_analyze(const CliOptions& o, std::ostream& out, std::ostream&) {
  const ScenarioConfig cfg = effective_config(load_config(o.config_path), o);
  if (cfg.norm.p < 1.0) throw ValidationError("norm.p", "analysis needs p >= 1");
  const Json report = to_json(check_conditions(cfg.frag, cfg.coag, cfg.laws, cfg.norm.p, kConditionSampleSize));
  const std::string text = report.dump(2) + "\n";
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    write_text(std::filesystem::path(o.out_dir) / "analysis.json", text);
  }
  if (!o.quiet) out << text;
  return kExitOk;
}

inline int cmd_converge(const CliOptions& o, std::ostream& out, std::ostream&) {
  ScenarioConfig cfg = load_config(o.config_path);
  CliOptions run_opts = o;
  run_opts.p.reset();
  run_opts.weight.reset();
  cfg = effective_config(cfg, run_opts);
  NormSpec norm = cfg.norm;
  if (o.p) norm.p = *o.p;
  if (o.weight) norm.weight_exp = *o.weight;
  const SizeIndex ref = o.ref ? *o.ref : default_reference_size(o.sizes);

  const ConvergenceResult result = convergence_study(cfg, o.sizes, ref, norm);
  const auto dir = out_dir_for(o, cfg.name + "-convergence");
  std::filesystem::create_directories(dir);
  const std::string csv = convergence_csv(result);
  write_text(dir / "convergence.csv", csv);
  if (!o.quiet) out << csv;
  return kExitOk;
}

}  // namespace detail

/// Parses argv and runs the selected subcommand.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  detail::CliOptions o;
  CLI::App app{"Discrete coagulation-fragmentation simulations"};
  app.name("coagfrag");
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out_dir, "Output directory");
    cmd->add_option("--override", o.overrides, "Config override key=value (repeatable)")->allow_extra_args(false);
    cmd->add_option("--grid-points", o.grid_points, "Number of output times")->check(CLI::Range(2, 1000000));
    auto* quiet = cmd->add_flag("--quiet", o.quiet, "Print errors only");
    cmd->add_flag("--verbose", o.verbose, "Print moment summaries")->excludes(quiet);
  };

  auto* simulate = app.add_subcommand("simulate", "Integrate a scenario and write CSV/JSON output");
  simulate->add_option("--config", o.config_path, "Scenario JSON")->required();
  simulate->add_option("--p", o.p, "Norm order recorded in the config");
  simulate->add_option("--weight", o.weight, "Norm weight exponent recorded in the config");
  add_common(simulate);

  auto* analyze = app.add_subcommand("analyze", "Check the well-posedness hypotheses");
  analyze->add_option("--config", o.config_path, "Scenario JSON")->required();
  analyze->add_option("--p", o.p, "Moment order");
  add_common(analyze);

  auto* converge = app.add_subcommand("converge", "Truncation convergence study");
  converge->add_option("--config", o.config_path, "Scenario JSON")->required();
  converge->add_option("--sizes", o.sizes, "Truncation sizes, comma separated")->delimiter(',')->required();
  converge->add_option("--ref", o.ref, "Reference size (default: twice the largest size)");
  converge->add_option("--p", o.p, "Norm order");
  converge->add_option("--weight", o.weight, "Norm weight exponent");
  add_common(converge);

  auto* example = app.add_subcommand("example", "Run a built-in example");
  example->add_option("id", o.example_id, "Example 1..6")->required()->check(CLI::Range(1, 6));
  example->add_option("--p", o.p, "Norm order recorded in the config");
  example->add_option("--weight", o.weight, "Norm weight exponent recorded in the config");
  add_common(example);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalid;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInvalid;
  }

  try {
    if (simulate->parsed()) return detail::cmd_simulate(o, out, err);
    if (analyze->parsed()) return detail::cmd_analyze(o, out, err);
    if (converge->parsed()) return detail::cmd_converge(o, out, err);
    return detail::cmd_example(o, out, err);
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const IntegrationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }
}

}  // namespace coagfrag

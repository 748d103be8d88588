#pragma once

// Built-in scenarios, scenario runs persisted as CSV/JSON, and truncation
// self-convergence studies.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include "coagfrag/analysis.hpp"
#include "coagfrag/config.hpp"
#include "coagfrag/errors.hpp"
#include "coagfrag/integrator.hpp"

namespace coagfrag {

/// Sample size used for the condition checks in reports.
inline constexpr SizeIndex kConditionSampleSize = 1000;

/// The six reference parameterisations. All use N = 200, u_n(0) = 10 for
/// 5 <= n <= 20 and t in [0, 1].
inline ScenarioConfig builtin_example(int id) {
  if (id < 1 || id > 6) throw ValidationError("example", "id must be 1..6, got " + std::to_string(id));
  ScenarioConfig cfg;
  cfg.name = "example" + std::to_string(id);
  cfg.N = 200;
  cfg.initial = InitialCondition::block(5, 20, 10.0);
  cfg.t_end = 1.0;
  cfg.solver = SolverConfig::for_interval(0.0, 1.0);
  cfg.output_grid_points = 101;

  // Even ids use the power-law / product pair with exponent 2.5.
  const bool heavy = id % 2 == 0;
  cfg.frag = heavy ? FragmentationKernelSpec::powerlaw(0.1) : FragmentationKernelSpec::binary();
  cfg.coag = heavy ? CoagulationKernelSpec::product(5e-3, 1.0) : CoagulationKernelSpec::brownian_like(5e-3);
  const double exponent = heavy ? 2.5 : 1.0;

  RateLaws& L = cfg.laws;
  L.a = 1.0;
  L.frag_exp = exponent;
  if (id == 3 || id == 4) {
    L.g = L.d = L.s = 1.0;
    L.decay_exp = L.sed_exp = 0.0;
    L.growth_exp = exponent;
  } else if (id == 5 || id == 6) {
    L.g = 0.0;
    L.d = L.s = 1.0;
    L.decay_exp = 0.0;
    L.sed_exp = exponent;
  }
  cfg.norm = NormSpec{id <= 4 ? 2.0 : 1.0, 0.0};
  return cfg;
}

/// 17 significant digits, enough to read back the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::size_t thread_budget(std::size_t jobs) {
  std::size_t cap = 0;
  if (const char* env = std::getenv("COAGFRAG_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw ValidationError("COAGFRAG_THREADS", "must be a non-negative integer");
    cap = static_cast<std::size_t>(v);
  }
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

/// Runs job(k) for k in [0, count) on up to thread_budget(count) threads.
/// The first exception thrown by any job is rethrown.
template <class Job>
void parallel_for(std::size_t count, Job&& job) {
  const std::size_t workers = thread_budget(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        job(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Serialisation

inline Json to_json(const DominanceCheck& c) {
  return {{"pass", c.pass},
          {"exponent_condition", c.exponent_condition},
          {"sampled_min", c.sampled_min},
          {"asymptotic_limit", c.asymptotic_limit},
          {"sampled_up_to", c.sampled_up_to}};
}

inline Json to_json(const ConditionReport& r) {
  Json coag = {{"feasible", r.coag_bound.feasible},
               {"kernel_degree", r.coag_bound.kernel_degree},
               {"loss_degree", r.coag_bound.loss_degree},
               {"min_weight_exp", r.coag_bound.min_weight_exp},
               {"kappa", r.coag_bound.kappa}};
  Json j = {{"p", r.p},
            {"i_max", r.i_max},
            {"well_posed_for_p", r.well_posed_for_p},
            {"frag_dominance", to_json(r.frag_dominance)},
            {"sed_dominance", to_json(r.sed_dominance)},
            {"coag_bound", coag},
            {"omega1_bounded", r.omega1_bounded}};
  j["omega1"] = r.omega1_bounded ? Json(r.omega1) : Json(nullptr);
  j["omega1_sampled"] = r.omega1_sampled;
  j["messages"] = r.messages;
  return j;
}

inline Json to_json(const StepStatistics& s) {
  return {{"steps", s.steps},
          {"rejected", s.rejected},
          {"newton_iterations", s.newton_iterations},
          {"newton_failures", s.newton_failures},
          {"jacobian_evaluations", s.jacobian_evaluations},
          {"factorizations", s.factorizations},
          {"rhs_evaluations", s.rhs_evaluations}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string trajectory_csv(const Trajectory& traj, SizeIndex n) {
  std::string s = "t";
  for (SizeIndex i = 1; i <= n; ++i) s += ",u_" + std::to_string(i);
  s += '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    s += format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) {
      s += ',';
      s += format_double(traj.states[k][i]);
    }
    s += '\n';
  }
  return s;
}

inline std::string moments_csv(const Trajectory& traj) {
  std::string s = "t,m0,m1,m2,m3,mass_flux,growth_leakage\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    s += format_double(traj.times[k]);
    for (double m : traj.moments[k]) s += ',' + format_double(m);
    s += ',' + format_double(traj.diagnostics[k].mass_flux);
    s += ',' + format_double(traj.diagnostics[k].growth_leakage);
    s += '\n';
  }
  return s;
}

// ---------------------------------------------------------------------------
// Scenario runs

struct ScenarioRun {
  ScenarioConfig config;
  ConditionReport conditions;
  Trajectory trajectory;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;

  bool ok() const { return trajectory.ok(); }
};

inline ConditionReport scenario_conditions(const ScenarioConfig& cfg) {
  return check_conditions(cfg.frag, cfg.coag, cfg.laws, std::max(1.0, cfg.norm.p), kConditionSampleSize);
}

inline Json report_json(const ScenarioRun& run) {
  const Trajectory& tr = run.trajectory;
  double max_flux = 0.0;
  double min_density = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    max_flux = std::max(max_flux, std::abs(tr.diagnostics[k].mass_flux));
    min_density = std::min(min_density, tr.states[k].minCoeff());
  }
  Json diag = {{"output_times", tr.times.size()},
               {"max_abs_mass_flux", max_flux},
               {"min_density", tr.times.empty() ? Json(nullptr) : Json(min_density)},
               {"final_time", tr.times.empty() ? Json(nullptr) : Json(tr.times.back())},
               {"final_growth_leakage",
                tr.times.empty() ? Json(nullptr) : Json(tr.diagnostics.back().growth_leakage)}};
  return {{"status", to_string(tr.status)},
          {"partial", !tr.ok()},
          {"message", tr.message},
          {"warnings", run.warnings},
          {"conditions", to_json(run.conditions)},
          {"config", config_to_json(run.config)},
          {"solver_statistics", to_json(tr.stats)},
          {"diagnostics", diag},
          {"wall_time_seconds", run.wall_seconds}};
}

/// Checks conditions, integrates and, when `out_dir` is given, writes
/// trajectory.csv, moments.csv and report.json there. Failed integrations
/// still write what was reached; the report carries "partial": true.
inline ScenarioRun run_scenario(const ScenarioConfig& cfg,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  cfg.validate();
  ScenarioRun run;
  run.config = cfg;
  run.conditions = scenario_conditions(cfg);
  if (!run.conditions.well_posed_for_p) {
    run.warnings.push_back("well-posedness hypotheses not met for p = " + format_double(run.conditions.p));
    for (const auto& m : run.conditions.messages) run.warnings.push_back(m);
  }

  const TruncatedSystem sys = cfg.system();
  const auto start = std::chrono::steady_clock::now();
  run.trajectory = integrate(sys, cfg.initial_state(), 0.0, cfg.t_end, cfg.solver, cfg.output_grid());
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_text(*out_dir / "trajectory.csv", trajectory_csv(run.trajectory, cfg.N));
    write_text(*out_dir / "moments.csv", moments_csv(run.trajectory));
    write_text(*out_dir / "report.json", report_json(run).dump(2) + "\n");
  }
  return run;
}

// ---------------------------------------------------------------------------
// Convergence studies

struct ConvergenceResult {
  std::vector<SizeIndex> sizes;
  SizeIndex reference_size = 0;
  NormSpec norm;
  std::vector<double> errors;
  std::vector<double> empirical_orders;  // NaN for the first size
};

inline SizeIndex default_reference_size(const std::vector<SizeIndex>& sizes) {
  if (sizes.empty()) throw ValidationError("sizes", "must not be empty");
  return 2 * *std::max_element(sizes.begin(), sizes.end());
}

/// Sup over the common output grid of ||I_N u^(N) - u^(ref)||, where I_N
/// pads with zeros up to the reference size.
inline double truncation_error(const Trajectory& coarse, const Trajectory& reference, const NormSpec& norm,
                               const RateLaws& laws) {
  if (coarse.times != reference.times) throw std::invalid_argument("trajectories use different output grids");
  double worst = 0.0;
  for (std::size_t k = 0; k < coarse.times.size(); ++k) {
    const StateVector& ref = reference.states[k];
    StateVector diff = -ref;
    diff.head(coarse.states[k].size()) += coarse.states[k];
    worst = std::max(worst, weighted_norm(diff, norm, laws));
  }
  return worst;
}

inline ConvergenceResult convergence_study(const ScenarioConfig& base, const std::vector<SizeIndex>& sizes,
                                           SizeIndex reference_size, const NormSpec& norm) {
  norm.validate();
  if (sizes.empty()) throw ValidationError("sizes", "must not be empty");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] < 2) throw ValidationError("sizes", "every size must be >= 2");
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw ValidationError("sizes", "must be strictly increasing");
  }
  if (reference_size <= sizes.back()) {
    throw ValidationError("ref", "reference size " + std::to_string(reference_size) +
                                     " must exceed every study size");
  }
  if (reference_size > kMaxTruncationSize) {
    throw ValidationError("ref", "must be <= " + std::to_string(kMaxTruncationSize));
  }
  if (base.initial.support() > sizes.front()) {
    throw ValidationError("sizes", "initial data reaches size " + std::to_string(base.initial.support()) +
                                       ", above the smallest study size " + std::to_string(sizes.front()));
  }

  std::vector<SizeIndex> all = sizes;
  all.push_back(reference_size);
  std::vector<Trajectory> runs(all.size());
  // Largest systems first so the slowest job starts earliest.
  parallel_for(all.size(), [&](std::size_t job) {
    const std::size_t k = all.size() - 1 - job;
    ScenarioConfig cfg = base;
    cfg.N = all[k];
    cfg.validate();
    const TruncatedSystem sys = cfg.system();
    Trajectory tr = integrate(sys, cfg.initial_state(), 0.0, cfg.t_end, cfg.solver, cfg.output_grid());
    if (!tr.ok()) {
      throw IntegrationError("integration at N = " + std::to_string(cfg.N) + " failed: " + tr.message);
    }
    runs[k] = std::move(tr);
  });

  ConvergenceResult result;
  result.sizes = sizes;
  result.reference_size = reference_size;
  result.norm = norm;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    result.errors.push_back(truncation_error(runs[k], runs.back(), norm, base.laws));
    double order = std::numeric_limits<double>::quiet_NaN();
    if (k > 0) {
      order = std::log2(result.errors[k - 1] / result.errors[k]) /
              std::log2(static_cast<double>(sizes[k]) / static_cast<double>(sizes[k - 1]));
    }
    result.empirical_orders.push_back(order);
  }
  return result;
}

inline std::string convergence_csv(const ConvergenceResult& r) {
  std::string s = "N,error,empirical_order\n";
  for (std::size_t k = 0; k < r.sizes.size(); ++k) {
    s += std::to_string(r.sizes[k]) + ',' + format_double(r.errors[k]) + ',';
    if (!std::isnan(r.empirical_orders[k])) s += format_double(r.empirical_orders[k]);
    s += '\n';
  }
  return s;
}

}  // namespace coagfrag

#pragma once

// Time integration of a TruncatedSystem.
//
// implicit_adaptive: TR-BDF2 written as a three-stage ESDIRK with diagonal
// gamma/2 (gamma = 2 - sqrt 2), L-stable, order 2 with an embedded order-3
// solution for error control. Both implicit stages share the Newton matrix
// I - h (gamma/2) J, so one LU factorisation serves a whole step (and is
// reused across steps while h stays within a factor 2).
//
// explicit_reference: classical fixed-step RK4. Slow, used as an oracle.
//
// Output times are hit exactly by shortening the step that would cross them.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagfrag/analysis.hpp"
#include "coagfrag/model.hpp"

namespace coagfrag {

enum class Method { implicit_adaptive, explicit_reference };

inline const char* to_string(Method m) {
  return m == Method::implicit_adaptive ? "implicit_adaptive" : "explicit_reference";
}

struct SolverConfig {
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 1e-6;
  double h_min = 1e-14;
  double h_max = 1.0;
  long max_steps = 1'000'000;
  Method method = Method::implicit_adaptive;
  double newton_tol = 1e-3;  // on the correction, in units of the error weights
  int newton_max_iters = 10;

  /// Defaults scaled to [t0, t1]: h_init = 1e-6 (t1 - t0), h_max = t1 - t0.
  static SolverConfig for_interval(double t0, double t1) {
    SolverConfig cfg;
    cfg.h_init = 1e-6 * (t1 - t0);
    cfg.h_max = t1 - t0;
    cfg.h_min = std::min(cfg.h_min, cfg.h_init);
    return cfg;
  }

  void validate() const {
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(rtol)) throw ValidationError("solver.rtol", "must be > 0");
    if (!positive(atol)) throw ValidationError("solver.atol", "must be > 0");
    if (!positive(h_min)) throw ValidationError("solver.h_min", "must be > 0");
    if (!positive(h_init) || h_init < h_min) {
      throw ValidationError("solver.h_init", "must satisfy h_min <= h_init");
    }
    if (!positive(h_max) || h_max < h_init) {
      throw ValidationError("solver.h_max", "must satisfy h_init <= h_max");
    }
    if (max_steps < 1) throw ValidationError("solver.max_steps", "must be >= 1");
    if (!positive(newton_tol)) throw ValidationError("solver.newton_tol", "must be > 0");
    if (newton_max_iters < 1) throw ValidationError("solver.newton_max_iters", "must be >= 1");
  }

  bool operator==(const SolverConfig&) const = default;
};

struct StepStatistics {
  long steps = 0;
  long rejected = 0;
  long newton_iterations = 0;
  long newton_failures = 0;
  long jacobian_evaluations = 0;
  long factorizations = 0;
  long rhs_evaluations = 0;
};

enum class IntegrationStatus { success, step_size_underflow, newton_failure, non_finite_state, max_steps_exceeded };

inline const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::success: return "success";
    case IntegrationStatus::step_size_underflow: return "step_size_underflow";
    case IntegrationStatus::newton_failure: return "newton_failure";
    case IntegrationStatus::non_finite_state: return "non_finite_state";
    case IntegrationStatus::max_steps_exceeded: return "max_steps_exceeded";
  }
  return "unknown";
}

/// Moment orders recorded per output time.
inline constexpr std::array<double, 4> kMomentOrders{0.0, 1.0, 2.0, 3.0};

struct OutputDiagnostics {
  double mass_flux = 0.0;
  double growth_leakage = 0.0;
  StepStatistics stats;  // cumulative up to this output time
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<std::array<double, 4>> moments;
  std::vector<OutputDiagnostics> diagnostics;
  StepStatistics stats;
  IntegrationStatus status = IntegrationStatus::success;
  std::string message;

  bool ok() const { return status == IntegrationStatus::success; }
};

/// n equally spaced points on [t0, t1], endpoints included.
inline std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n < 2) throw std::invalid_argument("uniform_grid needs at least two points");
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) {
    grid[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  grid.back() = t1;
  return grid;
}

/// One classical RK4 step.
inline StateVector explicit_reference_step(const TruncatedSystem& sys, const StateVector& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("explicit_reference_step requires h > 0");
  const StateVector k1 = sys.rhs(u);
  const StateVector k2 = sys.rhs(u + 0.5 * h * k1);
  const StateVector k3 = sys.rhs(u + 0.5 * h * k2);
  const StateVector k4 = sys.rhs(u + h * k3);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

inline bool all_finite(const StateVector& v) { return v.allFinite(); }

// Records output samples and their diagnostics.
class Recorder {
 public:
  Recorder(const TruncatedSystem& sys, Trajectory& traj) : sys_(sys), traj_(traj) {}

  void record(double t, const StateVector& u, const StepStatistics& stats) {
    traj_.times.push_back(t);
    traj_.states.push_back(u);
    std::array<double, 4> m{};
    for (std::size_t k = 0; k < kMomentOrders.size(); ++k) {
      m[k] = moment(u, kMomentOrders[k], sys_.laws());
    }
    traj_.moments.push_back(m);
    traj_.diagnostics.push_back({sys_.mass_flux(u), sys_.growth_leakage(u), stats});
  }

 private:
  const TruncatedSystem& sys_;
  Trajectory& traj_;
};

// Validates the output grid and drops points equal to t0.
inline std::vector<double> prepare_grid(double t0, double t1, const std::vector<double>& grid) {
  std::vector<double> out;
  double prev = t0;
  for (double t : grid) {
    if (!std::isfinite(t) || t < t0 || t > t1) {
      throw std::invalid_argument("output grid must lie within [t0, t1]");
    }
    if (t == t0 && out.empty()) continue;
    if (t <= prev) throw std::invalid_argument("output grid must be strictly increasing");
    out.push_back(t);
    prev = t;
  }
  return out;
}

class TrBdf2 {
 public:
  TrBdf2(const TruncatedSystem& sys, const SolverConfig& cfg) : sys_(sys), cfg_(cfg) {}

  void run(double t0, StateVector y, const std::vector<double>& targets, Trajectory& traj) {
    Recorder recorder(sys_, traj);
    recorder.record(t0, y, stats_);
    double t = t0;
    double h = std::min(cfg_.h_init, cfg_.h_max);
    StateVector fy = eval(y);

    for (double target : targets) {
      while (t < target) {
        if (stats_.steps + stats_.rejected >= cfg_.max_steps) {
          return fail(traj, IntegrationStatus::max_steps_exceeded,
                      "step limit reached at t = " + std::to_string(t));
        }
        // Land exactly on the output time; a step shortened only for that
        // reason may fall below h_min.
        const double remaining = target - t;
        const bool clipped = h >= remaining * (1.0 - 1e-12);
        const double h_step = clipped ? remaining : h;

        StateVector y_new;
        double err = 0.0;
        const StepOutcome outcome = attempt(y, fy, h_step, y_new, err);
        if (outcome == StepOutcome::newton_failed) {
          ++stats_.newton_failures;
          ++stats_.rejected;
          if (!jacobian_current_) {
            refresh_ = true;  // retry with a fresh Jacobian at the same h
          } else {
            h = 0.25 * h_step;
            refresh_ = true;
          }
          if (h < cfg_.h_min) {
            return fail(traj, IntegrationStatus::newton_failure,
                        "Newton iteration failed to converge at t = " + std::to_string(t));
          }
          continue;
        }
        if (outcome == StepOutcome::negative) {
          ++stats_.rejected;
          h = 0.5 * h_step;
          if (h < cfg_.h_min) {
            return fail(traj, IntegrationStatus::step_size_underflow,
                        "step size fell below h_min while rejecting negative densities at t = " +
                            std::to_string(t));
          }
          continue;
        }

        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 5.0);
        if (err > 1.0) {
          ++stats_.rejected;
          h = h_step * std::min(1.0, factor);
          if (h < cfg_.h_min) {
            return fail(traj, IntegrationStatus::step_size_underflow,
                        "step size fell below h_min at t = " + std::to_string(t));
          }
          continue;
        }

        ++stats_.steps;
        t = clipped ? target : t + h_step;
        y = std::move(y_new);
        if (!all_finite(y)) {
          return fail(traj, IntegrationStatus::non_finite_state,
                      "non-finite state at t = " + std::to_string(t));
        }
        fy = eval(y);
        jacobian_current_ = false;
        // A clipped step says nothing about the achievable size; keep h.
        const double proposed = std::min(h_step * factor, cfg_.h_max);
        h = clipped ? std::max(h, proposed) : proposed;
        h = std::min(h, cfg_.h_max);
      }
      recorder.record(t, y, stats_);
    }
    traj.stats = stats_;
  }

 private:
  enum class StepOutcome { accepted_candidate, newton_failed, negative };

  static constexpr double kGamma = 2.0 - 1.4142135623730951;
  static constexpr double kDiag = kGamma / 2.0;
  static constexpr double kW = 1.4142135623730951 / 4.0;
  // b - bhat for the embedded third-order solution.
  static constexpr double kE1 = (4.0 * kW - 1.0) / 3.0;
  static constexpr double kE2 = -1.0 / 3.0;
  static constexpr double kE3 = 2.0 * kDiag / 3.0;
  // Local errors are held to this fraction of rtol/atol. Per-step errors
  // add up over the run; at 1% the end-point error of linear decay stays
  // within a few rtol.
  static constexpr double kErrorTarget = 0.01;

  StateVector eval(const StateVector& y) {
    ++stats_.rhs_evaluations;
    return sys_.rhs(y);
  }

  void factorize(const StateVector& y, double h) {
    if (!has_jacobian_ || !jacobian_current_) {
      jac_ = sys_.jacobian(y);
      ++stats_.jacobian_evaluations;
      has_jacobian_ = true;
      jacobian_current_ = true;
    }
    const Eigen::Index n = jac_.rows();
    lu_.compute(Matrix::Identity(n, n) - (h * kDiag) * jac_);
    ++stats_.factorizations;
    h_lu_ = h;
    has_lu_ = true;
    refresh_ = false;
  }

  bool needs_factorization(double h) const {
    if (!has_lu_ || refresh_) return true;
    const double ratio = h / h_lu_;
    return ratio > 2.0 || ratio < 0.5;
  }

  // Solves Y - h*diag*f(Y) = psi by simplified Newton from `y`.
  // Returns the iteration count, or -1 on failure.
  int solve_stage(StateVector& y, const StateVector& psi, double h, const Eigen::VectorXd& scale) {
    double prev_norm = 0.0;
    for (int it = 1; it <= cfg_.newton_max_iters; ++it) {
      const StateVector f = eval(y);
      const StateVector residual = y - (h * kDiag) * f - psi;
      const StateVector delta = lu_.solve(-residual);
      ++stats_.newton_iterations;
      if (!delta.allFinite()) return -1;
      y += delta;
      const double norm = (delta.array().abs() / scale.array()).maxCoeff();
      if (norm <= cfg_.newton_tol) return it;
      if (it > 1) {
        const double rate = norm / prev_norm;
        if (rate >= 1.0) return -1;
        if (rate / (1.0 - rate) * norm <= cfg_.newton_tol) return it;
      }
      prev_norm = norm;
    }
    return -1;
  }

  StepOutcome attempt(const StateVector& y, const StateVector& fy, double h, StateVector& y_new,
                      double& err) {
    if (needs_factorization(h)) factorize(y, h);

    const Eigen::VectorXd scale = cfg_.atol + cfg_.rtol * y.array().abs();
    // The Newton matrix may carry a stale h_lu_; residuals always use h.
    const double hd = h * kDiag;

    // Stage 2 at t + gamma h.
    StateVector y2 = y + (kGamma * h) * fy;
    const StateVector psi2 = y + hd * fy;
    const int it2 = solve_stage(y2, psi2, h, scale);
    if (it2 < 0) return StepOutcome::newton_failed;
    const StateVector k2 = (y2 - psi2) / hd;

    // Stage 3 at t + h; stiffly accurate, so y_new = Y3.
    const StateVector psi3 = y + (kW * h) * (fy + k2);
    StateVector y3 = psi3 + hd * k2;
    const int it3 = solve_stage(y3, psi3, h, scale);
    if (it3 < 0) return StepOutcome::newton_failed;
    const StateVector k3 = (y3 - psi3) / hd;

    if (std::max(it2, it3) > cfg_.newton_max_iters / 2) refresh_ = true;

    if (!y3.allFinite()) return StepOutcome::newton_failed;
    if ((y3.array() < -cfg_.atol).any()) return StepOutcome::negative;

    // Filtered estimate (I - h d J)^{-1} h (e1 k1 + e2 k2 + e3 k3) stays
    // bounded for stiff components.
    const StateVector raw = h * (kE1 * fy + kE2 * k2 + kE3 * k3);
    const StateVector est = lu_.solve(raw);
    const Eigen::VectorXd weights =
        cfg_.atol + cfg_.rtol * y.array().abs().max(y3.array().abs());
    err = (est.array().abs() / weights.array()).maxCoeff() / kErrorTarget;
    if (!std::isfinite(err)) return StepOutcome::newton_failed;
    y_new = std::move(y3);
    return StepOutcome::accepted_candidate;
  }

  void fail(Trajectory& traj, IntegrationStatus status, std::string message) {
    traj.status = status;
    traj.message = std::move(message);
    traj.stats = stats_;
  }

  const TruncatedSystem& sys_;
  SolverConfig cfg_;
  StepStatistics stats_;
  Matrix jac_;
  Eigen::PartialPivLU<Matrix> lu_;
  double h_lu_ = 0.0;
  bool has_jacobian_ = false;
  bool jacobian_current_ = false;
  bool has_lu_ = false;
  bool refresh_ = false;
};

inline void run_rk4(const TruncatedSystem& sys, const SolverConfig& cfg, double t0, StateVector y,
                    const std::vector<double>& targets, Trajectory& traj) {
  Recorder recorder(sys, traj);
  StepStatistics stats;
  recorder.record(t0, y, stats);
  double t = t0;
  for (double target : targets) {
    while (t < target) {
      if (stats.steps >= cfg.max_steps) {
        traj.status = IntegrationStatus::max_steps_exceeded;
        traj.message = "step limit reached at t = " + std::to_string(t);
        traj.stats = stats;
        return;
      }
      const double remaining = target - t;
      const bool clipped = cfg.h_init >= remaining * (1.0 - 1e-12);
      const double h = clipped ? remaining : cfg.h_init;
      y = explicit_reference_step(sys, y, h);
      stats.rhs_evaluations += 4;
      ++stats.steps;
      t = clipped ? target : t + h;
      if (!y.allFinite()) {
        traj.status = IntegrationStatus::non_finite_state;
        traj.message = "non-finite state at t = " + std::to_string(t);
        traj.stats = stats;
        return;
      }
    }
    recorder.record(t, y, stats);
  }
  traj.stats = stats;
}

}  // namespace detail

/// Integrates `sys` from u0 over [t0, t1], sampling at `output_grid`
/// (t0 is always the first sample). On failure the returned trajectory
/// holds every sample reached so far and a non-success status.
inline Trajectory integrate(const TruncatedSystem& sys, const StateVector& u0, double t0, double t1,
                            const SolverConfig& cfg, const std::vector<double>& output_grid) {
  if (!(t0 < t1)) throw std::invalid_argument("integrate requires t0 < t1");
  if (static_cast<SizeIndex>(u0.size()) != sys.size()) {
    throw std::invalid_argument("initial state length does not match truncation size");
  }
  if (!u0.allFinite()) throw std::invalid_argument("initial state must be finite");
  cfg.validate();
  const auto targets = detail::prepare_grid(t0, t1, output_grid);

  Trajectory traj;
  if (cfg.method == Method::explicit_reference) {
    detail::run_rk4(sys, cfg, t0, u0, targets, traj);
  } else {
    detail::TrBdf2 stepper(sys, cfg);
    stepper.run(t0, u0, targets, traj);
  }
  return traj;
}

}  // namespace coagfrag

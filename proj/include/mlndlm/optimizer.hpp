#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/model.hpp"

namespace mlndlm {

enum class InitMode { alr_of_smoothed_proportions, zeros, user_supplied };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

struct OptimizerConfig {
  int max_iters = 5000;
  double grad_tol = 1e-5;      // sup-norm of the gradient
  double rel_obj_tol = 1e-9;   // stagnation guard, see lbfgs_minimize
  int history_size = 10;
  int max_linesearch = 40;
  InitMode init_mode = InitMode::alr_of_smoothed_proportions;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;  // sup-norm
  double seconds = 0.0;    // wall time since the start of the run
};

struct OptimizationResult {
  Eigen::MatrixXd eta_hat;
  std::vector<IterationRecord> trajectory;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
};

/// Minimizer state for a flat problem. Returns the objective and fills grad.
using FlatObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  std::vector<IterationRecord> trajectory;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// cubic-interpolation zoom). Objective evaluations that throw or return a
/// non-finite value are treated as +infinity by the line search.
/// Stops with converged = true once the gradient sup-norm is below grad_tol.
/// Stops with converged = false after max_iters, on line-search failure, or
/// when |f_k - f_{k+1}| / max(1, |f_{k+1}|) < rel_obj_tol for 5 consecutive
/// steps while the best gradient sup-norm has not improved for 50 steps.
LbfgsResult lbfgs_minimize(const FlatObjective& objective, const Eigen::VectorXd& x0,
                           const OptimizerConfig& config);

/// Starting point for the optimizer.
///  - alr_of_smoothed_proportions: alr((Y_t + 0.5) / (n_t + 0.5 D)) on
///    observed columns, linear interpolation across missing columns within a
///    series (constant extension at the ends), prior mean path F_t^T A_t for
///    series without observations.
///  - zeros: the zero matrix.
///  - user_supplied: `user`, which must be (D-1) x T.
Eigen::MatrixXd init_eta(const ModelSpec& spec, const CountDataset& data, InitMode mode,
                         const Eigen::MatrixXd* user = nullptr);

/// MAP estimate of eta under the collapsed model. `start` overrides the
/// configured init mode (used for warm starts).
OptimizationResult map_estimate(const ModelSpec& spec, const CountDataset& data,
                                const OptimizerConfig& config,
                                const Eigen::MatrixXd* start = nullptr);

}  // namespace mlndlm

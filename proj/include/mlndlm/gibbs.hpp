#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/model.hpp"
#include "mlndlm/optimizer.hpp"
#include "mlndlm/random.hpp"
#include "mlndlm/smoother.hpp"

namespace mlndlm {

/// Conditional inverse-gamma (shape, rate) for each diagonal entry of W
/// given a state draw.
struct WConditional {
  Eigen::VectorXd shape;
  Eigen::VectorXd rate;
};

/// Whitened state innovations Omega_t L, with Omega_t = Theta_t - G_t
/// Theta_{t-1} (Theta_0 of the series at its first step) and L the lower
/// Cholesky factor of Sigma^{-1}. One Q x (D-1) matrix per global time index.
std::vector<Eigen::MatrixXd> whitened_innovations(const ModelSpec& spec,
                                                  const SeriesLayout& layout,
                                                  const StateDraw& draw);

/// shape_q = a_q + N (D-1) / 2, rate_q = b_q + (1/2) sum of squared row-q
/// entries of the whitened innovations, N the number of transitions.
WConditional w_conditional(const ModelSpec& spec, const SeriesLayout& layout,
                           const StateDraw& draw, const HyperPrior& prior);

/// One draw w_q ~ InvGamma(shape_q, rate_q) for every q.
Eigen::VectorXd gibbs_w_update(const ModelSpec& spec, const SeriesLayout& layout,
                               const StateDraw& draw, const HyperPrior& prior,
                               RandomSource& rng);

struct GibbsConfig {
  int iterations = 1000;
  OptimizerConfig optimizer;
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(1, 0.5);
  // Uncollapse at the MAP itself instead of one bootstrap draw.
  bool point_mode = false;
  std::uint64_t seed = 0;
};

struct GibbsIteration {
  int iter = 0;
  Eigen::VectorXd w;        // after the update
  Eigen::MatrixXd eta_hat;  // MAP under the previous w
  Eigen::MatrixXd eta;      // the draw that was uncollapsed
  StateDraw state;
  int map_iterations = 0;
  bool map_converged = false;
  double seconds = 0.0;
};

struct GibbsChain {
  std::vector<GibbsIteration> iterations;
  bool complete = false;
  std::string failure;  // set when the chain stopped early
};

/// Blocked Gibbs over the diagonal of a time-invariant W. Starts from the
/// W in `spec`. Each iteration re-optimizes eta warm-started from the
/// previous MAP, draws eta (one bootstrap draw, or the MAP in point mode),
/// uncollapses, then updates w. Iteration i uses streams
/// derive_seed(seed, i, 0..2). On a numerical failure the chain so far is
/// returned with `failure` set.
GibbsChain gibbs_chain(const ModelSpec& spec, const CountDataset& data, const HyperPrior& prior,
                       const GibbsConfig& config);

}  // namespace mlndlm

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/filter.hpp"
#include "mlndlm/model.hpp"
#include "mlndlm/random.hpp"

namespace mlndlm {

struct DMDBConfig {
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(1, 0.5);  // length 1 or D
  int num_samples = 2000;
  std::uint64_t seed = 0;
};

ValidationReport validate(const DMDBConfig& config, Index D);

/// Pseudocount for category d under a scalar or per-category alpha.
inline double alpha_at(const Eigen::VectorXd& alpha, Index d) {
  return alpha.size() == 1 ? alpha[0] : alpha[d];
}

/// alr of a Dirichlet(concentration) draw, computed from log-gamma variates
/// so that tiny concentrations do not underflow.
Eigen::VectorXd dirichlet_alr(const Eigen::VectorXd& concentration, RandomSource& rng);

/// One draw from the debiased bootstrap. Observed column t uses
/// Dirichlet(alr_inverse(eta_hat_t) * n_t + alpha). Missing columns are drawn
/// from the one-step Student-t forecast of `trace`, the filter run at eta_hat.
Eigen::MatrixXd dmdb_draw(const ModelSpec& spec, const FilterTrace& trace,
                          const Eigen::MatrixXd& eta_hat, const CountDataset& data,
                          const Eigen::VectorXd& alpha, RandomSource& rng);

/// num_samples draws; draw s uses the stream derive_seed(seed, s, 0), so the
/// result does not depend on `threads`.
std::vector<Eigen::MatrixXd> dmdb_sample_eta(const ModelSpec& spec, const Eigen::MatrixXd& eta_hat,
                                             const CountDataset& data, const DMDBConfig& config,
                                             int threads = 1);

/// Plain multinomial Dirichlet bootstrap: Dirichlet(Y_t + alpha) per column,
/// Dirichlet(alpha) on missing columns. Baseline for the debiased version.
std::vector<Eigen::MatrixXd> mdb_sample_eta(const CountDataset& data, const DMDBConfig& config,
                                            int threads = 1);

}  // namespace mlndlm

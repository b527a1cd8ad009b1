#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/filter.hpp"
#include "mlndlm/model.hpp"
#include "mlndlm/random.hpp"

namespace mlndlm {

/// One joint draw of the states and the shared covariance.
struct StateDraw {
  std::vector<Eigen::MatrixXd> theta;   // per global time index, Q x (D-1)
  std::vector<Eigen::MatrixXd> theta0;  // initial state per series
  Eigen::MatrixXd Sigma;                // (D-1) x (D-1)
};

/// Backward sampling of (Theta, Sigma) given a completed forward filter.
/// Sigma ~ IW(Xi_T, nu_T); then each series is sampled independently from
/// its last time point back to its initial state.
StateDraw smooth_draw(const ModelSpec& spec, const FilterTrace& trace, RandomSource& rng);
StateDraw smooth_draw(const ModelSpec& spec, const FilterTrace& trace, std::uint64_t seed);

/// L with L L^T = A for symmetric PSD A. Cholesky when it succeeds;
/// otherwise eigen-decomposition with negative eigenvalues clipped at 0.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& A);

/// Matrix normal N(M, U, V): row covariance U, column covariance V.
Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, RandomSource& rng);
Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, std::uint64_t seed);
/// Same, with the row and column factors already computed.
Eigen::MatrixXd sample_matrix_normal_factored(const Eigen::MatrixXd& M,
                                              const Eigen::MatrixXd& row_factor,
                                              const Eigen::MatrixXd& col_factor,
                                              RandomSource& rng);

/// Inverse-Wishart with density proportional to
/// |Sigma|^{-(nu+p+1)/2} exp(-tr(Xi Sigma^{-1})/2); mean Xi/(nu-p-1).
/// Bartlett decomposition of the Wishart on Xi^{-1}, inverted through
/// triangular solves.
Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& Xi, double nu, RandomSource& rng);
Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& Xi, double nu, std::uint64_t seed);

}  // namespace mlndlm

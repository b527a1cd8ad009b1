#pragma once

#include <Eigen/Dense>

#include "mlndlm/filter.hpp"
#include "mlndlm/model.hpp"

namespace mlndlm {

/// -log p(eta | Y) and its gradient with respect to eta.
///
/// neg_log_post = -(term_loglik + term_logprior). term_loglik is the
/// multinomial kernel, linear in Y; the multinomial coefficients are kept
/// separately in loglik_constant so that the full log posterior is
/// term_loglik + loglik_constant + term_logprior.
struct ObjectiveValue {
  double neg_log_post = 0.0;
  Eigen::MatrixXd grad;  // (D-1) x T, d(neg_log_post)/d(eta)
  double term_loglik = 0.0;
  double term_logprior = 0.0;
  double loglik_constant = 0.0;
};

struct LoglikValue {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d(value)/d(eta)
};

/// Multinomial log-likelihood kernel
///   sum_t [ sum_i eta_it Y_it - n_t log(1 + sum_i exp(eta_it)) ]
/// over observed columns; missing columns contribute nothing.
LoglikValue multinomial_loglik(const Eigen::MatrixXd& eta, const CountDataset& data);

/// sum_t [ log n_t! - sum_d log Y_dt! ] over observed columns.
double log_multinomial_coefficient(const CountDataset& data);

/// Gradient of log p(eta_t | eta_{1:t-1}) with respect to eta_t, holding
/// the filter quantities fixed. With X = q Xi_prev and e = eta_t - f:
///   -(nu_prev + 1) X^{-1} e / (1 + e^T X^{-1} e).
Eigen::VectorXd t_prior_grad_step(const Eigen::VectorXd& eta_t, const Eigen::VectorXd& f,
                                  double q, const Eigen::MatrixXd& Xi_prev, double nu_prev);

/// Full objective. The prior gradient is accumulated in reverse through the
/// filter: eta_t also moves every later forecast f_s (through M) and every
/// later Xi_{s-1}; q, S, R and C do not depend on eta.
ObjectiveValue evaluate(const ModelSpec& spec, const CountDataset& data,
                        const Eigen::MatrixXd& eta, const FilterOptions& options = {});

/// Adapter over the flattened (D-1)*T column-major vector used by the
/// optimizer.
class CollapsedObjective {
 public:
  CollapsedObjective(const ModelSpec& spec, const CountDataset& data)
      : spec_(spec), data_(data) {}

  Index size() const { return spec_.p() * data_.T(); }
  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;
  Eigen::MatrixXd reshape(const Eigen::VectorXd& x) const;
  Eigen::VectorXd flatten(const Eigen::MatrixXd& eta) const;

 private:
  const ModelSpec& spec_;
  const CountDataset& data_;
};

}  // namespace mlndlm

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/model.hpp"

namespace mlndlm {

/// Forward-filter quantities at one global time index. The update fields
/// (f, q, S, e) are empty on missing time points, where the posterior
/// equals the prior.
struct FilterStep {
  bool observed = false;
  Eigen::MatrixXd A;  // prior state mean, Q x (D-1)
  Eigen::MatrixXd R;  // prior state row covariance, Q x Q
  std::optional<Eigen::VectorXd> f;
  std::optional<double> q;
  std::optional<Eigen::VectorXd> S;
  std::optional<Eigen::VectorXd> e;
  Eigen::MatrixXd M;   // posterior state mean
  Eigen::MatrixXd C;   // posterior state row covariance
  Eigen::MatrixXd Xi;  // inverse-Wishart scale after this step
  double nu = 0.0;     // inverse-Wishart dof after this step
};

struct FilterOptions {
  // When false, (Xi, nu) also restart at every series boundary. Only useful
  // for diagnostics; the model shares Sigma across series.
  bool share_covariance_across_series = true;
};

struct FilterTrace {
  std::vector<FilterStep> steps;
  SeriesLayout layout;
  std::vector<Index> series_start;
  Eigen::MatrixXd Xi0;
  double nu0 = 0.0;
  FilterOptions options;

  Index T() const { return static_cast<Index>(steps.size()); }
  const Eigen::MatrixXd& Xi_T() const { return steps.empty() ? Xi0 : steps.back().Xi; }
  double nu_T() const { return steps.empty() ? nu0 : steps.back().nu; }
  bool is_series_start(Index t) const;
  /// (Xi, nu) in force before the update at t.
  const Eigen::MatrixXd& Xi_before(Index t) const;
  double nu_before(Index t) const;
};

/// Runs the forward recursion over all series. eta is (D-1) x T; entries
/// in missing columns are ignored.
FilterTrace filter(const ModelSpec& spec, const Eigen::MatrixXd& eta, const SeriesLayout& layout,
                   const FilterOptions& options = {});

/// Prior propagation used on a missing time point: posterior = prior.
void filter_missing_step(FilterStep& step);

/// One-step-ahead forecast location and scale at t from the stored prior
/// moments; defined on observed and missing time points alike.
struct Forecast {
  Eigen::VectorXd f;
  double q;
};
Forecast forecast_at(const ModelSpec& spec, const FilterTrace& trace, Index t);

/// log p(eta_t | eta_{1:t-1}) for an observed step, a multivariate
/// Student-t from integrating the inverse-Wishart out of the Gaussian
/// forecast N(f, q Sigma). With p = D - 1 and n = nu - p + 1:
/// dof n, location f, scale q Xi / n.
double student_t_step_logdensity(const Eigen::VectorXd& e, double q,
                                 const Eigen::MatrixXd& Xi_prev, double nu_prev);

/// log p(eta) summed over observed time points, normalizing constants
/// included.
double log_prior_eta(const ModelSpec& spec, const Eigen::MatrixXd& eta,
                     const SeriesLayout& layout, const FilterOptions& options = {});
double log_prior_eta(const FilterTrace& trace);

}  // namespace mlndlm

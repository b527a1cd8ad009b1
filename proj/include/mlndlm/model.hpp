#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlndlm {

using Eigen::Index;

/// System matrices and priors of a multinomial logistic-normal DLM.
///
/// F, G, W and gamma hold either a single entry (time-invariant, broadcast
/// over every time point) or one entry per global time index. State rows
/// are indexed by q in [0, Q), log-ratio columns by i in [0, D-1).
struct ModelSpec {
  std::vector<Eigen::VectorXd> F;
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::MatrixXd> W;
  std::vector<double> gamma;
  Eigen::MatrixXd M0;   // Q x (D-1)
  Eigen::MatrixXd C0;   // Q x Q
  Eigen::MatrixXd Xi0;  // (D-1) x (D-1), inverse-Wishart scale
  double nu0 = 0.0;     // inverse-Wishart degrees of freedom

  Index Q() const { return C0.rows(); }
  Index D() const { return Xi0.rows() + 1; }
  Index p() const { return Xi0.rows(); }

  const Eigen::VectorXd& F_at(Index t) const { return F.size() == 1 ? F[0] : F[t]; }
  const Eigen::MatrixXd& G_at(Index t) const { return G.size() == 1 ? G[0] : G[t]; }
  const Eigen::MatrixXd& W_at(Index t) const { return W.size() == 1 ? W[0] : W[t]; }
  double gamma_at(Index t) const { return gamma.size() == 1 ? gamma[0] : gamma[t]; }

  /// True when W is a single time-invariant diagonal matrix.
  bool has_diagonal_static_W() const;
  /// Replace W by diag(w), time-invariant.
  void set_diagonal_W(const Eigen::VectorXd& w);
};

/// Where each global time point sits: its series and whether it was observed.
/// Series are stored back to back; series k covers
/// [series_start(k), series_start(k) + series_lengths[k]).
struct SeriesLayout {
  std::vector<bool> observed;
  std::vector<Index> series_lengths;

  Index T() const { return static_cast<Index>(observed.size()); }
  Index K() const { return static_cast<Index>(series_lengths.size()); }
  Index series_start(Index k) const;
  Index num_observed() const;
  /// A single fully observed series of length T.
  static SeriesLayout single(Index T);
};

/// D x T count matrix. Missing columns hold zeros.
struct CountDataset {
  Eigen::MatrixXd Y;
  SeriesLayout layout;

  Index D() const { return Y.rows(); }
  Index T() const { return Y.cols(); }
  bool observed(Index t) const { return layout.observed[t]; }
  /// n_t, the total count of column t.
  double total(Index t) const { return Y.col(t).sum(); }
};

/// Independent inverse-gamma priors on the diagonal of W, shape a_q and
/// rate b_q.
struct HyperPrior {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

struct ValidationIssue {
  std::string field;
  std::string message;
};
using ValidationReport = std::vector<ValidationIssue>;

ValidationReport validate(const ModelSpec& spec);
ValidationReport validate(const ModelSpec& spec, const CountDataset& data);
ValidationReport validate(const HyperPrior& prior, Index Q);
ValidationReport validate(const SeriesLayout& layout);
/// Throws ValidationError listing every issue when the report is non-empty.
void throw_if_invalid(const ValidationReport& report);
std::string format_report(const ValidationReport& report);

/// Random walk in the log-ratios: Q = 1, F = G = 1, W = w, gamma = 1.
/// Priors: M0 = 0, C0 = 1, Xi0 = I, nu0 = D + 3.
ModelSpec builtin_random_walk(Index D, Index T, double w);

/// Level plus damped velocity: Q = 2, F = (1, 0), G = [[1, 1], [0, damping]],
/// W = diag(w_theta, w_alpha). Priors: M0 = 0, C0 = I, Xi0 = I, nu0 = D + 3.
ModelSpec builtin_local_trend(Index D, Index T, double w_theta, double w_alpha,
                              double damping);

}  // namespace mlndlm

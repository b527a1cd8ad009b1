#pragma once

#include <Eigen/Dense>

namespace mlndlm {

/// A point strictly inside the D-simplex. Construction normalizes the
/// input and rejects any entry that is not strictly positive and finite.
class Composition {
 public:
  explicit Composition(const Eigen::VectorXd& values);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index D() const { return values_.size(); }

 private:
  Eigen::VectorXd values_;
};

/// Additive log-ratio coordinates, reference category last.
class LogRatioVector {
 public:
  explicit LogRatioVector(const Eigen::VectorXd& values);

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index D() const { return values_.size() + 1; }

 private:
  Eigen::VectorXd values_;
};

LogRatioVector alr(const Composition& c);
Composition alr_inverse(const LogRatioVector& v);
Eigen::VectorXd alr_to_clr(const LogRatioVector& v);

// Unchecked column-wise kernels for the hot paths. Each column is one
// time point.
Eigen::MatrixXd alr_inverse_columns(const Eigen::MatrixXd& eta);
/// CLR of the composition whose ALR coordinates are the columns of `eta`.
/// The map is linear: append the zero reference coordinate and center.
Eigen::MatrixXd alr_to_clr_columns(const Eigen::MatrixXd& eta);
/// Same map applied to the rows of a Q x (D-1) state matrix.
Eigen::MatrixXd alr_to_clr_rows(const Eigen::MatrixXd& theta);

}  // namespace mlndlm

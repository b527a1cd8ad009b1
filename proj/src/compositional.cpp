#include "mlndlm/compositional.hpp"

#include <cmath>

#include "mlndlm/errors.hpp"

namespace mlndlm {

Composition::Composition(const Eigen::VectorXd& values) {
  if (values.size() < 2)
    throw ValidationError("composition needs at least two parts");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] <= 0.0)
      throw ValidationError("composition entries must be finite and > 0");
  }
  values_ = values / values.sum();
}

LogRatioVector::LogRatioVector(const Eigen::VectorXd& values) : values_(values) {
  if (!values_.allFinite())
    throw ValidationError("log-ratio coordinates must be finite");
}

LogRatioVector alr(const Composition& c) {
  const auto& x = c.values();
  const Eigen::Index p = x.size() - 1;
  return LogRatioVector((x.head(p).array() / x[p]).log().matrix());
}

Composition alr_inverse(const LogRatioVector& v) {
  Eigen::MatrixXd col = alr_inverse_columns(v.values());
  return Composition(col.col(0));
}

Eigen::VectorXd alr_to_clr(const LogRatioVector& v) {
  return alr_to_clr_columns(v.values()).col(0);
}

Eigen::MatrixXd alr_inverse_columns(const Eigen::MatrixXd& eta) {
  const Eigen::Index p = eta.rows();
  Eigen::MatrixXd pi(p + 1, eta.cols());
  for (Eigen::Index t = 0; t < eta.cols(); ++t) {
    const double shift = std::max(0.0, eta.col(t).maxCoeff());
    pi.col(t).head(p) = (eta.col(t).array() - shift).exp().matrix();
    pi(p, t) = std::exp(-shift);
    pi.col(t) /= pi.col(t).sum();
  }
  return pi;
}

Eigen::MatrixXd alr_to_clr_columns(const Eigen::MatrixXd& eta) {
  const Eigen::Index p = eta.rows();
  Eigen::MatrixXd clr(p + 1, eta.cols());
  clr.topRows(p) = eta;
  clr.row(p).setZero();
  const Eigen::RowVectorXd mean = clr.colwise().sum() / static_cast<double>(p + 1);
  clr.rowwise() -= mean;
  return clr;
}

Eigen::MatrixXd alr_to_clr_rows(const Eigen::MatrixXd& theta) {
  return alr_to_clr_columns(theta.transpose()).transpose();
}

}  // namespace mlndlm

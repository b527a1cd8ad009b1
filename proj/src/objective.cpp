#include "mlndlm/objective.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mlndlm/errors.hpp"

namespace mlndlm {

LoglikValue multinomial_loglik(const Eigen::MatrixXd& eta, const CountDataset& data) {
  const Index p = eta.rows();
  if (p != data.D() - 1 || eta.cols() != data.T())
    throw ValidationError("multinomial_loglik: eta shape does not match the data");
  LoglikValue out;
  out.grad = Eigen::MatrixXd::Zero(p, eta.cols());
  for (Index t = 0; t < eta.cols(); ++t) {
    if (!data.observed(t)) continue;
    const double n = data.total(t);
    if (n == 0.0) continue;
    const auto x = eta.col(t);
    const double shift = std::max(0.0, x.maxCoeff());
    const double lse = shift + std::log(std::exp(-shift) + (x.array() - shift).exp().sum());
    out.value += x.dot(data.Y.col(t).head(p)) - n * lse;
    out.grad.col(t) = data.Y.col(t).head(p) - n * (x.array() - lse).exp().matrix();
  }
  return out;
}

double log_multinomial_coefficient(const CountDataset& data) {
  double c = 0.0;
  for (Index t = 0; t < data.T(); ++t) {
    if (!data.observed(t)) continue;
    c += std::lgamma(data.total(t) + 1.0);
    for (Index d = 0; d < data.D(); ++d) c -= std::lgamma(data.Y(d, t) + 1.0);
  }
  return c;
}

Eigen::VectorXd t_prior_grad_step(const Eigen::VectorXd& eta_t, const Eigen::VectorXd& f,
                                  double q, const Eigen::MatrixXd& Xi_prev, double nu_prev) {
  Eigen::LLT<Eigen::MatrixXd> llt(Xi_prev);
  if (llt.info() != Eigen::Success) throw NumericalError("Xi is not positive definite");
  const Eigen::VectorXd e = eta_t - f;
  const Eigen::VectorXd u = llt.solve(e) / q;  // X^{-1} e
  return -(nu_prev + 1.0) * u / (1.0 + e.dot(u));
}

ObjectiveValue evaluate(const ModelSpec& spec, const CountDataset& data,
                        const Eigen::MatrixXd& eta, const FilterOptions& options) {
  const FilterTrace trace = filter(spec, eta, data.layout, options);
  const LoglikValue lik = multinomial_loglik(eta, data);
  const Index p = spec.p();
  const Index T = data.T();

  ObjectiveValue out;
  out.term_loglik = lik.value;
  out.loglik_constant = log_multinomial_coefficient(data);

  Eigen::MatrixXd prior_grad = Eigen::MatrixXd::Zero(p, T);
  Eigen::MatrixXd M_bar = Eigen::MatrixXd::Zero(spec.Q(), p);
  Eigen::MatrixXd Xi_bar = Eigen::MatrixXd::Zero(p, p);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  double logprior = 0.0;

  for (Index t = T - 1; t >= 0; --t) {
    const FilterStep& st = trace.steps[t];
    Eigen::MatrixXd A_bar;
    if (st.observed) {
      const Eigen::VectorXd& e = *st.e;
      const double q = *st.q;
      const Eigen::MatrixXd& Xi_prev = trace.Xi_before(t);
      const double nu_prev = trace.nu_before(t);
      Eigen::LLT<Eigen::MatrixXd> llt(Xi_prev);
      if (llt.info() != Eigen::Success)
        throw NumericalError("objective: Xi lost positive definiteness at t=" +
                                 std::to_string(t), t);
      const Eigen::VectorXd u = llt.solve(e);
      const double delta = e.dot(u) / q;
      const double kappa = 0.5 * (nu_prev + 1.0);
      const double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
      logprior += std::lgamma(kappa) - std::lgamma(0.5 * (nu_prev + 1.0 - p)) -
                  0.5 * p * std::log(std::numbers::pi * q) - 0.5 * logdet - kappa * std::log1p(delta);

      // Direct terms of log p(eta_t | history).
      Eigen::VectorXd e_bar = -(2.0 * kappa / (1.0 + delta)) * u / q;
      const Eigen::MatrixXd Xi_prev_bar =
          -0.5 * llt.solve(I) + (kappa / (1.0 + delta)) * (u * u.transpose()) / q;
      // Through Xi_t = Xi_{t-1} + e e^T / q and M_t = A_t + S e^T.
      e_bar.noalias() += (2.0 / q) * (Xi_bar * e);
      e_bar.noalias() += M_bar.transpose() * (*st.S);
      prior_grad.col(t) = e_bar;
      A_bar = M_bar - spec.F_at(t) * e_bar.transpose();
      Xi_bar += Xi_prev_bar;
    } else {
      A_bar = M_bar;
    }
    if (trace.is_series_start(t)) {
      M_bar.setZero();
      if (!options.share_covariance_across_series) Xi_bar.setZero();
    } else {
      M_bar.noalias() = spec.G_at(t).transpose() * A_bar;
    }
  }

  out.term_logprior = logprior;
  out.neg_log_post = -(out.term_loglik + out.term_logprior);
  out.grad = -(lik.grad + prior_grad);
  if (!out.grad.allFinite() || !std::isfinite(out.neg_log_post))
    throw NumericalError("objective: non-finite value or gradient");
  return out;
}

double CollapsedObjective::operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const ObjectiveValue v = evaluate(spec_, data_, reshape(x));
  grad = flatten(v.grad);
  return v.neg_log_post;
}

Eigen::MatrixXd CollapsedObjective::reshape(const Eigen::VectorXd& x) const {
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), spec_.p(), data_.T());
}

Eigen::VectorXd CollapsedObjective::flatten(const Eigen::MatrixXd& eta) const {
  return Eigen::Map<const Eigen::VectorXd>(eta.data(), eta.size());
}

}  // namespace mlndlm

#include "mlndlm/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mlndlm/errors.hpp"

namespace mlndlm {

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

void require_finite(const Eigen::MatrixXd& m, const char* name, Index t) {
  if (!m.allFinite())
    throw NumericalError(std::string("filter: non-finite ") + name + " at t=" + std::to_string(t),
                         t);
}

}  // namespace

bool FilterTrace::is_series_start(Index t) const {
  return std::find(series_start.begin(), series_start.end(), t) != series_start.end();
}

const Eigen::MatrixXd& FilterTrace::Xi_before(Index t) const {
  if (t == 0 || (!options.share_covariance_across_series && is_series_start(t))) return Xi0;
  return steps[t - 1].Xi;
}

double FilterTrace::nu_before(Index t) const {
  if (t == 0 || (!options.share_covariance_across_series && is_series_start(t))) return nu0;
  return steps[t - 1].nu;
}

void filter_missing_step(FilterStep& step) {
  step.observed = false;
  step.f.reset();
  step.q.reset();
  step.S.reset();
  step.e.reset();
  step.M = step.A;
  step.C = step.R;
}

FilterTrace filter(const ModelSpec& spec, const Eigen::MatrixXd& eta, const SeriesLayout& layout,
                   const FilterOptions& options) {
  const Index T = layout.T();
  if (eta.rows() != spec.p() || eta.cols() != T)
    throw ValidationError("filter: eta must be " + std::to_string(spec.p()) + "x" +
                          std::to_string(T));
  FilterTrace trace;
  trace.layout = layout;
  trace.Xi0 = spec.Xi0;
  trace.nu0 = spec.nu0;
  trace.options = options;
  trace.steps.resize(T);

  Eigen::MatrixXd Xi = spec.Xi0;
  double nu = spec.nu0;
  Index t = 0;
  for (Index k = 0; k < layout.K(); ++k) {
    trace.series_start.push_back(t);
    if (!options.share_covariance_across_series) {
      Xi = spec.Xi0;
      nu = spec.nu0;
    }
    const Eigen::MatrixXd* M_prev = &spec.M0;
    const Eigen::MatrixXd* C_prev = &spec.C0;
    for (Index i = 0; i < layout.series_lengths[k]; ++i, ++t) {
      FilterStep& st = trace.steps[t];
      const Eigen::MatrixXd& G = spec.G_at(t);
      st.A.noalias() = G * (*M_prev);
      st.R.noalias() = G * (*C_prev) * G.transpose();
      st.R += spec.W_at(t);
      symmetrize(st.R);

      if (!layout.observed[t]) {
        filter_missing_step(st);
      } else {
        st.observed = true;
        const Eigen::VectorXd& F = spec.F_at(t);
        const Eigen::VectorXd RF = st.R * F;
        const double q = spec.gamma_at(t) + F.dot(RF);
        if (!(q > 0.0) || !std::isfinite(q))
          throw NumericalError("filter: forecast scale q <= 0 at t=" + std::to_string(t), t);
        Eigen::VectorXd f = st.A.transpose() * F;
        Eigen::VectorXd S = RF / q;
        Eigen::VectorXd e = eta.col(t) - f;
        st.M = st.A + S * e.transpose();
        st.C = st.R - q * S * S.transpose();
        symmetrize(st.C);
        nu += 1.0;
        Xi.noalias() += (e * e.transpose()) / q;
        symmetrize(Xi);
        st.f = std::move(f);
        st.q = q;
        st.S = std::move(S);
        st.e = std::move(e);
      }
      st.Xi = Xi;
      st.nu = nu;
      require_finite(st.M, "M", t);
      require_finite(st.C, "C", t);
      require_finite(st.Xi, "Xi", t);
      M_prev = &st.M;
      C_prev = &st.C;
    }
  }
  return trace;
}

Forecast forecast_at(const ModelSpec& spec, const FilterTrace& trace, Index t) {
  const FilterStep& st = trace.steps[t];
  const Eigen::VectorXd& F = spec.F_at(t);
  return {st.A.transpose() * F, spec.gamma_at(t) + F.dot(st.R * F)};
}

double student_t_step_logdensity(const Eigen::VectorXd& e, double q,
                                 const Eigen::MatrixXd& Xi_prev, double nu_prev) {
  const double p = static_cast<double>(e.size());
  Eigen::LLT<Eigen::MatrixXd> llt(Xi_prev);
  if (llt.info() != Eigen::Success) throw NumericalError("Xi is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double quad = llt.matrixL().solve(e).squaredNorm() / q;
  return std::lgamma(0.5 * (nu_prev + 1.0)) - std::lgamma(0.5 * (nu_prev + 1.0 - p)) -
         0.5 * p * std::log(std::numbers::pi * q) - 0.5 * logdet -
         0.5 * (nu_prev + 1.0) * std::log1p(quad);
}

double log_prior_eta(const FilterTrace& trace) {
  double total = 0.0;
  for (Index t = 0; t < trace.T(); ++t) {
    const FilterStep& st = trace.steps[t];
    if (!st.observed) continue;
    total += student_t_step_logdensity(*st.e, *st.q, trace.Xi_before(t), trace.nu_before(t));
  }
  return total;
}

double log_prior_eta(const ModelSpec& spec, const Eigen::MatrixXd& eta,
                     const SeriesLayout& layout, const FilterOptions& options) {
  return log_prior_eta(filter(spec, eta, layout, options));
}

}  // namespace mlndlm

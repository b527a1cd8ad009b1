#include "mlndlm/dmdb.hpp"

#include <cmath>

#include "mlndlm/compositional.hpp"
#include "mlndlm/errors.hpp"
#include "mlndlm/parallel.hpp"

namespace mlndlm {

ValidationReport validate(const DMDBConfig& config, Index D) {
  ValidationReport r;
  if (config.alpha.size() != 1 && config.alpha.size() != D)
    r.push_back({"dmdb.alpha", "must be a scalar or have length D = " + std::to_string(D)});
  if (!(config.alpha.array() > 0.0).all() || !config.alpha.allFinite())
    r.push_back({"dmdb.alpha", "entries must be finite and > 0"});
  if (config.num_samples < 1) r.push_back({"dmdb.num_samples", "must be >= 1"});
  return r;
}

Eigen::VectorXd dirichlet_alr(const Eigen::VectorXd& concentration, RandomSource& rng) {
  const Index D = concentration.size();
  Eigen::VectorXd lg(D);
  for (Index d = 0; d < D; ++d) lg[d] = rng.log_gamma(concentration[d]);
  return lg.head(D - 1).array() - lg[D - 1];
}

namespace {

Eigen::VectorXd forecast_draw(const ModelSpec& spec, const FilterTrace& trace, Index t,
                              RandomSource& rng) {
  const Forecast fc = forecast_at(spec, trace, t);
  const Eigen::MatrixXd& Xi = trace.Xi_before(t);
  const Index p = Xi.rows();
  const double dof = trace.nu_before(t) - static_cast<double>(p) + 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(Xi);
  if (llt.info() != Eigen::Success)
    throw NumericalError("forecast scale is not positive definite", t);
  Eigen::VectorXd z(p);
  for (Index i = 0; i < p; ++i) z[i] = rng.normal();
  // t_dof(f, q Xi / dof) = f + sqrt(q) L z / sqrt(chi2_dof).
  const Eigen::VectorXd Lz = llt.matrixL() * z;
  return fc.f + std::sqrt(fc.q / rng.chi_squared(dof)) * Lz;
}

}  // namespace

Eigen::MatrixXd dmdb_draw(const ModelSpec& spec, const FilterTrace& trace,
                          const Eigen::MatrixXd& eta_hat, const CountDataset& data,
                          const Eigen::VectorXd& alpha, RandomSource& rng) {
  const Index D = data.D();
  Eigen::MatrixXd eta(D - 1, data.T());
  Eigen::VectorXd conc(D);
  for (Index t = 0; t < data.T(); ++t) {
    if (!data.observed(t)) {
      eta.col(t) = forecast_draw(spec, trace, t, rng);
      continue;
    }
    const Eigen::VectorXd pi = alr_inverse_columns(eta_hat.col(t));
    const double n = data.total(t);
    for (Index d = 0; d < D; ++d) conc[d] = pi[d] * n + alpha_at(alpha, d);
    eta.col(t) = dirichlet_alr(conc, rng);
  }
  return eta;
}

std::vector<Eigen::MatrixXd> dmdb_sample_eta(const ModelSpec& spec, const Eigen::MatrixXd& eta_hat,
                                             const CountDataset& data, const DMDBConfig& config,
                                             int threads) {
  throw_if_invalid(validate(config, data.D()));
  if (eta_hat.rows() != data.D() - 1 || eta_hat.cols() != data.T())
    throw ValidationError("eta_hat must be (D-1) x T");
  const FilterTrace trace = filter(spec, eta_hat, data.layout);
  std::vector<Eigen::MatrixXd> draws(config.num_samples);
  parallel_for(config.num_samples, threads, [&](int s) {
    RandomSource rng(config.seed, static_cast<std::uint64_t>(s), 0);
    draws[s] = dmdb_draw(spec, trace, eta_hat, data, config.alpha, rng);
  });
  return draws;
}

std::vector<Eigen::MatrixXd> mdb_sample_eta(const CountDataset& data, const DMDBConfig& config,
                                            int threads) {
  throw_if_invalid(validate(config, data.D()));
  const Index D = data.D();
  std::vector<Eigen::MatrixXd> draws(config.num_samples);
  parallel_for(config.num_samples, threads, [&](int s) {
    RandomSource rng(config.seed, static_cast<std::uint64_t>(s), 0);
    Eigen::MatrixXd eta(D - 1, data.T());
    Eigen::VectorXd conc(D);
    for (Index t = 0; t < data.T(); ++t) {
      for (Index d = 0; d < D; ++d)
        conc[d] = (data.observed(t) ? data.Y(d, t) : 0.0) + alpha_at(config.alpha, d);
      eta.col(t) = dirichlet_alr(conc, rng);
    }
    draws[s] = std::move(eta);
  });
  return draws;
}

}  // namespace mlndlm

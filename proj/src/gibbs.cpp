#include "mlndlm/gibbs.hpp"

#include <chrono>

#include "mlndlm/dmdb.hpp"
#include "mlndlm/errors.hpp"
#include "mlndlm/filter.hpp"

namespace mlndlm {

std::vector<Eigen::MatrixXd> whitened_innovations(const ModelSpec& spec,
                                                  const SeriesLayout& layout,
                                                  const StateDraw& draw) {
  const Index p = draw.Sigma.rows();
  Eigen::LLT<Eigen::MatrixXd> sigma_llt(draw.Sigma);
  if (sigma_llt.info() != Eigen::Success)
    throw NumericalError("Sigma draw is not positive definite");
  const Eigen::MatrixXd precision = sigma_llt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> prec_llt(0.5 * (precision + precision.transpose()));
  if (prec_llt.info() != Eigen::Success)
    throw NumericalError("Sigma^{-1} is not positive definite");
  const Eigen::MatrixXd L = prec_llt.matrixL();

  std::vector<Eigen::MatrixXd> out(layout.T());
  for (Index k = 0; k < layout.K(); ++k) {
    const Index start = layout.series_start(k);
    for (Index t = start; t < start + layout.series_lengths[k]; ++t) {
      const Eigen::MatrixXd& prev = t == start ? draw.theta0[k] : draw.theta[t - 1];
      out[t] = (draw.theta[t] - spec.G_at(t) * prev) * L;
    }
  }
  return out;
}

WConditional w_conditional(const ModelSpec& spec, const SeriesLayout& layout,
                           const StateDraw& draw, const HyperPrior& prior) {
  throw_if_invalid(validate(prior, spec.Q()));
  const auto omega = whitened_innovations(spec, layout, draw);
  WConditional c;
  c.shape = prior.a;
  c.rate = prior.b;
  for (const auto& o : omega) {
    c.shape.array() += 0.5 * static_cast<double>(o.cols());
    c.rate += 0.5 * o.rowwise().squaredNorm();
  }
  return c;
}

Eigen::VectorXd gibbs_w_update(const ModelSpec& spec, const SeriesLayout& layout,
                               const StateDraw& draw, const HyperPrior& prior,
                               RandomSource& rng) {
  const WConditional c = w_conditional(spec, layout, draw, prior);
  Eigen::VectorXd w(c.shape.size());
  for (Index q = 0; q < w.size(); ++q) w[q] = c.rate[q] / rng.gamma(c.shape[q]);
  return w;
}

GibbsChain gibbs_chain(const ModelSpec& spec, const CountDataset& data, const HyperPrior& prior,
                       const GibbsConfig& config) {
  throw_if_invalid(validate(spec, data));
  throw_if_invalid(validate(prior, spec.Q()));
  if (!spec.has_diagonal_static_W())
    throw ValidationError("Gibbs updates need a diagonal, time-invariant W");
  if (config.iterations < 1) throw ValidationError("gibbs iterations must be >= 1");
  DMDBConfig dcfg;
  dcfg.alpha = config.alpha;
  throw_if_invalid(validate(dcfg, data.D()));

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ModelSpec current = spec;
  Eigen::MatrixXd warm;
  GibbsChain chain;
  for (int i = 0; i < config.iterations; ++i) {
    GibbsIteration it;
    it.iter = i;
    try {
      const OptimizationResult map =
          map_estimate(current, data, config.optimizer, warm.size() ? &warm : nullptr);
      it.eta_hat = map.eta_hat;
      it.map_iterations = map.iterations;
      it.map_converged = map.converged;
      warm = map.eta_hat;
      if (config.point_mode) {
        it.eta = map.eta_hat;
      } else {
        const FilterTrace at_hat = filter(current, map.eta_hat, data.layout);
        RandomSource rng(config.seed, static_cast<std::uint64_t>(i), 0);
        it.eta = dmdb_draw(current, at_hat, map.eta_hat, data, config.alpha, rng);
      }
      const FilterTrace trace = filter(current, it.eta, data.layout);
      RandomSource smooth_rng(config.seed, static_cast<std::uint64_t>(i), 1);
      it.state = smooth_draw(current, trace, smooth_rng);
      RandomSource w_rng(config.seed, static_cast<std::uint64_t>(i), 2);
      it.w = gibbs_w_update(current, data.layout, it.state, prior, w_rng);
    } catch (const NumericalError& e) {
      chain.failure = "iteration " + std::to_string(i) + ": " + e.what();
      return chain;
    }
    current.set_diagonal_W(it.w);
    it.seconds = std::chrono::duration<double>(clock::now() - start).count();
    chain.iterations.push_back(std::move(it));
  }
  chain.complete = true;
  return chain;
}

}  // namespace mlndlm

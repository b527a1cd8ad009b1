#include "mlndlm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlndlm/compositional.hpp"
#include "mlndlm/random.hpp"
#include "mlndlm/smoother.hpp"

namespace mlndlm {

ValidationReport validate(const SimConfig& c) {
  ValidationReport r;
  if (c.D < 2) r.push_back({"simulation.D", "must be >= 2"});
  if (c.T_total < 1) r.push_back({"simulation.T", "must be >= 1"});
  if (c.series_length < 1) r.push_back({"simulation.series_length", "must be >= 1"});
  if (!(c.missing_fraction >= 0.0 && c.missing_fraction < 1.0))
    r.push_back({"simulation.missing_fraction", "must lie in [0, 1)"});
  if (!(c.w > 0.0)) r.push_back({"simulation.w", "must be > 0"});
  if (!std::isfinite(c.reversion)) r.push_back({"simulation.reversion", "must be finite"});
  if (c.Xi0.size() != 0 && (c.Xi0.rows() != c.D - 1 || c.Xi0.cols() != c.D - 1))
    r.push_back({"simulation.Xi0", "must be (D-1) x (D-1)"});
  if (c.nu0 > 0.0 && !(c.nu0 > static_cast<double>(c.D) - 2.0))
    r.push_back({"simulation.nu0", "must exceed D - 2"});
  if (!(c.M0_low <= c.M0_high)) r.push_back({"simulation.M0_range", "low must not exceed high"});
  if (!(c.C0_low > 0.0 && c.C0_low <= c.C0_high))
    r.push_back({"simulation.C0_range", "must satisfy 0 < low <= high"});
  if (!(c.total_count >= 0.0) || c.total_count != std::floor(c.total_count))
    r.push_back({"simulation.total_count", "must be a nonnegative integer"});
  return r;
}

Simulation simulate(const SimConfig& c) {
  throw_if_invalid(validate(c));
  const Index D = c.D, p = D - 1, T = c.T_total;

  SeriesLayout layout;
  layout.observed.assign(T, true);
  for (Index left = T; left > 0; left -= std::min(left, c.series_length)) {
    layout.series_lengths.push_back(std::min(left, c.series_length));
  }
  if (layout.series_lengths.size() > 1 && layout.series_lengths.back() < c.series_length) {
    // Keep every series at least series_length long by merging the remainder.
    const Index rem = layout.series_lengths.back();
    layout.series_lengths.pop_back();
    layout.series_lengths.back() += rem;
  }

  RandomSource global(c.seed, 0);
  ModelSpec spec;
  spec.F = {Eigen::VectorXd::Ones(1)};
  spec.G = {Eigen::MatrixXd::Constant(1, 1, c.reversion)};
  spec.W = {Eigen::MatrixXd::Constant(1, 1, c.w)};
  spec.gamma = {1.0};
  spec.Xi0 = c.Xi0.size() ? c.Xi0 : Eigen::MatrixXd::Identity(p, p);
  spec.nu0 = c.nu0 > 0.0 ? c.nu0 : static_cast<double>(D) + 3.0;
  spec.M0.resize(1, p);
  for (Index i = 0; i < p; ++i) spec.M0(0, i) = c.M0_low + (c.M0_high - c.M0_low) * global.uniform();
  spec.C0 = Eigen::MatrixXd::Constant(1, 1, c.C0_low + (c.C0_high - c.C0_low) * global.uniform());

  Simulation sim;
  SimTruth& truth = sim.truth;
  truth.Sigma = sample_inverse_wishart(spec.Xi0, spec.nu0, global);
  const Eigen::MatrixXd sigma_factor = psd_factor(truth.Sigma);
  const Eigen::MatrixXd w_factor = Eigen::MatrixXd::Constant(1, 1, std::sqrt(c.w));
  const Eigen::MatrixXd c0_factor = spec.C0.array().sqrt().matrix();
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, p);

  truth.theta.resize(T);
  truth.theta0.resize(layout.K());
  truth.eta.resize(p, T);
  truth.pi.resize(D, T);
  CountDataset& data = sim.data;
  data.Y = Eigen::MatrixXd::Zero(D, T);

  for (Index k = 0; k < layout.K(); ++k) {
    const Index start = layout.series_start(k);
    const Index len = layout.series_lengths[k];
    RandomSource states(c.seed, static_cast<std::uint64_t>(k) + 1, 0);
    RandomSource counts(c.seed, static_cast<std::uint64_t>(k) + 1, 1);
    RandomSource mask(c.seed, static_cast<std::uint64_t>(k) + 1, 2);

    truth.theta0[k] = sample_matrix_normal_factored(spec.M0, c0_factor, sigma_factor, states);
    Eigen::MatrixXd prev = truth.theta0[k];
    for (Index t = start; t < start + len; ++t) {
      truth.theta[t] = c.reversion * prev +
                       sample_matrix_normal_factored(zero, w_factor, sigma_factor, states);
      prev = truth.theta[t];
      truth.eta.col(t) =
          truth.theta[t].row(0).transpose() +
          sample_matrix_normal_factored(zero, Eigen::MatrixXd::Ones(1, 1), sigma_factor, states)
              .row(0)
              .transpose();
      truth.pi.col(t) = alr_inverse_columns(truth.eta.col(t));
    }

    // Exactly round(rate * len) missing points, by a partial shuffle.
    const auto n_missing = static_cast<Index>(std::llround(c.missing_fraction * static_cast<double>(len)));
    std::vector<Index> idx(len);
    std::iota(idx.begin(), idx.end(), start);
    for (Index i = 0; i < n_missing; ++i) {
      const auto j = i + static_cast<Index>(mask.next_u64() % static_cast<std::uint64_t>(len - i));
      std::swap(idx[i], idx[j]);
      layout.observed[idx[i]] = false;
    }

    for (Index t = start; t < start + len; ++t) {
      if (!layout.observed[t]) continue;
      auto remaining = static_cast<std::int64_t>(c.total_count);
      double mass = 1.0;
      for (Index d = 0; d < D - 1 && remaining > 0; ++d) {
        const double prob = mass > 0.0 ? std::clamp(truth.pi(d, t) / mass, 0.0, 1.0) : 0.0;
        const std::int64_t y = counts.binomial(remaining, prob);
        data.Y(d, t) = static_cast<double>(y);
        remaining -= y;
        mass -= truth.pi(d, t);
      }
      data.Y(D - 1, t) += static_cast<double>(remaining);
    }
  }
  data.layout = layout;
  truth.spec = std::move(spec);
  return sim;
}

double sparsity_report(const CountDataset& data) {
  double zeros = 0.0, cells = 0.0;
  for (Index t = 0; t < data.T(); ++t) {
    if (!data.observed(t)) continue;
    zeros += static_cast<double>((data.Y.col(t).array() == 0.0).count());
    cells += static_cast<double>(data.D());
  }
  return cells > 0.0 ? zeros / cells : 0.0;
}

}  // namespace mlndlm

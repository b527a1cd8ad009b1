#include "mlndlm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include "mlndlm/compositional.hpp"
#include "mlndlm/errors.hpp"
#include "mlndlm/filter.hpp"
#include "mlndlm/parallel.hpp"

namespace mlndlm {

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CellSummary summarize(const std::vector<Eigen::MatrixXd>& draws, double level) {
  if (draws.empty()) throw ValidationError("cannot summarize zero draws");
  const Index r = draws[0].rows(), c = draws[0].cols();
  CellSummary s;
  s.mean = Eigen::MatrixXd::Zero(r, c);
  s.lower.resize(r, c);
  s.upper.resize(r, c);
  for (const auto& d : draws) s.mean += d;
  s.mean /= static_cast<double>(draws.size());
  const double tail = 0.5 * (1.0 - level);
  std::vector<double> cell(draws.size());
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) {
      for (std::size_t k = 0; k < draws.size(); ++k) cell[k] = draws[k](i, j);
      s.lower(i, j) = quantile(cell, tail);
      s.upper(i, j) = quantile(cell, 1.0 - tail);
      // Keep lower <= mean <= upper when rounding pushes the mean outside.
      s.mean(i, j) = std::clamp(s.mean(i, j), s.lower(i, j), s.upper(i, j));
    }
  }
  return s;
}

std::vector<Eigen::MatrixXd> PosteriorDraws::eta_clr() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(eta.size());
  for (const auto& e : eta) out.push_back(alr_to_clr_columns(e));
  return out;
}

std::vector<Eigen::MatrixXd> PosteriorDraws::theta_clr(Index t) const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(alr_to_clr_rows(s.theta[t]));
  return out;
}

std::vector<Eigen::MatrixXd> PosteriorDraws::sigma() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.Sigma);
  return out;
}

std::vector<StateDraw> uncollapse(const ModelSpec& spec, const SeriesLayout& layout,
                                  const std::vector<Eigen::MatrixXd>& eta_draws,
                                  std::uint64_t seed, int threads) {
  const int S = static_cast<int>(eta_draws.size());
  std::vector<StateDraw> states(S);
  std::vector<std::pair<int, std::string>> failures;
  std::mutex mu;
  parallel_for(S, threads, [&](int s) {
    try {
      const FilterTrace trace = filter(spec, eta_draws[s], layout);
      RandomSource rng(seed, static_cast<std::uint64_t>(s), 1);
      states[s] = smooth_draw(spec, trace, rng);
    } catch (const NumericalError& e) {
      std::lock_guard<std::mutex> lock(mu);
      failures.emplace_back(s, e.what());
    }
  });
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end());
    std::string msg = std::to_string(failures.size()) + " uncollapse draw(s) failed:";
    for (std::size_t i = 0; i < failures.size() && i < 10; ++i)
      msg += " [draw " + std::to_string(failures[i].first) + ": " + failures[i].second + "]";
    throw NumericalError(msg);
  }
  return states;
}

PipelineResult cu_pipeline(const ModelSpec& spec, const CountDataset& data,
                           const PipelineConfig& config, const Eigen::MatrixXd* start) {
  throw_if_invalid(validate(spec, data));
  throw_if_invalid(validate(config.dmdb, data.D()));
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a) {
    return std::chrono::duration<double>(clock::now() - a).count();
  };

  PipelineResult out;
  auto t0 = clock::now();
  out.map = map_estimate(spec, data, config.optimizer, start);
  out.timings.optimize_seconds = seconds(t0);

  t0 = clock::now();
  out.draws.eta = dmdb_sample_eta(spec, out.map.eta_hat, data, config.dmdb, config.threads);
  out.timings.bootstrap_seconds = seconds(t0);
  out.eta_filled.resize(data.T());
  for (Index t = 0; t < data.T(); ++t) out.eta_filled[t] = !data.observed(t);

  t0 = clock::now();
  out.draws.states =
      uncollapse(spec, data.layout, out.draws.eta, config.dmdb.seed, config.threads);
  out.timings.uncollapse_seconds = seconds(t0);
  return out;
}

}  // namespace mlndlm

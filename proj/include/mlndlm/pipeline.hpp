#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/dmdb.hpp"
#include "mlndlm/model.hpp"
#include "mlndlm/optimizer.hpp"
#include "mlndlm/smoother.hpp"

namespace mlndlm {

/// Elementwise posterior summary over a set of equally shaped draws.
struct CellSummary {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd lower;  // 2.5% quantile
  Eigen::MatrixXd upper;  // 97.5% quantile
};

/// Linear-interpolation quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> values, double prob);
CellSummary summarize(const std::vector<Eigen::MatrixXd>& draws, double level = 0.95);

struct PosteriorDraws {
  std::vector<Eigen::MatrixXd> eta;   // S draws, (D-1) x T
  std::vector<StateDraw> states;      // S draws of (Theta, Theta_0, Sigma)
  std::vector<Eigen::VectorXd> w;     // optional, S x Q

  int size() const { return static_cast<int>(eta.size()); }
  /// CLR coordinates of eta: D x T per draw.
  std::vector<Eigen::MatrixXd> eta_clr() const;
  /// Theta at time t of every draw in CLR coordinates: Q x D per draw.
  std::vector<Eigen::MatrixXd> theta_clr(Index t) const;
  std::vector<Eigen::MatrixXd> sigma() const;
};

struct PipelineConfig {
  OptimizerConfig optimizer;
  DMDBConfig dmdb;
  int threads = 1;
};

struct PipelineTimings {
  double optimize_seconds = 0.0;
  double bootstrap_seconds = 0.0;
  double uncollapse_seconds = 0.0;
};

struct PipelineResult {
  OptimizationResult map;
  PosteriorDraws draws;
  PipelineTimings timings;
  std::vector<bool> eta_filled;  // true on columns filled from the forecast
};

/// Filter + backward sample for every eta draw. Draw s uses the stream
/// derive_seed(seed, s, 1). Failures are collected and reported together as
/// a NumericalError naming the failing draw indices.
std::vector<StateDraw> uncollapse(const ModelSpec& spec, const SeriesLayout& layout,
                                  const std::vector<Eigen::MatrixXd>& eta_draws,
                                  std::uint64_t seed, int threads = 1);

/// MAP, debiased bootstrap, uncollapse. `start` warm-starts the optimizer.
PipelineResult cu_pipeline(const ModelSpec& spec, const CountDataset& data,
                           const PipelineConfig& config, const Eigen::MatrixXd* start = nullptr);

}  // namespace mlndlm

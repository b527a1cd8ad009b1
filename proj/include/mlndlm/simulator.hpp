#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mlndlm/model.hpp"

namespace mlndlm {

struct SimConfig {
  Index D = 3;
  Index T_total = 300;
  Index series_length = 100;     // the last series takes any remainder
  double missing_fraction = 0.05;
  double w = 0.45;               // state innovation variance
  double reversion = 1.0;        // G; 1 gives the plain random walk
  Eigen::MatrixXd Xi0;           // empty means identity
  double nu0 = -1.0;             // <= 0 means D + 3
  double M0_low = 0.1, M0_high = 1.0;
  double C0_low = 1.0, C0_high = 1.5;
  double total_count = 500.0;    // n_t on observed columns
  std::uint64_t seed = 0;
};

ValidationReport validate(const SimConfig& config);

struct SimTruth {
  ModelSpec spec;                      // the generating model, Q = 1
  Eigen::MatrixXd Sigma;
  std::vector<Eigen::MatrixXd> theta;  // per t, 1 x (D-1)
  std::vector<Eigen::MatrixXd> theta0; // per series
  Eigen::MatrixXd eta;                 // (D-1) x T
  Eigen::MatrixXd pi;                  // D x T
};

struct Simulation {
  CountDataset data;
  SimTruth truth;
};

/// Sigma ~ IW(Xi0, nu0); M0 and C0 entries drawn once from their uniform
/// ranges; per series Theta_0 ~ MN(M0, C0, Sigma), Theta_t = r Theta_{t-1} +
/// Omega_t with Omega_t ~ MN(0, w, Sigma); eta_t = Theta_t + v_t with v_t ~
/// N(0, Sigma); Y_t ~ Multinomial(n_t, alr_inverse(eta_t)). Exactly
/// round(missing_fraction * length) time points per series are missing,
/// chosen uniformly; their counts are zero.
Simulation simulate(const SimConfig& config);

/// Fraction of zero counts among observed cells; 0 when nothing is observed.
double sparsity_report(const CountDataset& data);

}  // namespace mlndlm

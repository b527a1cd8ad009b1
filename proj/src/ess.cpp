#include "mlndlm/ess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mlndlm/errors.hpp"

namespace mlndlm {

EssResult effective_sample_size(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 10) throw ValidationError("effective sample size needs a chain of length >= 10");
  for (double x : chain)
    if (!std::isfinite(x)) throw ValidationError("chain contains non-finite values");

  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = chain[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };

  const double c0 = autocov(0);
  const double len = static_cast<double>(n);
  if (!(c0 > 1e-300)) return {len, true};

  // Sums of adjacent autocorrelation pairs, kept while positive and forced
  // to be non-increasing.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / len);
  return {std::min(len, len / tau), false};
}

}  // namespace mlndlm

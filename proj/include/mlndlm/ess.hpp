#pragma once

#include <vector>

namespace mlndlm {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // constant chain; ess is then the chain length
};

/// Effective sample size by Geyer's initial monotone sequence estimator,
/// capped at the chain length. Chains shorter than 10 are rejected.
EssResult effective_sample_size(const std::vector<double>& chain);

}  // namespace mlndlm

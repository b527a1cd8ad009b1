#pragma once

#include <cstdint>
#include <random>

namespace mlndlm {

// Counter-style seed derivation. Every independent unit of randomness
// (a posterior draw, a Gibbs iteration, a simulated series) gets its own
// stream keyed by (master, stream, substream), so results do not depend on
// the order or thread in which the units are processed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream = 0);

class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}
  RandomSource(std::uint64_t master, std::uint64_t stream,
               std::uint64_t substream = 0)
      : engine_(derive_seed(master, stream, substream)) {}

  double normal();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Gamma(shape, scale = 1).
  double gamma(double shape);
  /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes where
  /// the variate itself underflows to zero.
  double log_gamma(double shape);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }
  std::int64_t binomial(std::int64_t n, double p);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace mlndlm

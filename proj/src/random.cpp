#include "mlndlm/random.hpp"

#include <cmath>

namespace mlndlm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t substream) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(substream + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

double RandomSource::normal() { return normal_(engine_); }

double RandomSource::uniform() {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(engine_);
  while (x <= 0.0) x = u(engine_);
  return x;
}

double RandomSource::gamma(double shape) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(engine_);
}

double RandomSource::log_gamma(double shape) {
  if (shape >= 1.0) return std::log(gamma(shape));
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  return std::log(gamma(shape + 1.0)) + std::log(uniform()) / shape;
}

std::int64_t RandomSource::binomial(std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> b(n, p);
  return b(engine_);
}

}  // namespace mlndlm

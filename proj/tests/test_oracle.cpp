#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "test_support.hpp"

using namespace mlndlm;
using namespace mlndlm::testing;

TEST_CASE("explicit prior matrix for the random walk by hand") {
  const double w = 0.45, c = 1.3;
  ModelSpec spec = builtin_random_walk(3, 6, w);
  spec.C0(0, 0) = c;
  const auto prior = oracle::explicit_prior_matrix(spec, 6);
  for (Index t = 1; t <= 6; ++t) {
    CHECK(prior.A(t - 1, t - 1) == doctest::Approx(1.0 + t * w + c));
    for (Index k = 1; k < t; ++k)
      CHECK(prior.A(t - 1, t - 1 - k) == doctest::Approx((t - k) * w + c));
  }
  CHECK(prior.B.norm() == 0.0);
}

TEST_CASE("explicit prior matrix with a single time point") {
  std::mt19937_64 gen(4);
  const ModelSpec spec = random_spec(3, 2, gen);
  const auto prior = oracle::explicit_prior_matrix(spec, 1);
  const Eigen::VectorXd& F = spec.F_at(0);
  const Eigen::MatrixXd& G = spec.G_at(0);
  const double expected =
      spec.gamma_at(0) + F.dot((spec.W_at(0) + G * spec.C0 * G.transpose()) * F);
  CHECK(prior.A(0, 0) == doctest::Approx(expected).epsilon(1e-13));
  CHECK((prior.B.row(0).transpose() - (G * spec.M0).transpose() * F).norm() < 1e-13);
}

TEST_CASE("explicit prior matrix is symmetric") {
  std::mt19937_64 gen(9);
  for (int rep = 0; rep < 5; ++rep) {
    const ModelSpec spec = random_spec(4, 2, gen);
    const auto prior = oracle::explicit_prior_matrix(spec, 8);
    CHECK((prior.A - prior.A.transpose()).norm() == 0.0);
  }
}

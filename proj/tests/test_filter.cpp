#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mlndlm/errors.hpp"
#include "mlndlm/filter.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

using namespace mlndlm;
using namespace mlndlm::testing;

namespace {

// Straight-line transcription of the recursion for a single series,
// tracking only what the shared covariance sees.
void reference_xi_nu(const ModelSpec& s, const Eigen::MatrixXd& eta, Eigen::MatrixXd& Xi,
                     double& nu) {
  Eigen::MatrixXd M = s.M0, C = s.C0;
  Xi = s.Xi0;
  nu = s.nu0;
  for (Index t = 0; t < eta.cols(); ++t) {
    Eigen::MatrixXd A = s.G[0] * M;
    Eigen::MatrixXd R = s.G[0] * C * s.G[0].transpose() + s.W[0];
    Eigen::VectorXd f = A.transpose() * s.F[0];
    double q = s.gamma[0] + (s.F[0].transpose() * R * s.F[0])(0, 0);
    Eigen::VectorXd S = R * s.F[0] / q;
    Eigen::VectorXd e = eta.col(t) - f;
    M = A + S * e.transpose();
    C = R - q * S * S.transpose();
    nu = nu + 1;
    Xi = Xi + e * e.transpose() / q;
  }
}

double textbook_t_logpdf(double x, double dof, double loc, double scale) {
  const double z = (x - loc) / scale;
  return std::lgamma(0.5 * (dof + 1)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi) - std::log(scale) -
         0.5 * (dof + 1) * std::log(1 + z * z / dof);
}

}  // namespace

TEST_CASE("one-step closed form") {
  const double w = 0.7, m = 0.4, c = 1.3, eta1 = -0.8;
  ModelSpec s = builtin_random_walk(2, 1, w);
  s.M0(0, 0) = m;
  s.C0(0, 0) = c;
  Eigen::MatrixXd eta(1, 1);
  eta(0, 0) = eta1;
  auto tr = filter(s, eta, SeriesLayout::single(1));
  const auto& st = tr.steps[0];
  CHECK((*st.f)[0] == doctest::Approx(m));
  CHECK(*st.q == doctest::Approx(1 + c + w));
  CHECK(st.M(0, 0) == doctest::Approx(m + (c + w) * (eta1 - m) / (1 + c + w)));
  CHECK(tr.nu_T() == s.nu0 + 1);
}

TEST_CASE("all-missing series propagates the prior only") {
  std::mt19937_64 gen(3);
  ModelSpec s = random_spec(3, 2, gen);
  SeriesLayout layout{std::vector<bool>(6, false), {6}};
  Eigen::MatrixXd eta = random_matrix(2, 6, gen);
  auto tr = filter(s, eta, layout);
  Eigen::MatrixXd M = s.M0, C = s.C0;
  for (Index t = 0; t < 6; ++t) {
    M = s.G[0] * M;
    C = s.G[0] * C * s.G[0].transpose() + s.W[0];
    CHECK((tr.steps[t].M - M).norm() < 1e-12);
    CHECK((tr.steps[t].C - C).norm() < 1e-12);
    CHECK_FALSE(tr.steps[t].e.has_value());
    CHECK_FALSE(tr.steps[t].f.has_value());
    CHECK_FALSE(tr.steps[t].q.has_value());
    CHECK_FALSE(tr.steps[t].S.has_value());
  }
  CHECK(tr.nu_T() == s.nu0);
  CHECK(tr.Xi_T() == s.Xi0);
  CHECK(log_prior_eta(tr) == 0.0);
}

TEST_CASE("Xi_T and nu_T match a straight-line reimplementation") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 5; ++rep) {
    ModelSpec s = random_spec(3, 2, gen);
    Eigen::MatrixXd eta = random_matrix(2, 5, gen);
    auto tr = filter(s, eta, SeriesLayout::single(5));
    Eigen::MatrixXd Xi;
    double nu;
    reference_xi_nu(s, eta, Xi, nu);
    CHECK((tr.Xi_T() - Xi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(tr.nu_T() == nu);
  }
}

TEST_CASE("interleaved missing points") {
  std::mt19937_64 gen(8);
  ModelSpec s = random_spec(4, 1, gen);
  SeriesLayout layout{{true, false, true, true, false, false, true}, {7}};
  auto tr = filter(s, random_matrix(3, 7, gen), layout);
  CHECK(tr.nu_T() == s.nu0 + 4);
  for (Index t = 0; t < 7; ++t) CHECK(tr.steps[t].observed == layout.observed[t]);
}

TEST_CASE("a missing point equals two-step prior propagation") {
  // Random walk, eta observed at t = 1 and 3 with t = 2 missing, versus a
  // two-point model whose second innovation variance is 2w.
  const double w = 0.35;
  ModelSpec s = builtin_random_walk(3, 3, w);
  s.M0 << 0.2, -0.4;
  s.C0(0, 0) = 1.2;
  Eigen::MatrixXd eta(2, 3);
  eta << 0.5, 0.0, 1.1, -0.3, 0.0, 0.4;
  auto full = filter(s, eta, SeriesLayout{{true, false, true}, {3}});

  ModelSpec shortened = s;
  shortened.W = {Eigen::MatrixXd::Constant(1, 1, w), Eigen::MatrixXd::Constant(1, 1, 2 * w)};
  Eigen::MatrixXd eta2(2, 2);
  eta2.col(0) = eta.col(0);
  eta2.col(1) = eta.col(2);
  auto brief = filter(shortened, eta2, SeriesLayout::single(2));
  CHECK((full.steps[2].M - brief.steps[1].M).norm() < 1e-12);
  CHECK((full.steps[2].C - brief.steps[1].C).norm() < 1e-12);
  CHECK((full.Xi_T() - brief.Xi_T()).norm() < 1e-12);
  CHECK(full.nu_T() == brief.nu_T());
  CHECK(log_prior_eta(full) == doctest::Approx(log_prior_eta(brief)).epsilon(1e-12));
}

TEST_CASE("log prior for D = 2, T = 1 is a scalar Student-t") {
  ModelSpec s = builtin_random_walk(2, 1, 0.6);
  s.M0(0, 0) = 0.3;
  s.C0(0, 0) = 0.9;
  s.Xi0(0, 0) = 1.7;
  s.nu0 = 4.5;
  Eigen::MatrixXd eta(1, 1);
  eta(0, 0) = 1.4;
  const double q = 1.0 + 0.9 + 0.6;
  const double expected = textbook_t_logpdf(1.4, 4.5, 0.3, std::sqrt(q * 1.7 / 4.5));
  CHECK(log_prior_eta(s, eta, SeriesLayout::single(1)) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("log prior equals the explicit matrix-T density") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 10; ++rep) {
    const Index D = 2 + rep % 3, Q = 1 + rep % 2, T = 3 + rep % 4;
    ModelSpec s = random_spec(D, Q, gen);
    Eigen::MatrixXd eta = random_matrix(D - 1, T, gen);
    SeriesLayout layout = SeriesLayout::single(T);
    if (rep % 3 == 2) layout.observed[1] = false;
    const double filtered = log_prior_eta(s, eta, layout);
    const double direct = oracle::joint_matrix_t_logdensity(
        oracle::explicit_prior_matrix(s, layout), s.Xi0, s.nu0, eta, layout);
    CHECK(filtered == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("missing point in the middle changes the density deterministically") {
  std::mt19937_64 gen(4);
  ModelSpec s = random_spec(3, 1, gen);
  Eigen::MatrixXd eta = random_matrix(2, 4, gen);
  SeriesLayout all = SeriesLayout::single(4);
  SeriesLayout gap{{true, true, false, true}, {4}};
  const double a = log_prior_eta(s, eta, all);
  const double b = log_prior_eta(s, eta, gap);
  CHECK(a != b);
  CHECK(b == log_prior_eta(s, eta, gap));
  // Changing eta in the missing column has no effect.
  Eigen::MatrixXd moved = eta;
  moved.col(2).array() += 5.0;
  CHECK(log_prior_eta(s, moved, gap) == b);
  CHECK(b == doctest::Approx(oracle::joint_matrix_t_logdensity(
                                 oracle::explicit_prior_matrix(s, gap), s.Xi0, s.nu0, eta, gap))
                 .epsilon(1e-10));
}

TEST_CASE("filter ordering invariants") {
  std::mt19937_64 gen(13);
  ModelSpec s = random_spec(4, 2, gen);
  SeriesLayout layout{{true, true, false, true, true, true, true, false, true}, {4, 5}};
  auto tr = filter(s, random_matrix(3, 9, gen), layout);
  for (Index t = 0; t < 9; ++t) {
    const auto& st = tr.steps[t];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.R - st.C, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    CHECK((st.C - st.C.transpose()).norm() < 1e-9);
    CHECK((st.R - st.R.transpose()).norm() < 1e-9);
    const Eigen::MatrixXd dXi = st.Xi - tr.Xi_before(t);
    if (st.observed) {
      CHECK(*st.q >= s.gamma[0]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(dXi, Eigen::EigenvaluesOnly);
      CHECK(ex.eigenvalues().minCoeff() >= -1e-12);
      // rank one: only the largest eigenvalue is nonzero
      CHECK(ex.eigenvalues().head(2).cwiseAbs().maxCoeff() < 1e-10);
    } else {
      CHECK(dXi.norm() == 0.0);
    }
  }
  // Series restart at their own prior.
  CHECK(tr.series_start == std::vector<Index>{0, 4});
  CHECK((tr.steps[4].A - s.G[0] * s.M0).norm() < 1e-14);
}

TEST_CASE("filter errors") {
  ModelSpec s = builtin_random_walk(3, 4, 0.5);
  CHECK_THROWS_AS(filter(s, Eigen::MatrixXd::Zero(2, 3), SeriesLayout::single(4)), ValidationError);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(2, 4);
  eta(0, 2) = NAN;
  CHECK_THROWS_AS(filter(s, eta, SeriesLayout::single(4)), NumericalError);
  s.gamma = {-5.0};
  CHECK_THROWS_AS(filter(s, Eigen::MatrixXd::Zero(2, 4), SeriesLayout::single(4)), NumericalError);
}

#include <doctest.h>

#include "mlndlm/errors.hpp"
#include "mlndlm/simulator.hpp"

using namespace mlndlm;

TEST_CASE("simulated dataset shapes and invariants") {
  for (Index D : {3, 10}) {
    SimConfig c;
    c.D = D;
    c.seed = 5;
    const Simulation s = simulate(c);
    const CountDataset& d = s.data;
    CHECK(d.D() == D);
    CHECK(d.T() == 300);
    CHECK(d.layout.series_lengths == std::vector<Index>{100, 100, 100});
    CHECK(d.layout.num_observed() == 285);
    CHECK(validate(s.truth.spec, d).empty());
    for (Index k = 0; k < 3; ++k) {
      Index missing = 0;
      for (Index t = 100 * k; t < 100 * (k + 1); ++t) missing += d.observed(t) ? 0 : 1;
      CHECK(missing == 5);
    }
    for (Index t = 0; t < d.T(); ++t) {
      CHECK(d.total(t) == (d.observed(t) ? 500.0 : 0.0));
      CHECK((s.truth.pi.col(t).array() > 0.0).all());
      CHECK(s.truth.pi.col(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(s.truth.theta0.size() == 3);
    CHECK(s.truth.spec.nu0 == D + 3.0);
    CHECK(s.truth.spec.W[0](0, 0) == 0.45);
    CHECK((s.truth.spec.M0.array() >= 0.1).all());
    CHECK((s.truth.spec.M0.array() <= 1.0).all());
    CHECK(s.truth.spec.C0(0, 0) >= 1.0);
    CHECK(s.truth.spec.C0(0, 0) <= 1.5);
  }
}

TEST_CASE("simulation is a pure function of its config") {
  SimConfig c;
  c.T_total = 120;
  c.seed = 3;
  const Simulation a = simulate(c), b = simulate(c);
  CHECK(a.data.Y == b.data.Y);
  CHECK(a.data.layout.observed == b.data.layout.observed);
  CHECK(a.truth.eta == b.truth.eta);
  c.seed = 4;
  CHECK(simulate(c).data.Y != a.data.Y);
  // Remainder joins the last series.
  CHECK(a.data.layout.series_lengths == std::vector<Index>{120});
}

TEST_CASE("observation noise covariance converges to the drawn Sigma") {
  SimConfig c;
  c.D = 4;
  c.T_total = 10000;
  c.seed = 8;
  const Simulation s = simulate(c);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (Index t = 0; t < c.T_total; ++t) {
    const Eigen::VectorXd v = s.truth.eta.col(t) - s.truth.theta[t].row(0).transpose();
    cov += v * v.transpose();
  }
  cov /= static_cast<double>(c.T_total);
  CHECK((cov - s.truth.Sigma).norm() / s.truth.Sigma.norm() < 0.1);
}

TEST_CASE("sparsity report") {
  CountDataset d;
  d.Y = Eigen::MatrixXd::Ones(3, 4);
  d.layout = SeriesLayout::single(4);
  CHECK(sparsity_report(d) == 0.0);
  d.Y.setZero();
  CHECK(sparsity_report(d) == 1.0);

  double prev = -1.0;
  for (double n : {500.0, 50.0, 5.0}) {
    SimConfig c;
    c.D = 10;
    c.total_count = n;
    c.seed = 1;
    const double s = sparsity_report(simulate(c).data);
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("invalid simulation configs are rejected together") {
  SimConfig c;
  c.D = 1;
  c.missing_fraction = 1.0;
  c.w = -1;
  const auto report = validate(c);
  CHECK(report.size() >= 3);
  CHECK_THROWS_AS(simulate(c), ValidationError);
}

#include "mlndlm/smoother.hpp"

#include <cmath>
#include <string>

#include "mlndlm/errors.hpp"

namespace mlndlm {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols())
    throw ValidationError(std::string(name) + " must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError(std::string(name) + " must be symmetric");
}

}  // namespace

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& A) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Eigen::MatrixXd sample_matrix_normal_factored(const Eigen::MatrixXd& M,
                                              const Eigen::MatrixXd& row_factor,
                                              const Eigen::MatrixXd& col_factor,
                                              RandomSource& rng) {
  Eigen::MatrixXd Z(M.rows(), M.cols());
  for (Index j = 0; j < Z.cols(); ++j)
    for (Index i = 0; i < Z.rows(); ++i) Z(i, j) = rng.normal();
  return M + row_factor * Z * col_factor.transpose();
}

Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, RandomSource& rng) {
  require_symmetric(U, "row covariance");
  require_symmetric(V, "column covariance");
  if (U.rows() != M.rows() || V.rows() != M.cols())
    throw ValidationError("matrix normal: covariance shapes do not match the mean");
  return sample_matrix_normal_factored(M, psd_factor(symmetrized(U)), psd_factor(symmetrized(V)),
                                       rng);
}

Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& M, const Eigen::MatrixXd& U,
                                     const Eigen::MatrixXd& V, std::uint64_t seed) {
  RandomSource rng(seed);
  return sample_matrix_normal(M, U, V, rng);
}

Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& Xi, double nu, RandomSource& rng) {
  require_symmetric(Xi, "inverse-Wishart scale");
  const Index p = Xi.rows();
  if (!(nu > static_cast<double>(p) - 1.0))
    throw ValidationError("inverse-Wishart dof must exceed dim - 1");
  Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(Xi));
  if (llt.info() != Eigen::Success)
    throw NumericalError("inverse-Wishart scale is not positive definite");

  // Bartlett factor of a standard Wishart(I, nu).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  // Xi = L L^T. The Wishart draw on Xi^{-1} is L^{-T} A A^T L^{-1}, so its
  // inverse is (L A^{-T})(L A^{-T})^T.
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(p, p);
  A.transpose().triangularView<Eigen::Upper>().solveInPlace(B);
  const Eigen::MatrixXd LB = llt.matrixL() * B;
  return symmetrized(LB * LB.transpose());
}

Eigen::MatrixXd sample_inverse_wishart(const Eigen::MatrixXd& Xi, double nu, std::uint64_t seed) {
  RandomSource rng(seed);
  return sample_inverse_wishart(Xi, nu, rng);
}

StateDraw smooth_draw(const ModelSpec& spec, const FilterTrace& trace, RandomSource& rng) {
  const SeriesLayout& layout = trace.layout;
  StateDraw draw;
  draw.Sigma = sample_inverse_wishart(symmetrized(trace.Xi_T()), trace.nu_T(), rng);
  const Eigen::MatrixXd sigma_factor = psd_factor(draw.Sigma);
  draw.theta.resize(trace.T());
  draw.theta0.resize(layout.K());

  for (Index k = layout.K() - 1; k >= 0; --k) {
    const Index start = trace.series_start[k];
    const Index last = start + layout.series_lengths[k] - 1;
    const FilterStep& end = trace.steps[last];
    draw.theta[last] = sample_matrix_normal_factored(end.M, psd_factor(symmetrized(end.C)),
                                                     sigma_factor, rng);
    // t = start - 1 stands for the series' initial state.
    for (Index t = last - 1; t >= start - 1; --t) {
      const Eigen::MatrixXd& M = t >= start ? trace.steps[t].M : spec.M0;
      const Eigen::MatrixXd& C = t >= start ? trace.steps[t].C : spec.C0;
      const FilterStep& next = trace.steps[t + 1];
      Eigen::LLT<Eigen::MatrixXd> rllt(next.R);
      if (rllt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(next.R, Eigen::EigenvaluesOnly);
        const double cond = es.eigenvalues().maxCoeff() /
                            std::max(es.eigenvalues().minCoeff(), 1e-300);
        throw NumericalError("smoother: R is numerically singular at t=" +
                                 std::to_string(t + 1) + " (condition estimate " +
                                 std::to_string(cond) + ")",
                             t + 1);
      }
      // Z = C G^T R^{-1}; R and C symmetric so Z^T = R^{-1} G C.
      const Eigen::MatrixXd Zt = rllt.solve(spec.G_at(t + 1) * C);
      const Eigen::MatrixXd Z = Zt.transpose();
      const Eigen::MatrixXd& next_theta = draw.theta[t + 1];
      const Eigen::MatrixXd mean = M + Z * (next_theta - next.A);
      const Eigen::MatrixXd cov = symmetrized(C - Z * next.R * Zt);
      Eigen::MatrixXd sample =
          sample_matrix_normal_factored(mean, psd_factor(cov), sigma_factor, rng);
      if (t >= start)
        draw.theta[t] = std::move(sample);
      else
        draw.theta0[k] = std::move(sample);
    }
  }
  return draw;
}

StateDraw smooth_draw(const ModelSpec& spec, const FilterTrace& trace, std::uint64_t seed) {
  RandomSource rng(seed);
  return smooth_draw(spec, trace, rng);
}

}  // namespace mlndlm

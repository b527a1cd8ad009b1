#include "mlndlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mlndlm/errors.hpp"

namespace mlndlm {

namespace {

constexpr double kSymmetryTol = 1e-10;

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool is_symmetric(const Eigen::MatrixXd& m) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol;
}

bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

bool is_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -1e-10 * scale;
}

void check_square(ValidationReport& r, const std::string& field, const Eigen::MatrixXd& m,
                  Index n) {
  if (m.rows() != n || m.cols() != n)
    r.push_back({field, "expected " + std::to_string(n) + "x" + std::to_string(n) +
                            ", got " + shape(m)});
}

void check_cov(ValidationReport& r, const std::string& field, const Eigen::MatrixXd& m,
               bool definite) {
  if (m.rows() != m.cols() || m.size() == 0) return;
  if (!m.allFinite()) {
    r.push_back({field, "non-finite entries"});
    return;
  }
  if (!is_symmetric(m)) {
    r.push_back({field, "not symmetric (max asymmetry " +
                            std::to_string((m - m.transpose()).cwiseAbs().maxCoeff()) + ")"});
  }
  if (definite && !is_positive_definite(m)) r.push_back({field, "not positive definite"});
  if (!definite && !is_psd(m)) r.push_back({field, "not positive semidefinite"});
}

template <typename Seq>
void check_length(ValidationReport& r, const std::string& field, const Seq& seq, Index T) {
  const auto n = static_cast<Index>(seq.size());
  if (n == 0) {
    r.push_back({field, "empty"});
  } else if (T >= 0 && n != 1 && n != T) {
    r.push_back({field, "has " + std::to_string(n) + " entries; expected 1 or T=" +
                            std::to_string(T)});
  }
}

ValidationReport validate_impl(const ModelSpec& spec, Index T) {
  ValidationReport r;
  const Index Q = spec.C0.rows();
  const Index p = spec.Xi0.rows();
  if (Q < 1) r.push_back({"C0", "state dimension Q must be >= 1"});
  if (p < 1) r.push_back({"Xi0", "D must be >= 2"});

  check_square(r, "C0", spec.C0, Q);
  check_square(r, "Xi0", spec.Xi0, p);
  check_cov(r, "C0", spec.C0, true);
  check_cov(r, "Xi0", spec.Xi0, true);
  if (spec.M0.rows() != Q || spec.M0.cols() != p)
    r.push_back({"M0", "expected " + std::to_string(Q) + "x" + std::to_string(p) + ", got " +
                           shape(spec.M0)});
  else if (!spec.M0.allFinite())
    r.push_back({"M0", "non-finite entries"});

  if (!std::isfinite(spec.nu0) || spec.nu0 <= static_cast<double>(p) - 1.0)
    r.push_back({"nu0", "must exceed D - 2 = " + std::to_string(p - 1)});

  check_length(r, "F", spec.F, T);
  check_length(r, "G", spec.G, T);
  check_length(r, "W", spec.W, T);
  check_length(r, "gamma", spec.gamma, T);
  for (std::size_t i = 0; i < spec.F.size(); ++i) {
    const std::string f = "F[" + std::to_string(i) + "]";
    if (spec.F[i].size() != Q) r.push_back({f, "expected length " + std::to_string(Q)});
    else if (!spec.F[i].allFinite()) r.push_back({f, "non-finite entries"});
  }
  for (std::size_t i = 0; i < spec.G.size(); ++i) {
    const std::string f = "G[" + std::to_string(i) + "]";
    check_square(r, f, spec.G[i], Q);
    if (!spec.G[i].allFinite()) r.push_back({f, "non-finite entries"});
  }
  for (std::size_t i = 0; i < spec.W.size(); ++i) {
    const std::string f = "W[" + std::to_string(i) + "]";
    check_square(r, f, spec.W[i], Q);
    check_cov(r, f, spec.W[i], false);
  }
  for (std::size_t i = 0; i < spec.gamma.size(); ++i) {
    if (!(spec.gamma[i] > 0.0) || !std::isfinite(spec.gamma[i]))
      r.push_back({"gamma[" + std::to_string(i) + "]", "must be finite and > 0"});
  }
  return r;
}

}  // namespace

bool ModelSpec::has_diagonal_static_W() const {
  if (W.size() != 1) return false;
  const Eigen::MatrixXd& w = W[0];
  return (w - Eigen::MatrixXd(w.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

void ModelSpec::set_diagonal_W(const Eigen::VectorXd& w) {
  W.assign(1, Eigen::MatrixXd(w.asDiagonal()));
}

Index SeriesLayout::series_start(Index k) const {
  Index s = 0;
  for (Index j = 0; j < k; ++j) s += series_lengths[j];
  return s;
}

Index SeriesLayout::num_observed() const {
  return static_cast<Index>(std::count(observed.begin(), observed.end(), true));
}

SeriesLayout SeriesLayout::single(Index T) {
  return SeriesLayout{std::vector<bool>(T, true), {T}};
}

ValidationReport validate(const ModelSpec& spec) { return validate_impl(spec, -1); }

ValidationReport validate(const SeriesLayout& layout) {
  ValidationReport r;
  if (layout.series_lengths.empty()) r.push_back({"series_lengths", "no series"});
  Index total = 0;
  for (std::size_t k = 0; k < layout.series_lengths.size(); ++k) {
    if (layout.series_lengths[k] < 1)
      r.push_back({"series_lengths[" + std::to_string(k) + "]", "must be positive"});
    total += layout.series_lengths[k];
  }
  if (total != layout.T())
    r.push_back({"series_lengths", "lengths sum to " + std::to_string(total) +
                                       " but T=" + std::to_string(layout.T())});
  return r;
}

ValidationReport validate(const ModelSpec& spec, const CountDataset& data) {
  ValidationReport r = validate_impl(spec, data.T());
  if (data.D() != spec.D())
    r.push_back({"Y", "has " + std::to_string(data.D()) + " rows; model has D=" +
                          std::to_string(spec.D())});
  if (static_cast<Index>(data.layout.observed.size()) != data.T())
    r.push_back({"observed", "mask length " + std::to_string(data.layout.observed.size()) +
                                 " != T=" + std::to_string(data.T())});
  else {
    ValidationReport lr = validate(data.layout);
    r.insert(r.end(), lr.begin(), lr.end());
  }
  for (Index t = 0; t < data.T(); ++t) {
    for (Index d = 0; d < data.D(); ++d) {
      const double y = data.Y(d, t);
      if (!std::isfinite(y) || y < 0.0 || y != std::floor(y)) {
        r.push_back({"Y", "entry (" + std::to_string(d) + "," + std::to_string(t) +
                              ") is not a nonnegative integer"});
        return r;
      }
    }
    if (t < static_cast<Index>(data.layout.observed.size()) && !data.layout.observed[t] &&
        data.Y.col(t).sum() != 0.0)
      r.push_back({"Y", "missing column " + std::to_string(t) + " carries counts"});
  }
  return r;
}

ValidationReport validate(const HyperPrior& prior, Index Q) {
  ValidationReport r;
  if (prior.a.size() != Q) r.push_back({"hyperprior.a", "expected length " + std::to_string(Q)});
  if (prior.b.size() != Q) r.push_back({"hyperprior.b", "expected length " + std::to_string(Q)});
  for (Index i = 0; i < prior.a.size(); ++i)
    if (!(prior.a[i] > 0.0)) r.push_back({"hyperprior.a", "entries must be > 0"});
  for (Index i = 0; i < prior.b.size(); ++i)
    if (!(prior.b[i] > 0.0)) r.push_back({"hyperprior.b", "entries must be > 0"});
  return r;
}

std::string format_report(const ValidationReport& report) {
  std::ostringstream os;
  for (const auto& issue : report) os << issue.field << ": " << issue.message << "\n";
  return os.str();
}

void throw_if_invalid(const ValidationReport& report) {
  if (!report.empty()) throw ValidationError(format_report(report));
}

ModelSpec builtin_random_walk(Index D, Index T, double w) {
  if (D < 2) throw ValidationError("random walk model needs D >= 2");
  if (T < 1) throw ValidationError("random walk model needs T >= 1");
  if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("state variance w must be > 0");
  const Index p = D - 1;
  ModelSpec s;
  s.F = {Eigen::VectorXd::Ones(1)};
  s.G = {Eigen::MatrixXd::Identity(1, 1)};
  s.W = {Eigen::MatrixXd::Constant(1, 1, w)};
  s.gamma = {1.0};
  s.M0 = Eigen::MatrixXd::Zero(1, p);
  s.C0 = Eigen::MatrixXd::Identity(1, 1);
  s.Xi0 = Eigen::MatrixXd::Identity(p, p);
  s.nu0 = static_cast<double>(D + 3);
  return s;
}

ModelSpec builtin_local_trend(Index D, Index T, double w_theta, double w_alpha,
                              double damping) {
  if (D < 2) throw ValidationError("local trend model needs D >= 2");
  if (T < 1) throw ValidationError("local trend model needs T >= 1");
  if (!(w_theta > 0.0) || !(w_alpha > 0.0))
    throw ValidationError("state variances must be > 0");
  if (!(damping > 0.0) || damping > 1.0) throw ValidationError("damping must lie in (0, 1]");
  const Index p = D - 1;
  ModelSpec s;
  Eigen::VectorXd F(2);
  F << 1.0, 0.0;
  Eigen::MatrixXd G(2, 2);
  G << 1.0, 1.0, 0.0, damping;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
  W(0, 0) = w_theta;
  W(1, 1) = w_alpha;
  s.F = {F};
  s.G = {G};
  s.W = {W};
  s.gamma = {1.0};
  s.M0 = Eigen::MatrixXd::Zero(2, p);
  s.C0 = Eigen::MatrixXd::Identity(2, 2);
  s.Xi0 = Eigen::MatrixXd::Identity(p, p);
  s.nu0 = static_cast<double>(D + 3);
  return s;
}

}  // namespace mlndlm

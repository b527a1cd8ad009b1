#include "mlndlm/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "mlndlm/compositional.hpp"
#include "mlndlm/errors.hpp"
#include "mlndlm/objective.hpp"

namespace mlndlm {

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::alr_of_smoothed_proportions: return "alr_of_smoothed_proportions";
    case InitMode::zeros: return "zeros";
    case InitMode::user_supplied: return "user_supplied";
  }
  return "unknown";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "alr_of_smoothed_proportions") return InitMode::alr_of_smoothed_proportions;
  if (name == "zeros") return InitMode::zeros;
  if (name == "user_supplied") return InitMode::user_supplied;
  throw ValidationError("unknown init mode '" + name + "'");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kStallWindow = 5;
constexpr int kNoProgressWindow = 50;

struct Point {
  double alpha = 0.0;
  double f = kInf;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

class LineSearch {
 public:
  LineSearch(const FlatObjective& obj, const Eigen::VectorXd& x0, double f0,
             const Eigen::VectorXd& g0, const Eigen::VectorXd& dir, int max_evals)
      : obj_(obj), x0_(x0), f0_(f0), dir_(dir), slope0_(g0.dot(dir)), max_evals_(max_evals) {}

  std::optional<Point> run(double alpha0) {
    Point prev;
    prev.alpha = 0.0;
    prev.f = f0_;
    prev.slope = slope0_;
    double alpha = alpha0;
    for (int i = 0; evals_ < max_evals_; ++i) {
      Point cur = eval(alpha);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.slope) <= -kCurvature * slope0_) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return std::nullopt;
  }

 private:
  Point eval(double alpha) {
    ++evals_;
    Point p;
    p.alpha = alpha;
    p.x = x0_ + alpha * dir_;
    try {
      p.f = obj_(p.x, p.g);
      if (!std::isfinite(p.f) || !p.g.allFinite()) p.f = kInf;
    } catch (const NumericalError&) {
      p.f = kInf;
    }
    p.slope = std::isfinite(p.f) ? p.g.dot(dir_) : kInf;
    return p;
  }

  // Sufficient decrease, with the approximate-Wolfe relaxation for steps
  // whose change in f is below rounding level.
  bool armijo(const Point& p) const {
    if (!std::isfinite(p.f)) return false;
    if (p.f <= f0_ + kArmijo * p.alpha * slope0_) return true;
    const double noise = 1e-12 * std::abs(f0_);
    return p.f <= f0_ + noise && p.slope <= (2.0 * kArmijo - 1.0) * slope0_;
  }

  std::optional<Point> zoom(Point lo, Point hi) {
    while (evals_ < max_evals_) {
      const double a = lo.alpha, b = hi.alpha;
      double alpha = cubic_min(lo, hi);
      const double lo_edge = std::min(a, b), hi_edge = std::max(a, b);
      const double margin = 0.1 * (hi_edge - lo_edge);
      if (!std::isfinite(alpha) || alpha < lo_edge + margin || alpha > hi_edge - margin)
        alpha = 0.5 * (a + b);
      if (std::abs(b - a) < 1e-16 * std::max(1.0, std::abs(a))) break;
      Point cur = eval(alpha);
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -kCurvature * slope0_) return cur;
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Fall back to the best sufficient-decrease point found, if it moved.
    if (lo.alpha > 0.0 && armijo(lo)) return lo;
    return std::nullopt;
  }

  static double cubic_min(const Point& p, const Point& q) {
    if (!std::isfinite(p.f) || !std::isfinite(q.f)) return std::nan("");
    const double d1 = p.slope + q.slope - 3.0 * (p.f - q.f) / (p.alpha - q.alpha);
    const double disc = d1 * d1 - p.slope * q.slope;
    if (disc < 0.0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), q.alpha - p.alpha);
    return q.alpha - (q.alpha - p.alpha) * (q.slope + d2 - d1) / (q.slope - p.slope + 2.0 * d2);
  }

  const FlatObjective& obj_;
  const Eigen::VectorXd& x0_;
  double f0_;
  const Eigen::VectorXd& dir_;
  double slope0_;
  int max_evals_;
  int evals_ = 0;
};

}  // namespace

LbfgsResult lbfgs_minimize(const FlatObjective& objective, const Eigen::VectorXd& x0,
                           const OptimizerConfig& config) {
  if (config.history_size < 1 || !(config.grad_tol > 0.0) || !(config.rel_obj_tol > 0.0))
    throw ValidationError("optimizer: tolerances must be > 0 and history_size >= 1");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  LbfgsResult r;
  r.x = x0;
  r.f = objective(r.x, r.grad);
  if (!std::isfinite(r.f)) throw NumericalError("optimizer: objective is not finite at the start");
  r.trajectory.push_back({0, r.f, r.grad.lpNorm<Eigen::Infinity>(), elapsed()});

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int stalled = 0;
  double best_grad = kInf;
  int since_best = 0;

  for (int k = 0;; ++k) {
    const double gnorm = r.grad.lpNorm<Eigen::Infinity>();
    if (gnorm < config.grad_tol) {
      r.converged = true;
      r.stop_reason = "gradient sup-norm below tolerance";
      break;
    }
    if (k >= config.max_iters) {
      r.stop_reason = "maximum iterations reached";
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd dir = -r.grad;
    const auto m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= alpha[i] * y_hist[i];
    }
    if (m > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    if (dir.dot(r.grad) >= 0.0) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -r.grad;
    }

    const double step0 = s_hist.empty() ? std::min(1.0, 1.0 / dir.norm()) : 1.0;
    LineSearch ls(objective, r.x, r.f, r.grad, dir, config.max_linesearch);
    std::optional<Point> next = ls.run(step0);
    if (!next && !s_hist.empty()) {
      // Retry along steepest descent with a fresh memory.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -r.grad;
      LineSearch retry(objective, r.x, r.f, r.grad, dir, config.max_linesearch);
      next = retry.run(std::min(1.0, 1.0 / dir.norm()));
    }
    if (!next) {
      r.stop_reason = "line search failed";
      break;
    }

    Eigen::VectorXd s = next->x - r.x;
    Eigen::VectorXd y = next->g - r.grad;
    const double sy = s.dot(y);
    const double f_old = r.f;
    r.x = std::move(next->x);
    r.f = next->f;
    r.grad = std::move(next->g);
    r.iterations = k + 1;
    r.trajectory.push_back({k + 1, r.f, r.grad.lpNorm<Eigen::Infinity>(), elapsed()});

    if (sy > 1e-12 * y.squaredNorm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.history_size) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    // Stagnation: negligible relative change over a run of steps, and no new
    // best gradient norm for a long while.
    const double gnew = r.grad.lpNorm<Eigen::Infinity>();
    if (gnew < best_grad) {
      best_grad = gnew;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (std::abs(f_old - r.f) / std::max(1.0, std::abs(r.f)) < config.rel_obj_tol)
      ++stalled;
    else
      stalled = 0;
    if (stalled >= kStallWindow && since_best >= kNoProgressWindow) {
      r.stop_reason = "relative objective change below tolerance without gradient progress";
      break;
    }
  }
  return r;
}

Eigen::MatrixXd init_eta(const ModelSpec& spec, const CountDataset& data, InitMode mode,
                         const Eigen::MatrixXd* user) {
  const Index p = data.D() - 1;
  const Index T = data.T();
  if (mode == InitMode::zeros) return Eigen::MatrixXd::Zero(p, T);
  if (mode == InitMode::user_supplied) {
    if (user == nullptr || user->rows() != p || user->cols() != T)
      throw ValidationError("user-supplied initial eta must be " + std::to_string(p) + "x" +
                            std::to_string(T));
    return *user;
  }

  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(p, T);
  const double pseudo = 0.5;
  for (Index k = 0; k < data.layout.K(); ++k) {
    const Index start = data.layout.series_start(k);
    const Index len = data.layout.series_lengths[k];
    std::vector<Index> seen;
    for (Index t = start; t < start + len; ++t) {
      if (!data.observed(t)) continue;
      const Eigen::VectorXd smoothed = data.Y.col(t).array() + pseudo;
      eta.col(t) = (smoothed.head(p).array() / smoothed[p]).log().matrix();
      seen.push_back(t);
    }
    if (seen.empty()) {
      Eigen::MatrixXd A = spec.M0;
      for (Index t = start; t < start + len; ++t) {
        A = spec.G_at(t) * A;
        eta.col(t) = A.transpose() * spec.F_at(t);
      }
      continue;
    }
    for (Index t = start; t < seen.front(); ++t) eta.col(t) = eta.col(seen.front());
    for (Index t = seen.back() + 1; t < start + len; ++t) eta.col(t) = eta.col(seen.back());
    for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
      const Index a = seen[i], b = seen[i + 1];
      for (Index t = a + 1; t < b; ++t) {
        const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
        eta.col(t) = (1.0 - w) * eta.col(a) + w * eta.col(b);
      }
    }
  }
  return eta;
}

OptimizationResult map_estimate(const ModelSpec& spec, const CountDataset& data,
                                const OptimizerConfig& config, const Eigen::MatrixXd* start) {
  const Eigen::MatrixXd eta0 =
      start != nullptr ? init_eta(spec, data, InitMode::user_supplied, start)
                       : init_eta(spec, data, config.init_mode, nullptr);
  CollapsedObjective objective(spec, data);
  const FlatObjective fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return objective(x, g);
  };
  LbfgsResult r = lbfgs_minimize(fn, objective.flatten(eta0), config);
  OptimizationResult out;
  out.eta_hat = objective.reshape(r.x);
  out.trajectory = std::move(r.trajectory);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.stop_reason = std::move(r.stop_reason);
  return out;
}

}  // namespace mlndlm

// Acceptance suite: one PASS/FAIL line per criterion.

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mlndlm/cli_commands.hpp"
#include "mlndlm/compositional.hpp"
#include "mlndlm/dmdb.hpp"
#include "mlndlm/ess.hpp"
#include "mlndlm/filter.hpp"
#include "mlndlm/gibbs.hpp"
#include "mlndlm/io.hpp"
#include "mlndlm/objective.hpp"
#include "mlndlm/optimizer.hpp"
#include "mlndlm/pipeline.hpp"
#include "mlndlm/simulator.hpp"
#include "mlndlm/smoother.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

using namespace mlndlm;
using namespace mlndlm::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome gradient_correctness() {
  double worst = 0.0;
  int instances = 0;
  for (Index D : {2, 3, 5}) {
    for (Index T : {3, 8}) {
      for (Index Q : {1, 2}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
          std::mt19937_64 gen(1000 * D + 100 * T + 10 * Q + seed);
          const ModelSpec spec = random_spec(D, Q, gen);
          CountDataset data = random_counts(D, T, gen);
          if (seed % 2 == 1) {
            data.layout.observed[1] = false;
            data.Y.col(1).setZero();
          }
          const Eigen::MatrixXd eta = random_matrix(D - 1, T, gen, 0.7);
          CollapsedObjective obj(spec, data);
          const Eigen::VectorXd x = obj.flatten(eta);
          Eigen::VectorXd g;
          obj(x, g);
          const Eigen::VectorXd fd = oracle::finite_difference_gradient(
              [&](const Eigen::VectorXd& y) {
                Eigen::VectorXd unused;
                return obj(y, unused);
              },
              x);
          for (Index i = 0; i < x.size(); ++i) {
            const double tol = std::max(1e-5 * std::abs(fd[i]), 1e-7);
            worst = std::max(worst, std::abs(g[i] - fd[i]) / tol);
          }
          ++instances;
        }
      }
    }
  }
  return {worst <= 1.0, std::to_string(instances) + " instances, worst |analytic-fd|/tol = " +
                            fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 2

Outcome density_oracle() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::mt19937_64 gen(500 + i);
    const Index D = 2 + i % 3, Q = 1 + i % 2, T = 1 + i % 6;
    const ModelSpec spec = random_spec(D, Q, gen);
    const Eigen::MatrixXd eta = random_matrix(D - 1, T, gen);
    const SeriesLayout layout = SeriesLayout::single(T);
    const double a = log_prior_eta(spec, eta, layout);
    const double b = oracle::joint_matrix_t_logdensity(oracle::explicit_prior_matrix(spec, layout),
                                                       spec.Xi0, spec.nu0, eta, layout);
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  return {worst <= 1e-6, "20 instances, worst relative difference = " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 3

Outcome smoother_correctness() {
  ModelSpec spec;
  spec.F = {Eigen::VectorXd::Constant(1, 1.0)};
  spec.G = {Eigen::MatrixXd::Constant(1, 1, 0.9)};
  spec.W = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
  spec.gamma = {0.8};
  spec.M0 = Eigen::MatrixXd::Constant(1, 1, 0.2);
  spec.C0 = Eigen::MatrixXd::Constant(1, 1, 1.5);
  spec.Xi0 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  spec.nu0 = 5.0;
  Eigen::MatrixXd eta(1, 4);
  eta << 0.4, -0.3, 1.1, 0.7;
  const FilterTrace trace = filter(spec, eta, SeriesLayout::single(4));
  const auto exact = oracle::condition_states_q1(spec, eta, 0);
  const double sigma_mean = trace.Xi_T()(0, 0) / (trace.nu_T() - 2.0);

  const int n = 100000;
  RandomSource rng(20261018);
  std::vector<Eigen::VectorXd> sample(n, Eigen::VectorXd(5));
  for (int i = 0; i < n; ++i) {
    const StateDraw d = smooth_draw(spec, trace, rng);
    sample[i][0] = d.theta0[0](0, 0);
    for (int t = 0; t < 4; ++t) sample[i][t + 1] = d.theta[t](0, 0);
  }
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    double m = 0.0;
    for (const auto& v : sample) m += v[t];
    m /= n;
    double m2 = 0.0, m4 = 0.0;
    for (const auto& v : sample) {
      const double c = v[t] - m;
      m2 += c * c;
      m4 += c * c * c * c;
    }
    m2 /= n;
    m4 /= n;
    const double target_var = exact.var[t] * sigma_mean;
    const double se_mean = std::sqrt(m2 / n);
    const double se_var = std::sqrt((m4 - m2 * m2) / n);
    worst = std::max({worst, std::abs(m - exact.mean[t]) / se_mean,
                      std::abs(m2 - target_var) / se_var});
  }
  return {worst <= 3.0, "100000 draws, worst deviation = " + fmt("%.2f", worst) + " SE"};
}

// ---------------------------------------------------------------- 4

Outcome gibbs_oracle() {
  std::mt19937_64 gen(44);
  ModelSpec spec = builtin_random_walk(4, 30, 0.3);
  const Eigen::MatrixXd eta = random_matrix(3, 30, gen);
  const FilterTrace trace = filter(spec, eta, SeriesLayout::single(30));
  const StateDraw fixed = smooth_draw(spec, trace, 8);
  const HyperPrior prior{Eigen::VectorXd::Constant(1, 30.0), Eigen::VectorXd::Constant(1, 15.0)};
  const WConditional c = w_conditional(spec, SeriesLayout::single(30), fixed, prior);
  const int n = 50000;
  RandomSource rng(3);
  std::vector<double> w(n);
  for (auto& x : w) x = gibbs_w_update(spec, SeriesLayout::single(30), fixed, prior, rng)[0];
  std::sort(w.begin(), w.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cdf = boost::math::gamma_q(c.shape[0], c.rate[0] / w[i]);
    ks = std::max({ks, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
  }
  return {ks < 0.02, "KS statistic = " + fmt("%.4f", ks) + " at 50000 draws"};
}

// ---------------------------------------------------------------- 5

Outcome map_fixed_point() {
  SimConfig sc;
  sc.D = 3;
  sc.T_total = 300;
  sc.seed = 5;
  const Simulation sim = simulate(sc);
  const ModelSpec& spec = sim.truth.spec;
  OptimizerConfig cfg;
  const OptimizationResult r = map_estimate(spec, sim.data, cfg);
  CollapsedObjective obj(spec, sim.data);
  Eigen::VectorXd g;
  const double f = obj(obj.flatten(r.eta_hat), g);
  const double gnorm = g.lpNorm<Eigen::Infinity>();
  const OptimizationResult again = map_estimate(spec, sim.data, cfg, &r.eta_hat);
  cfg.init_mode = InitMode::zeros;
  const OptimizationResult other = map_estimate(spec, sim.data, cfg);
  Eigen::VectorXd g2;
  const double f2 = obj(obj.flatten(other.eta_hat), g2);
  const bool ok = r.converged && gnorm < 1e-5 && again.iterations <= 2 && other.converged &&
                  std::abs(f - f2) <= 1e-6;
  return {ok, "grad sup-norm " + fmt("%.3g", gnorm) + ", restart iterations " +
                  std::to_string(again.iterations) + ", |f(alr init) - f(zero init)| = " +
                  fmt("%.3g", std::abs(f - f2))};
}

// ---------------------------------------------------------------- 6

bool bench_monotone(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "mlndlm_acceptance_bench";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bench.json")
        << R"({"bench": {"D": [3, 6, 12], "T": [100, 300, 900], "reps": 3, "seed": 11}})";
  }
  std::ostringstream out, err;
  const int code = cli::run({"bench", "--config", (dir / "bench.json").string(), "--out",
                             (dir / "out").string()},
                            out, err);
  if (code != 0) {
    detail = "bench exited with " + std::to_string(code);
    return false;
  }
  const auto table = io::read_csv(dir / "out" / "bench_summary.csv");
  std::map<std::pair<int, int>, double> total;
  for (const auto& row : table.rows) total[{std::stoi(row[0]), std::stoi(row[1])}] = std::stod(row[7]);
  const std::vector<int> Ds{3, 6, 12}, Ts{100, 300, 900};
  bool ok = true;
  for (int D : Ds)
    for (std::size_t i = 1; i < Ts.size(); ++i) ok = ok && total[{D, Ts[i]}] >= total[{D, Ts[i - 1]}];
  for (int T : Ts)
    for (std::size_t i = 1; i < Ds.size(); ++i) ok = ok && total[{Ds[i], T}] >= total[{Ds[i - 1], T}];
  detail = "bench mean MAP seconds D=3: " + fmt("%.3f", total[{3, 100}]) + "/" +
           fmt("%.3f", total[{3, 300}]) + "/" + fmt("%.3f", total[{3, 900}]) +
           ", D=12: " + fmt("%.3f", total[{12, 100}]) + "/" + fmt("%.3f", total[{12, 300}]) + "/" +
           fmt("%.3f", total[{12, 900}]) + (ok ? " (monotone)" : " (NOT monotone)");
  fs::remove_all(dir);
  return ok;
}

Outcome calibration() {
  long covered = 0, cells = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    SimConfig sc;
    sc.D = 3;
    sc.T_total = 300;
    sc.seed = 600 + k;
    const Simulation sim = simulate(sc);
    PipelineConfig pc;
    pc.dmdb.num_samples = 1000;
    pc.dmdb.seed = 900 + k;
    const PipelineResult res = cu_pipeline(sim.truth.spec, sim.data, pc);
    for (Index t = 0; t < sim.data.T(); ++t) {
      const CellSummary s = summarize(res.draws.theta_clr(t));
      const Eigen::MatrixXd truth = alr_to_clr_rows(sim.truth.theta[t]);
      for (Index i = 0; i < truth.size(); ++i) {
        covered += (truth(i) >= s.lower(i) && truth(i) <= s.upper(i)) ? 1 : 0;
        ++cells;
      }
    }
  }
  const double rate = static_cast<double>(covered) / static_cast<double>(cells);
  const bool coverage_ok = rate >= 0.90 && rate <= 0.99;

  std::string bench_detail;
  const bool bench_ok = bench_monotone(bench_detail);

  std::mt19937_64 gen(77);
  std::normal_distribution<double> z;
  std::vector<double> ar(100000);
  ar[0] = z(gen) / std::sqrt(1 - 0.81);
  for (std::size_t i = 1; i < ar.size(); ++i) ar[i] = 0.9 * ar[i - 1] + z(gen);
  const double expected = ar.size() * 0.1 / 1.9;
  const double ess = effective_sample_size(ar).ess;
  const bool ess_ok = std::abs(ess - expected) <= 0.2 * expected;

  return {coverage_ok && bench_ok && ess_ok,
          "coverage " + fmt("%.4f", rate) + " over " + std::to_string(cells) + " cells; " +
              bench_detail + "; AR(1) ESS " + fmt("%.0f", ess) + " vs " + fmt("%.0f", expected)};
}

// ---------------------------------------------------------------- 7

Outcome multi_series_invariants() {
  bool ok = true;
  double worst_xi = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 gen(70 + seed);
    const ModelSpec spec = random_spec(4, 2, gen);
    const std::vector<Index> lengths{40, 25, 60, 35};
    const Index T = 160;
    Eigen::MatrixXd eta = random_matrix(3, T, gen);
    SeriesLayout layout;
    layout.series_lengths = lengths;
    layout.observed.assign(T, true);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Index observed = 0;
    for (Index t = 0; t < T; ++t) {
      layout.observed[t] = u(gen) >= 0.05;
      observed += layout.observed[t] ? 1 : 0;
    }
    const FilterTrace base = filter(spec, eta, layout);
    ok = ok && base.nu_T() == spec.nu0 + static_cast<double>(observed);

    // Reverse the series order.
    const std::vector<int> order{3, 2, 1, 0};
    SeriesLayout perm;
    Eigen::MatrixXd eta_p(3, T);
    std::vector<Index> old_start, new_start;
    Index pos = 0;
    for (int k : order) {
      const Index s = layout.series_start(k);
      old_start.push_back(s);
      new_start.push_back(pos);
      perm.series_lengths.push_back(lengths[k]);
      for (Index t = 0; t < lengths[k]; ++t) {
        eta_p.col(pos + t) = eta.col(s + t);
        perm.observed.push_back(layout.observed[s + t]);
      }
      pos += lengths[k];
    }
    const FilterTrace p = filter(spec, eta_p, perm);
    ok = ok && p.nu_T() == base.nu_T();
    worst_xi = std::max(worst_xi, (p.Xi_T() - base.Xi_T()).cwiseAbs().maxCoeff() /
                                      base.Xi_T().cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (Index t = 0; t < lengths[order[i]]; ++t) {
        const FilterStep& a = base.steps[old_start[i] + t];
        const FilterStep& b = p.steps[new_start[i] + t];
        ok = ok && a.M == b.M && a.C == b.C;
      }
    }
  }
  ok = ok && worst_xi <= 1e-12;
  return {ok, "5 layouts of 4 series with ~5% missing; nu_T exact, per-series (M, C) bitwise, "
              "worst relative Xi_T difference " + fmt("%.3g", worst_xi)};
}

// ---------------------------------------------------------------- 8

Outcome debiasing_direction() {
  double dmdb_total = 0.0, mdb_total = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    SimConfig sc;
    sc.D = 10;
    sc.T_total = 300;
    sc.seed = 800 + k;
    const Simulation sim = simulate(sc);
    const OptimizationResult map = map_estimate(sim.truth.spec, sim.data, OptimizerConfig{});
    DMDBConfig c;
    c.num_samples = 500;
    c.seed = 50 + k;
    auto mean_clr = [](const std::vector<Eigen::MatrixXd>& draws) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(draws[0].rows() + 1, draws[0].cols());
      for (const auto& d : draws) m += alr_to_clr_columns(d);
      return Eigen::MatrixXd(m / static_cast<double>(draws.size()));
    };
    const Eigen::MatrixXd dmdb = mean_clr(dmdb_sample_eta(sim.truth.spec, map.eta_hat, sim.data, c));
    const Eigen::MatrixXd mdb = mean_clr(mdb_sample_eta(sim.data, c));
    const Eigen::MatrixXd truth = alr_to_clr_columns(sim.truth.eta);
    double a = 0.0, b = 0.0, n = 0.0;
    for (Index t = 0; t < sim.data.T(); ++t) {
      if (!sim.data.observed(t)) continue;
      a += (dmdb.col(t) - truth.col(t)).cwiseAbs().sum();
      b += (mdb.col(t) - truth.col(t)).cwiseAbs().sum();
      n += static_cast<double>(truth.rows());
    }
    dmdb_total += a / n;
    mdb_total += b / n;
  }
  return {dmdb_total <= mdb_total, "mean |CLR deviation|: debiased " + fmt("%.4f", dmdb_total / 10) +
                                       ", plain " + fmt("%.4f", mdb_total / 10)};
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Wall-clock fields differ between runs by nature; everything else must match.
const std::set<std::string> kClockColumns{"seconds",          "sec_per_iter",    "total_sec",
                                          "mean_sec_per_iter", "sd_sec_per_iter", "mean_total_sec",
                                          "sd_total_sec"};

std::string masked(const fs::path& p, int& masked_fields) {
  const std::string ext = p.extension().string();
  const std::string text = slurp(p);
  if (ext == ".json") {
    io::json j = io::json::parse(text);
    std::function<void(io::json&)> strip = [&](io::json& x) {
      if (!x.is_object()) return;
      for (const char* key : {"timings", "run", "ess_per_second"})
        if (x.contains(key)) {
          x.erase(key);
          ++masked_fields;
        }
      for (auto& item : x.items()) strip(item.value());
    };
    strip(j);
    return j.dump();
  }
  if (ext != ".csv") return text;
  std::istringstream in(text);
  std::string line, out;
  std::vector<bool> mask;
  bool header = true;
  while (std::getline(in, line)) {
    auto fields = io::split_csv_line(line);
    if (header) {
      for (const auto& f : fields) mask.push_back(kClockColumns.count(f) > 0);
      header = false;
    } else {
      for (std::size_t i = 0; i < fields.size() && i < mask.size(); ++i)
        if (mask[i]) {
          fields[i] = "*";
          ++masked_fields;
        }
    }
    for (const auto& f : fields) out += f + ",";
    out += "\n";
  }
  return out;
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "mlndlm_acceptance_rerun";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
  };
  auto p = [&](const std::string& rel) { return (dir / rel).string(); };
  {
    std::ofstream(dir / "sim.json") << R"({"simulation": {"D": 4, "T": 120, "series_length": 60}})";
    std::ofstream(dir / "bench.json") << R"({"bench": {"D": [3, 4], "T": [40, 80], "reps": 2}})";
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"simulate", {"simulate", "--config", p("sim.json"), "--seed", "3", "--out", p("simulate")}},
  };
  bool ok = run(runs[0].second) == 0;
  const std::string counts = p("simulate/counts.csv"), meta = p("simulate/metadata.csv"),
                    model = p("simulate/model.json");
  runs.push_back({"map", {"map", "--data", counts, "--metadata", meta, "--config", model, "--out",
                          p("map")}});
  runs.push_back({"sample", {"sample", "--data", counts, "--metadata", meta, "--config", model,
                             "--samples", "200", "--seed", "4", "--out", p("sample")}});
  runs.push_back({"gibbs", {"gibbs", "--data", counts, "--metadata", meta, "--config", model,
                            "--iters", "30", "--seed", "5", "--out", p("gibbs")}});
  runs.push_back({"bench", {"bench", "--config", p("bench.json"), "--out", p("bench")}});
  std::string codes = "simulate=" + std::to_string(ok ? 0 : 1);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const int code = run(runs[i].second);
    ok = ok && code == 0;
    codes += " " + runs[i].first + "=" + std::to_string(code);
  }
  if (!ok) {
    fs::remove_all(dir);
    return {false, "initial runs failed: " + codes};
  }

  int files = 0, masked_fields = 0;
  std::string mismatch;
  for (const auto& [name, args] : runs) {
    for (int threads : {1, 3}) {
      const std::string out = p(name + "_rerun_" + std::to_string(threads));
      const int code = run({"rerun", "--manifest", p(name + "/manifest.json"), "--out", out, "--threads",
                            std::to_string(threads)});
      if (code != 0) {
        ok = false;
        mismatch += " rerun(" + name + ")=" + std::to_string(code);
        continue;
      }
      for (const auto& entry : fs::directory_iterator(dir / name)) {
        const fs::path other = fs::path(out) / entry.path().filename();
        int a = 0, b = 0;
        if (!fs::exists(other) || masked(entry.path(), a) != masked(other, b)) {
          ok = false;
          mismatch += " " + name + "/" + entry.path().filename().string();
        }
        ++files;
        masked_fields += a;
      }
    }
  }
  fs::remove_all(dir);
  return {ok, std::to_string(files) + " file comparisons over 5 commands at --threads 1 and 3, " +
                  std::to_string(masked_fields) + " wall-clock fields masked" +
                  (mismatch.empty() ? "" : "; mismatches:" + mismatch)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"1 gradient correctness", gradient_correctness},
      {"2 density oracle", density_oracle},
      {"3 smoother correctness", smoother_correctness},
      {"4 conjugate Gibbs oracle", gibbs_oracle},
      {"5 MAP fixed point", map_fixed_point},
      {"6 calibration, scaling, ESS", calibration},
      {"7 multi-series and missing-data invariants", multi_series_invariants},
      {"8 debiasing direction", debiasing_direction},
      {"9 end-to-end reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << " ["
              << fmt("%.1f", sec) << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

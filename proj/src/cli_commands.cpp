#include "mlndlm/cli_commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "mlndlm/compositional.hpp"
#include "mlndlm/dmdb.hpp"
#include "mlndlm/errors.hpp"
#include "mlndlm/ess.hpp"
#include "mlndlm/gibbs.hpp"
#include "mlndlm/io.hpp"
#include "mlndlm/objective.hpp"
#include "mlndlm/optimizer.hpp"
#include "mlndlm/pipeline.hpp"
#include "mlndlm/simulator.hpp"

namespace mlndlm::cli {

namespace {

using io::json;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

// Options shared by the commands. Paths are stored absolute so a manifest can
// replay the run from any working directory.
struct Options {
  std::string command;
  std::string data, metadata, config, init, manifest, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples, iters, burn_in;
  std::optional<double> alpha;
  bool force = false;
  bool zero_total_missing = false;
  bool point_mode = false;
  int threads = 1;
};

std::string absolute(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

// The replayable part of the command line.
json replay_args(const Options& o) {
  json a = json::object();
  if (!o.data.empty()) a["data"] = absolute(o.data);
  if (!o.metadata.empty()) a["metadata"] = absolute(o.metadata);
  if (!o.config.empty()) a["config"] = absolute(o.config);
  if (!o.init.empty()) a["init"] = absolute(o.init);
  if (o.seed) a["seed"] = *o.seed;
  if (o.samples) a["samples"] = *o.samples;
  if (o.iters) a["iters"] = *o.iters;
  if (o.burn_in) a["burn_in"] = *o.burn_in;
  if (o.alpha) a["alpha"] = *o.alpha;
  if (o.zero_total_missing) a["zero_total_missing"] = true;
  if (o.point_mode) a["point_mode"] = true;
  return a;
}

json input_hashes(const Options& o) {
  json h = json::object();
  for (const std::string* p : {&o.data, &o.metadata, &o.config, &o.init})
    if (!p->empty()) h[absolute(*p)] = io::sha256_file(*p);
  return h;
}

struct Manifest {
  json j;
  explicit Manifest(const Options& o) {
    j["command"] = o.command;
    j["version"] = kVersion;
    j["seed"] = nullptr;
    j["args"] = replay_args(o);
    j["input_sha256"] = input_hashes(o);
    j["run"] = {{"out_dir", absolute(o.out)}, {"threads", o.threads}};
    j["timings"] = json::object();
    j["diagnostics"] = json::object();
  }
  void write(const fs::path& dir) const { io::write_json(dir / "manifest.json", j); }
};

json config_or_empty(const Options& o) {
  if (o.config.empty()) return json::object();
  json c = io::read_json(o.config);
  if (!c.is_object()) throw ValidationError(o.config + ": top level must be an object");
  return c;
}

void check_sections(const json& cfg, std::initializer_list<const char*> allowed) {
  ValidationReport r;
  for (const auto& item : cfg.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) r.push_back({item.key(), "unknown config section"});
  }
  throw_if_invalid(r);
}

json section(const json& cfg, const char* name) {
  return cfg.contains(name) ? cfg[name] : json::object();
}

std::vector<std::string> time_labels(const std::vector<std::int64_t>& idx) {
  std::vector<std::string> out;
  for (auto t : idx) out.push_back(std::to_string(t));
  return out;
}

std::vector<std::string> one_based(Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

struct Problem {
  io::LoadedData loaded;
  ModelSpec spec;
  OptimizerConfig optimizer;
  json cfg;
};

Problem load_problem(const Options& o, std::initializer_list<const char*> sections) {
  if (o.data.empty()) throw ValidationError("--data is required");
  Problem p;
  p.cfg = config_or_empty(o);
  check_sections(p.cfg, sections);
  p.loaded = io::load_dataset(o.data, o.metadata, o.zero_total_missing);
  const CountDataset& d = p.loaded.data;
  ValidationReport r;
  json model = p.cfg.contains("model") ? p.cfg["model"] : json{{"builtin", "random_walk"}};
  p.spec = io::model_from_json(model, d.D(), d.T(), r);
  p.optimizer = io::optimizer_from_json(section(p.cfg, "optimizer"), r);
  throw_if_invalid(r);
  throw_if_invalid(validate(p.spec, d));
  if (!o.init.empty()) p.optimizer.init_mode = InitMode::user_supplied;
  return p;
}

std::optional<Eigen::MatrixXd> load_init(const Options& o) {
  if (o.init.empty()) return std::nullopt;
  return io::read_labelled_matrix(o.init);
}

json optimizer_diagnostics(const OptimizationResult& r, const ModelSpec& spec,
                           const CountDataset& data) {
  // Fresh evaluation at the returned point.
  CollapsedObjective obj(spec, data);
  Eigen::VectorXd g;
  const double f = obj(obj.flatten(r.eta_hat), g);
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"stop_reason", r.stop_reason},
          {"objective", f},
          {"grad_sup_norm", g.lpNorm<Eigen::Infinity>()}};
}

void write_eta(const fs::path& path, const Eigen::MatrixXd& eta,
               const std::vector<std::int64_t>& time_index) {
  io::write_labelled_matrix(path, "dim", one_based(eta.rows()), time_labels(time_index), eta);
}

// Long summary: <keys...>,mean,lower,upper.
class SummaryWriter {
 public:
  SummaryWriter(const fs::path& path, const std::string& key_header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    out_ << key_header << ",mean,lower,upper\n";
  }
  void row(const std::string& keys, double mean, double lower, double upper) {
    out_ << keys << ',' << io::format_double(mean) << ',' << io::format_double(lower) << ','
         << io::format_double(upper) << '\n';
  }
  ~SummaryWriter() = default;
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_eta_summary(const fs::path& path, const std::vector<Eigen::MatrixXd>& draws,
                       const std::vector<std::int64_t>& time_index) {
  const CellSummary s = summarize(draws);
  SummaryWriter w(path, "t,dim");
  for (Index t = 0; t < s.mean.cols(); ++t)
    for (Index i = 0; i < s.mean.rows(); ++i)
      w.row(std::to_string(time_index[t]) + "," + std::to_string(i + 1), s.mean(i, t),
            s.lower(i, t), s.upper(i, t));
  w.close();
}

void write_theta_summary(const fs::path& path, const std::vector<StateDraw>& states,
                         const std::vector<std::int64_t>& time_index) {
  SummaryWriter w(path, "t,q,dim");
  const auto T = static_cast<Index>(time_index.size());
  std::vector<Eigen::MatrixXd> cell(states.size());
  for (Index t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < states.size(); ++s) cell[s] = alr_to_clr_rows(states[s].theta[t]);
    const CellSummary sum = summarize(cell);
    for (Index q = 0; q < sum.mean.rows(); ++q)
      for (Index i = 0; i < sum.mean.cols(); ++i)
        w.row(std::to_string(time_index[t]) + "," + std::to_string(q + 1) + "," +
                  std::to_string(i + 1),
              sum.mean(q, i), sum.lower(q, i), sum.upper(q, i));
  }
  w.close();
}

void write_sigma_summary(const fs::path& path, const std::vector<StateDraw>& states) {
  std::vector<Eigen::MatrixXd> sig;
  for (const auto& s : states) sig.push_back(s.Sigma);
  const CellSummary sum = summarize(sig);
  SummaryWriter w(path, "i,j");
  for (Index i = 0; i < sum.mean.rows(); ++i)
    for (Index j = 0; j < sum.mean.cols(); ++j)
      w.row(std::to_string(i + 1) + "," + std::to_string(j + 1), sum.mean(i, j), sum.lower(i, j),
            sum.upper(i, j));
  w.close();
}

void write_draws_long(const fs::path& path, const std::vector<Eigen::MatrixXd>& draws,
                      const std::vector<std::int64_t>& time_index) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "draw,t,dim,value\n";
  for (std::size_t s = 0; s < draws.size(); ++s)
    for (Index t = 0; t < draws[s].cols(); ++t)
      for (Index i = 0; i < draws[s].rows(); ++i)
        out << s + 1 << ',' << time_index[t] << ',' << i + 1 << ','
            << io::format_double(draws[s](i, t)) << '\n';
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

// ------------------------------------------------------------------ commands

int cmd_simulate(const Options& o, std::ostream& out) {
  json cfg = config_or_empty(o);
  check_sections(cfg, {"simulation"});
  ValidationReport r;
  SimConfig sc = io::simulation_from_json(section(cfg, "simulation"), r);
  throw_if_invalid(r);
  if (o.seed) sc.seed = *o.seed;
  throw_if_invalid(validate(sc));
  const fs::path dir = o.out;
  io::prepare_output_dir(dir, o.force);
  Manifest m(o);
  const auto t0 = clock_type::now();
  const Simulation sim = simulate(sc);
  m.j["timings"]["simulate_seconds"] = seconds_since(t0);

  std::vector<std::int64_t> idx(static_cast<std::size_t>(sc.T_total));
  for (std::size_t t = 0; t < idx.size(); ++t) idx[t] = static_cast<std::int64_t>(t) + 1;
  io::write_counts(dir / "counts.csv", sim.data, idx);
  io::write_metadata(dir / "metadata.csv", sim.data.layout, idx);
  // A config that fits the generating model directly.
  io::write_json(dir / "model.json", {{"model", io::model_to_json(sim.truth.spec)}});
  write_eta(dir / "truth_eta.csv", sim.truth.eta, idx);
  Eigen::MatrixXd theta(sim.truth.theta.empty() ? 0 : sim.truth.theta[0].cols(), sc.T_total);
  for (Index t = 0; t < sc.T_total; ++t) theta.col(t) = sim.truth.theta[t].row(0).transpose();
  write_eta(dir / "truth_theta.csv", theta, idx);
  io::write_labelled_matrix(dir / "truth_sigma.csv", "dim", one_based(sim.truth.Sigma.rows()),
                            one_based(sim.truth.Sigma.cols()), sim.truth.Sigma);
  io::write_labelled_matrix(dir / "truth_pi.csv", "category", one_based(sim.truth.pi.rows()),
                            time_labels(idx), sim.truth.pi);

  m.j["seed"] = sc.seed;
  m.j["diagnostics"] = {{"D", sc.D},
                        {"T", sc.T_total},
                        {"series", sim.data.layout.K()},
                        {"observed", sim.data.layout.num_observed()},
                        {"sparsity", sparsity_report(sim.data)}};
  m.write(dir);
  out << "simulated D=" << sc.D << " T=" << sc.T_total << " into " << dir.string() << '\n';
  return kOk;
}

int cmd_map(const Options& o, std::ostream& out) {
  Problem p = load_problem(o, {"model", "optimizer"});
  const CountDataset& d = p.loaded.data;
  const auto init = load_init(o);
  const fs::path dir = o.out;
  io::prepare_output_dir(dir, o.force);
  Manifest m(o);
  const auto t0 = clock_type::now();
  const OptimizationResult r = map_estimate(p.spec, d, p.optimizer, init ? &*init : nullptr);
  m.j["timings"]["optimize_seconds"] = seconds_since(t0);
  write_eta(dir / "eta_hat.csv", r.eta_hat, p.loaded.time_index);
  io::write_trajectory(dir / "trajectory.csv", r.trajectory);
  m.j["diagnostics"]["optimizer"] = optimizer_diagnostics(r, p.spec, d);
  m.write(dir);
  out << "map: " << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations
      << " iterations (" << r.stop_reason << ")\n";
  return r.converged ? kOk : kNumerical;
}

int cmd_sample(const Options& o, std::ostream& out) {
  Problem p = load_problem(o, {"model", "optimizer", "dmdb"});
  const CountDataset& d = p.loaded.data;
  ValidationReport r;
  PipelineConfig pc;
  pc.optimizer = p.optimizer;
  pc.dmdb = io::dmdb_from_json(section(p.cfg, "dmdb"), r);
  throw_if_invalid(r);
  if (o.samples) pc.dmdb.num_samples = *o.samples;
  if (o.alpha) pc.dmdb.alpha = Eigen::VectorXd::Constant(1, *o.alpha);
  if (o.seed) pc.dmdb.seed = *o.seed;
  pc.threads = o.threads;
  throw_if_invalid(validate(pc.dmdb, d.D()));
  const auto init = load_init(o);
  const fs::path dir = o.out;
  io::prepare_output_dir(dir, o.force);
  Manifest m(o);
  m.j["seed"] = pc.dmdb.seed;

  const PipelineResult res = cu_pipeline(p.spec, d, pc, init ? &*init : nullptr);
  const auto& idx = p.loaded.time_index;
  const auto t0 = clock_type::now();
  write_eta(dir / "eta_hat.csv", res.map.eta_hat, idx);
  io::write_trajectory(dir / "trajectory.csv", res.map.trajectory);
  write_draws_long(dir / "draws.csv", res.draws.eta, idx);
  io::write_draws_binary(dir / "draws.bin", res.draws.eta);
  write_eta_summary(dir / "summary_clr.csv", res.draws.eta_clr(), idx);
  write_eta_summary(dir / "summary_alr.csv", res.draws.eta, idx);
  write_theta_summary(dir / "theta_summary_clr.csv", res.draws.states, idx);
  write_sigma_summary(dir / "sigma_summary.csv", res.draws.states);

  m.j["timings"] = {{"optimize_seconds", res.timings.optimize_seconds},
                    {"bootstrap_seconds", res.timings.bootstrap_seconds},
                    {"uncollapse_seconds", res.timings.uncollapse_seconds},
                    {"write_seconds", seconds_since(t0)}};
  m.j["diagnostics"]["optimizer"] = optimizer_diagnostics(res.map, p.spec, d);
  json filled = json::array();
  for (Index t = 0; t < d.T(); ++t)
    if (res.eta_filled[t]) filled.push_back(idx[t]);
  m.j["diagnostics"]["num_samples"] = pc.dmdb.num_samples;
  m.j["diagnostics"]["alpha"] = io::vector_to_json(pc.dmdb.alpha);
  m.j["diagnostics"]["eta_filled_from_forecast"] = filled;
  m.write(dir);
  out << "sample: " << pc.dmdb.num_samples << " draws; map "
      << (res.map.converged ? "converged" : "NOT converged") << '\n';
  return res.map.converged ? kOk : kNumerical;
}

int cmd_gibbs(const Options& o, std::ostream& out) {
  Problem p = load_problem(o, {"model", "optimizer", "hyperprior", "gibbs"});
  const CountDataset& d = p.loaded.data;
  ValidationReport r;
  HyperPrior prior = io::hyperprior_from_json(section(p.cfg, "hyperprior"), p.spec.Q(), r);
  GibbsConfig gc;
  gc.optimizer = p.optimizer;
  int burn_in = -1;
  const json g = section(p.cfg, "gibbs");
  if (!g.is_object()) {
    r.push_back({"gibbs", "must be an object"});
  } else {
    for (const auto& item : g.items()) {
      const std::string& k = item.key();
      try {
        if (k == "iterations") gc.iterations = item.value().get<int>();
        else if (k == "burn_in") burn_in = item.value().get<int>();
        else if (k == "point_mode") gc.point_mode = item.value().get<bool>();
        else if (k == "seed") gc.seed = item.value().get<std::uint64_t>();
        else if (k == "alpha") gc.alpha = io::vector_from_json(item.value(), "alpha");
        else r.push_back({"gibbs." + k, "unknown key"});
      } catch (const std::exception& e) {
        r.push_back({"gibbs." + k, e.what()});
      }
    }
  }
  throw_if_invalid(r);
  throw_if_invalid(validate(prior, p.spec.Q()));
  if (o.iters) gc.iterations = *o.iters;
  if (o.burn_in) burn_in = *o.burn_in;
  if (o.seed) gc.seed = *o.seed;
  if (o.alpha) gc.alpha = Eigen::VectorXd::Constant(1, *o.alpha);
  if (o.point_mode) gc.point_mode = true;
  if (gc.iterations < 1) throw ValidationError("iterations must be >= 1");
  if (burn_in < 0) burn_in = gc.iterations / 2;
  if (burn_in >= gc.iterations) throw ValidationError("burn_in must be < iterations");
  if (!p.spec.has_diagonal_static_W())
    throw ValidationError("model.W must be diagonal and time-invariant for Gibbs updates");

  const fs::path dir = o.out;
  io::prepare_output_dir(dir, o.force);
  Manifest m(o);
  m.j["seed"] = gc.seed;
  const auto t0 = clock_type::now();
  const GibbsChain chain = gibbs_chain(p.spec, d, prior, gc);
  const double chain_seconds = seconds_since(t0);
  m.j["timings"]["chain_seconds"] = chain_seconds;

  const Index Q = p.spec.Q();
  {
    std::ofstream w(dir / "w_chain.csv");
    if (!w) throw IoError("cannot write w_chain.csv");
    w << "iter";
    for (Index q = 0; q < Q; ++q) w << ",w_" << q + 1;
    w << ",map_iterations,seconds\n";
    for (const auto& it : chain.iterations) {
      w << it.iter + 1;
      for (Index q = 0; q < Q; ++q) w << ',' << io::format_double(it.w[q]);
      w << ',' << it.map_iterations << ',' << io::format_double(it.seconds) << '\n';
    }
    w.close();
    if (!w) throw IoError("failed writing w_chain.csv");
  }

  const int kept_from = std::min<int>(burn_in, static_cast<int>(chain.iterations.size()));
  std::vector<StateDraw> kept;
  for (std::size_t i = static_cast<std::size_t>(kept_from); i < chain.iterations.size(); ++i)
    kept.push_back(chain.iterations[i].state);
  if (!kept.empty()) {
    write_theta_summary(dir / "theta_summary_clr.csv", kept, p.loaded.time_index);
    write_sigma_summary(dir / "sigma_summary.csv", kept);
  }

  json ess = json::object();
  auto add_ess = [&](const std::string& name, const std::vector<double>& values) {
    if (values.size() < 10) {
      ess[name] = {{"error", "chain shorter than 10 after burn-in"}};
      return;
    }
    const EssResult e = effective_sample_size(values);
    ess[name] = {{"ess", e.ess},
                 {"length", values.size()},
                 {"degenerate", e.degenerate},
                 {"ess_per_second", chain_seconds > 0.0 ? e.ess / chain_seconds : 0.0}};
  };
  for (Index q = 0; q < Q; ++q) {
    std::vector<double> v;
    for (std::size_t i = static_cast<std::size_t>(kept_from); i < chain.iterations.size(); ++i)
      v.push_back(chain.iterations[i].w[q]);
    add_ess("w_" + std::to_string(q + 1), v);
  }
  for (Index i = 0; i < d.D() - 1; ++i) {
    std::vector<double> v;
    for (const auto& s : kept) v.push_back(s.Sigma(i, i));
    add_ess("Sigma_" + std::to_string(i + 1) + "_" + std::to_string(i + 1), v);
  }
  io::write_json(dir / "ess.json", ess);

  m.j["diagnostics"] = {{"iterations_completed", chain.iterations.size()},
                        {"iterations_requested", gc.iterations},
                        {"burn_in", burn_in},
                        {"point_mode", gc.point_mode},
                        {"complete", chain.complete}};
  if (!chain.complete) m.j["diagnostics"]["failure"] = chain.failure;
  m.write(dir);
  out << "gibbs: " << chain.iterations.size() << "/" << gc.iterations << " iterations\n";
  return chain.complete ? kOk : kNumerical;
}

int cmd_bench(const Options& o, std::ostream& out) {
  json cfg = config_or_empty(o);
  check_sections(cfg, {"bench", "optimizer"});
  ValidationReport r;
  OptimizerConfig oc = io::optimizer_from_json(section(cfg, "optimizer"), r);
  std::vector<int> Ds = {3, 10, 30}, Ts = {100, 300, 600};
  int reps = 10;
  SimConfig base;
  const json b = section(cfg, "bench");
  if (!b.is_object()) {
    r.push_back({"bench", "must be an object"});
  } else {
    for (const auto& item : b.items()) {
      const std::string& k = item.key();
      try {
        if (k == "D") Ds = item.value().get<std::vector<int>>();
        else if (k == "T") Ts = item.value().get<std::vector<int>>();
        else if (k == "reps") reps = item.value().get<int>();
        else if (k == "seed") base.seed = item.value().get<std::uint64_t>();
        else if (k == "total_count") base.total_count = item.value().get<double>();
        else if (k == "missing_fraction") base.missing_fraction = item.value().get<double>();
        else if (k == "series_length") base.series_length = item.value().get<Index>();
        else r.push_back({"bench." + k, "unknown key"});
      } catch (const std::exception& e) {
        r.push_back({"bench." + k, e.what()});
      }
    }
  }
  if (reps < 1) r.push_back({"bench.reps", "must be >= 1"});
  if (Ds.empty() || Ts.empty()) r.push_back({"bench", "D and T grids must be nonempty"});
  throw_if_invalid(r);
  if (o.seed) base.seed = *o.seed;

  const fs::path dir = o.out;
  io::prepare_output_dir(dir, o.force);
  Manifest m(o);
  m.j["seed"] = base.seed;
  std::ofstream runs(dir / "bench_runs.csv");
  if (!runs) throw IoError("cannot write bench_runs.csv");
  runs << "D,T,rep,iters,sec_per_iter,total_sec\n";
  json failures = json::array();
  struct Acc { std::vector<double> iters, spi, total; };
  std::map<std::pair<int, int>, Acc> acc;
  const auto t_all = clock_type::now();
  std::uint64_t cell = 0;
  for (int D : Ds) {
    for (int T : Ts) {
      for (int rep = 0; rep < reps; ++rep, ++cell) {
        try {
          SimConfig sc = base;
          sc.D = D;
          sc.T_total = T;
          sc.seed = derive_seed(base.seed, cell);
          const Simulation sim = simulate(sc);
          const auto t0 = clock_type::now();
          const OptimizationResult res = map_estimate(sim.truth.spec, sim.data, oc);
          const double total = seconds_since(t0);
          const double spi = total / std::max(1, res.iterations);
          runs << D << ',' << T << ',' << rep + 1 << ',' << res.iterations << ','
               << io::format_double(spi) << ',' << io::format_double(total) << '\n';
          auto& a = acc[{D, T}];
          a.iters.push_back(res.iterations);
          a.spi.push_back(spi);
          a.total.push_back(total);
          if (!res.converged)
            failures.push_back({{"D", D}, {"T", T}, {"rep", rep + 1}, {"error", res.stop_reason}});
        } catch (const std::exception& e) {
          failures.push_back({{"D", D}, {"T", T}, {"rep", rep + 1}, {"error", e.what()}});
        }
      }
    }
  }
  runs.close();
  if (!runs) throw IoError("failed writing bench_runs.csv");

  std::ofstream sum(dir / "bench_summary.csv");
  if (!sum) throw IoError("cannot write bench_summary.csv");
  sum << "D,T,runs,mean_iters,sd_iters,mean_sec_per_iter,sd_sec_per_iter,mean_total_sec,sd_total_sec\n";
  auto mean_sd = [](const std::vector<double>& v) {
    double mu = 0.0, ss = 0.0;
    for (double x : v) mu += x;
    mu /= static_cast<double>(v.size());
    for (double x : v) ss += (x - mu) * (x - mu);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mu, sd};
  };
  for (const auto& [key, a] : acc) {
    const auto [mi, si] = mean_sd(a.iters);
    const auto [ms, ss] = mean_sd(a.spi);
    const auto [mt, st] = mean_sd(a.total);
    sum << key.first << ',' << key.second << ',' << a.iters.size() << ',' << io::format_double(mi)
        << ',' << io::format_double(si) << ',' << io::format_double(ms) << ','
        << io::format_double(ss) << ',' << io::format_double(mt) << ',' << io::format_double(st)
        << '\n';
  }
  sum.close();
  if (!sum) throw IoError("failed writing bench_summary.csv");
  m.j["timings"]["sweep_seconds"] = seconds_since(t_all);
  m.j["diagnostics"] = {{"failures", failures}, {"reps", reps}};
  m.write(dir);
  out << "bench: " << cell << " runs, " << failures.size() << " failures\n";
  return kOk;
}

int dispatch(const Options& o, std::ostream& out);

int cmd_rerun(const Options& o, std::ostream& out) {
  if (o.manifest.empty()) throw ValidationError("--manifest is required");
  const json m = io::read_json(o.manifest);
  if (!m.contains("command") || !m.contains("args") || !m.contains("input_sha256"))
    throw ValidationError(o.manifest + ": not a run manifest");
  for (const auto& item : m["input_sha256"].items()) {
    const std::string now = io::sha256_file(item.key());
    if (now != item.value().get<std::string>())
      throw ValidationError("input " + item.key() + " changed since the manifest was written");
  }
  Options r;
  r.command = m["command"].get<std::string>();
  if (r.command == "rerun") throw ValidationError("a rerun manifest cannot be replayed");
  const json& a = m["args"];
  auto str = [&](const char* k) { return a.contains(k) ? a[k].get<std::string>() : std::string(); };
  r.data = str("data");
  r.metadata = str("metadata");
  r.config = str("config");
  r.init = str("init");
  if (a.contains("seed")) r.seed = a["seed"].get<std::uint64_t>();
  if (a.contains("samples")) r.samples = a["samples"].get<int>();
  if (a.contains("iters")) r.iters = a["iters"].get<int>();
  if (a.contains("burn_in")) r.burn_in = a["burn_in"].get<int>();
  if (a.contains("alpha")) r.alpha = a["alpha"].get<double>();
  r.zero_total_missing = a.value("zero_total_missing", false);
  r.point_mode = a.value("point_mode", false);
  r.out = o.out;
  r.force = o.force;
  r.threads = o.threads;
  return dispatch(r, out);
}

int dispatch(const Options& o, std::ostream& out) {
  if (o.threads < 1) throw ValidationError("--threads must be >= 1");
  if (o.command == "simulate") return cmd_simulate(o, out);
  if (o.command == "map") return cmd_map(o, out);
  if (o.command == "sample") return cmd_sample(o, out);
  if (o.command == "gibbs") return cmd_gibbs(o, out);
  if (o.command == "bench") return cmd_bench(o, out);
  if (o.command == "rerun") return cmd_rerun(o, out);
  throw ValidationError("unknown command " + o.command);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multinomial logistic-normal dynamic linear models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c, bool needs_data) {
    c->add_option("--out", o.out, "output directory")->required();
    c->add_flag("--force", o.force, "overwrite a non-empty output directory");
    c->add_option("--threads", o.threads, "worker threads (output does not depend on it)");
    c->add_option("--config", o.config, "JSON config file");
    if (needs_data) {
      c->add_option("--data", o.data, "counts CSV")->required();
      c->add_option("--metadata", o.metadata, "metadata CSV (time_index, series_id, observed)")
          ;
      c->add_flag("--zero-total-missing", o.zero_total_missing,
                  "treat observed columns with zero total count as missing");
      c->add_option("--init", o.init, "initial eta CSV, (D-1) x T");
    }
  };
  auto* sim = app.add_subcommand("simulate", "simulate a dataset");
  common(sim, false);
  sim->add_option("--seed", o.seed, "seed (overrides the config)");

  auto* map = app.add_subcommand("map", "MAP estimate of eta");
  common(map, true);

  auto* sample = app.add_subcommand("sample", "posterior draws of (eta, Theta, Sigma)");
  common(sample, true);
  sample->add_option("--seed", o.seed, "seed (overrides the config)");
  sample->add_option("--samples", o.samples, "number of draws");
  sample->add_option("--alpha", o.alpha, "Dirichlet pseudocount");

  auto* gibbs = app.add_subcommand("gibbs", "Gibbs sampler for the state variances");
  common(gibbs, true);
  gibbs->add_option("--seed", o.seed, "seed (overrides the config)");
  gibbs->add_option("--iters", o.iters, "chain length");
  gibbs->add_option("--burn-in", o.burn_in, "iterations dropped from summaries (default half)");
  gibbs->add_option("--alpha", o.alpha, "Dirichlet pseudocount");
  gibbs->add_flag("--point-mode", o.point_mode, "uncollapse at the MAP instead of a bootstrap draw");

  auto* bench = app.add_subcommand("bench", "timing sweep over (D, T)");
  common(bench, false);
  bench->add_option("--seed", o.seed, "seed (overrides the config)");

  auto* rerun = app.add_subcommand("rerun", "replay a run from its manifest");
  rerun->add_option("--manifest", o.manifest, "manifest.json of the run")->required();
  rerun->add_option("--out", o.out, "output directory")->required();
  rerun->add_flag("--force", o.force, "overwrite a non-empty output directory");
  rerun->add_option("--threads", o.threads, "worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    return dispatch(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace mlndlm::cli

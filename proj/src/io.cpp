#include "mlndlm/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "mlndlm/errors.hpp"

namespace mlndlm::io {

std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool is_na(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN"; }

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + s + "' is not a number");
  }
  if (used != s.size()) throw ValidationError(where + ": '" + s + "' is not a number");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + s + "' is not an integer");
  }
  if (used != s.size()) throw ValidationError(where + ": '" + s + "' is not an integer");
  return v;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void close_checked(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

// ---------------------------------------------------------------- CSV

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw ValidationError(path.string() + ": empty file");
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (table.rows[r].size() != table.header.size())
      throw ValidationError(path.string() + ": row " + std::to_string(r + 2) + " has " +
                            std::to_string(table.rows[r].size()) + " fields, header has " +
                            std::to_string(table.header.size()));
  return table;
}

CountsFile read_counts(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::string where = path.string();
  if (table.header.size() < 2) throw ValidationError(where + ": no time columns");
  const std::size_t T = table.header.size() - 1;
  const std::size_t D = table.rows.size();
  if (D < 2) throw ValidationError(where + ": need at least 2 categories");

  CountsFile f;
  for (std::size_t j = 0; j < T; ++j)
    f.time_index.push_back(parse_int(table.header[j + 1], where + " header"));
  f.Y = Eigen::MatrixXd::Zero(static_cast<Index>(D), static_cast<Index>(T));
  f.present.assign(T, true);
  std::vector<int> na_count(T, 0);
  for (std::size_t i = 0; i < D; ++i) {
    f.categories.push_back(table.rows[i][0]);
    for (std::size_t j = 0; j < T; ++j) {
      const std::string& cell = table.rows[i][j + 1];
      if (is_na(cell)) {
        ++na_count[j];
        continue;
      }
      f.Y(static_cast<Index>(i), static_cast<Index>(j)) =
          parse_double(cell, where + " row " + std::to_string(i + 2));
    }
  }
  for (std::size_t j = 0; j < T; ++j) {
    if (na_count[j] == 0) continue;
    if (na_count[j] != static_cast<int>(D))
      throw ValidationError(where + ": time column " + table.header[j + 1] +
                            " is partially missing");
    f.present[j] = false;
  }
  return f;
}

void write_counts(const fs::path& path, const CountDataset& data,
                  const std::vector<std::int64_t>& time_index) {
  auto out = open_out(path);
  out << "category";
  for (auto t : time_index) out << ',' << t;
  out << '\n';
  for (Index d = 0; d < data.D(); ++d) {
    out << d + 1;
    for (Index t = 0; t < data.T(); ++t) {
      out << ',';
      if (data.observed(t)) out << format_double(data.Y(d, t));
      else out << "NA";
    }
    out << '\n';
  }
  close_checked(out, path);
}

std::vector<MetadataRow> read_metadata(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const std::string where = path.string();
  auto col = [&](const std::string& name) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ValidationError(where + ": missing column " + name);
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t ct = col("time_index"), cs = col("series_id"), co = col("observed");
  std::vector<MetadataRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string at = where + " row " + std::to_string(r + 2);
    MetadataRow m;
    m.time_index = parse_int(row[ct], at);
    m.series_id = row[cs];
    const std::string& o = row[co];
    if (o == "1" || o == "true" || o == "TRUE") m.observed = true;
    else if (o == "0" || o == "false" || o == "FALSE") m.observed = false;
    else throw ValidationError(at + ": observed must be 0/1 or true/false");
    rows.push_back(std::move(m));
  }
  return rows;
}

void write_metadata(const fs::path& path, const SeriesLayout& layout,
                    const std::vector<std::int64_t>& time_index) {
  auto out = open_out(path);
  out << "time_index,series_id,observed\n";
  for (Index k = 0; k < layout.K(); ++k) {
    const Index start = layout.series_start(k);
    for (Index t = start; t < start + layout.series_lengths[k]; ++t)
      out << time_index[t] << ',' << k + 1 << ',' << (layout.observed[t] ? 1 : 0) << '\n';
  }
  close_checked(out, path);
}

LoadedData load_dataset(const fs::path& counts, const fs::path& metadata,
                        bool zero_total_missing) {
  CountsFile cf = read_counts(counts);
  const auto T = static_cast<Index>(cf.time_index.size());
  LoadedData out;
  out.time_index = cf.time_index;
  out.categories = cf.categories;
  CountDataset& data = out.data;
  data.Y = std::move(cf.Y);
  data.layout.observed = cf.present;

  if (metadata.empty()) {
    data.layout.series_lengths = {T};
  } else {
    const auto meta = read_metadata(metadata);
    if (static_cast<Index>(meta.size()) != T)
      throw ValidationError(metadata.string() + ": " + std::to_string(meta.size()) +
                            " rows but the counts file has " + std::to_string(T) + " time columns");
    std::set<std::string> finished;
    for (Index t = 0; t < T; ++t) {
      if (meta[t].time_index != out.time_index[t])
        throw ValidationError(metadata.string() + ": time_index " +
                              std::to_string(meta[t].time_index) + " does not match counts column " +
                              std::to_string(out.time_index[t]));
      if (t == 0 || meta[t].series_id != meta[t - 1].series_id) {
        if (t > 0) finished.insert(meta[t - 1].series_id);
        if (finished.count(meta[t].series_id))
          throw ValidationError(metadata.string() + ": series " + meta[t].series_id +
                                " is not contiguous");
        data.layout.series_lengths.push_back(0);
      }
      ++data.layout.series_lengths.back();
      if (!meta[t].observed) data.layout.observed[t] = false;
    }
  }
  for (Index t = 0; t < T; ++t) {
    if (!data.layout.observed[t]) data.Y.col(t).setZero();
    else if (zero_total_missing && data.total(t) == 0.0) data.layout.observed[t] = false;
  }
  return out;
}

void write_labelled_matrix(const fs::path& path, const std::string& row_label,
                           const std::vector<std::string>& row_names,
                           const std::vector<std::string>& col_names, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  out << row_label;
  for (const auto& c : col_names) out << ',' << c;
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << row_names[i];
    for (Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
  close_checked(out, path);
}

Eigen::MatrixXd read_labelled_matrix(const fs::path& path) {
  const CsvTable table = read_csv(path);
  Eigen::MatrixXd m(static_cast<Index>(table.rows.size()),
                    static_cast<Index>(table.header.size()) - 1);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = parse_double(table.rows[i][j + 1], path.string());
  return m;
}

void write_trajectory(const fs::path& path, const std::vector<IterationRecord>& trajectory) {
  auto out = open_out(path);
  out << "iter,objective,grad_norm,seconds\n";
  for (const auto& r : trajectory)
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.seconds) << '\n';
  close_checked(out, path);
}

// ---------------------------------------------------------------- draws cache

namespace {
constexpr char kDrawsMagic[8] = {'M', 'L', 'N', 'D', 'R', 'W', '0', '1'};
}

void write_draws_binary(const fs::path& path, const std::vector<Eigen::MatrixXd>& draws) {
  auto out = open_out(path, std::ios::binary);
  const std::int64_t dims[3] = {static_cast<std::int64_t>(draws.size()),
                                draws.empty() ? 0 : static_cast<std::int64_t>(draws[0].rows()),
                                draws.empty() ? 0 : static_cast<std::int64_t>(draws[0].cols())};
  out.write(kDrawsMagic, sizeof kDrawsMagic);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (const auto& d : draws) {
    if (d.rows() != dims[1] || d.cols() != dims[2])
      throw ValidationError("draws passed to the binary cache differ in shape");
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(sizeof(double) * d.size()));
  }
  close_checked(out, path);
}

std::vector<Eigen::MatrixXd> read_draws_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::int64_t dims[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kDrawsMagic, sizeof magic) != 0 || dims[0] < 0 || dims[1] < 0 ||
      dims[2] < 0)
    throw IoError(path.string() + ": not a draws cache");
  std::vector<Eigen::MatrixXd> draws(static_cast<std::size_t>(dims[0]),
                                     Eigen::MatrixXd(dims[1], dims[2]));
  for (auto& d : draws)
    in.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(sizeof(double) * d.size()));
  if (!in) throw IoError(path.string() + ": truncated draws cache");
  return draws;
}

// ---------------------------------------------------------------- JSON

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  close_checked(out, path);
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ValidationError(field + ": expected a nested array");
  if (j[0].is_number()) {
    // A flat array is a column.
    Eigen::VectorXd v = vector_from_json(j, field);
    return v;
  }
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ValidationError(field + ": ragged matrix");
    for (Index c = 0; c < cols; ++c) {
      const json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw ValidationError(field + ": non-numeric entry");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ValidationError(field + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(field + ": non-numeric entry");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

namespace {

// Field readers that record problems instead of throwing, so one pass over a
// config reports every issue.
template <class F>
void guarded(ValidationReport& report, const std::string& field, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    report.push_back({field, e.what()});
  } catch (const json::exception& e) {
    report.push_back({field, e.what()});
  }
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed,
                ValidationReport& report) {
  if (!j.is_object()) {
    report.push_back({section, "must be an object"});
    return;
  }
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) report.push_back({section + "." + item.key(), "unknown key"});
  }
}

double number(const json& j) {
  if (!j.is_number()) throw ValidationError("expected a number");
  return j.get<double>();
}

int integer(const json& j) {
  if (!j.is_number_integer()) throw ValidationError("expected an integer");
  return j.get<int>();
}

// F, G, W accept either one value for all time points or a list of length T.
template <class Parse>
void time_varying(const json& j, const std::string& field, int depth, Index T, Parse parse,
                  ValidationReport& report) {
  auto nesting = [](const json& x) {
    int d = 0;
    const json* cur = &x;
    while (cur->is_array() && !cur->empty()) {
      ++d;
      cur = &(*cur)[0];
    }
    return d;
  };
  const int d = nesting(j);
  if (d <= depth) {
    parse(j, field);
  } else if (d == depth + 1) {
    if (static_cast<Index>(j.size()) != T)
      throw ValidationError("time-varying list has " + std::to_string(j.size()) +
                            " entries, expected T = " + std::to_string(T));
    for (std::size_t t = 0; t < j.size(); ++t) parse(j[t], field + "[" + std::to_string(t) + "]");
  } else {
    report.push_back({field, "too deeply nested"});
  }
}

}  // namespace

ModelSpec model_from_json(const json& j, Index D, Index T, ValidationReport& report) {
  check_keys(j, "model",
             {"builtin", "w", "w_theta", "w_alpha", "damping", "D", "F", "G", "W", "gamma", "M0",
              "C0", "Xi0", "nu0"},
             report);
  ModelSpec spec;
  if (!j.is_object()) return spec;
  if (j.contains("D"))
    guarded(report, "model.D", [&] {
      if (integer(j["D"]) != D)
        throw ValidationError("config says D = " + std::to_string(integer(j["D"])) +
                              " but the data has D = " + std::to_string(D));
    });

  Index Q = 1;
  if (j.contains("builtin")) {
    guarded(report, "model.builtin", [&] {
      const std::string kind = j["builtin"].get<std::string>();
      if (kind == "random_walk") {
        spec = builtin_random_walk(D, T, j.contains("w") ? number(j["w"]) : 0.45);
      } else if (kind == "local_trend") {
        spec = builtin_local_trend(D, T, j.contains("w_theta") ? number(j["w_theta"]) : 0.45,
                                   j.contains("w_alpha") ? number(j["w_alpha"]) : 0.1,
                                   j.contains("damping") ? number(j["damping"]) : 1.0);
      } else {
        throw ValidationError("unknown builtin '" + kind + "' (random_walk, local_trend)");
      }
    });
    Q = spec.Q() > 0 ? spec.Q() : 1;
  } else {
    if (!j.contains("W")) report.push_back({"model.W", "required unless a builtin is used"});
    if (j.contains("C0")) {
      guarded(report, "model.C0", [&] { Q = matrix_from_json(j["C0"], "C0").rows(); });
    } else if (j.contains("M0")) {
      guarded(report, "model.M0", [&] { Q = matrix_from_json(j["M0"], "M0").rows(); });
    }
    spec.F = {Eigen::VectorXd::Ones(Q)};
    spec.G = {Eigen::MatrixXd::Identity(Q, Q)};
    spec.W = {Eigen::MatrixXd::Identity(Q, Q)};
    spec.gamma = {1.0};
    spec.M0 = Eigen::MatrixXd::Zero(Q, D - 1);
    spec.C0 = Eigen::MatrixXd::Identity(Q, Q);
    spec.Xi0 = Eigen::MatrixXd::Identity(D - 1, D - 1);
    spec.nu0 = static_cast<double>(D) + 3.0;
  }

  if (j.contains("F"))
    guarded(report, "model.F", [&] {
      spec.F.clear();
      time_varying(j["F"], "model.F", 1, T,
                   [&](const json& x, const std::string& f) { spec.F.push_back(vector_from_json(x, f)); },
                   report);
    });
  if (j.contains("G"))
    guarded(report, "model.G", [&] {
      spec.G.clear();
      time_varying(j["G"], "model.G", 2, T,
                   [&](const json& x, const std::string& f) { spec.G.push_back(matrix_from_json(x, f)); },
                   report);
    });
  if (j.contains("W"))
    guarded(report, "model.W", [&] {
      spec.W.clear();
      time_varying(j["W"], "model.W", 2, T,
                   [&](const json& x, const std::string& f) { spec.W.push_back(matrix_from_json(x, f)); },
                   report);
    });
  if (j.contains("gamma"))
    guarded(report, "model.gamma", [&] {
      const Eigen::VectorXd g = vector_from_json(j["gamma"], "gamma");
      spec.gamma.assign(g.data(), g.data() + g.size());
    });
  if (j.contains("M0"))
    guarded(report, "model.M0", [&] {
      spec.M0 = matrix_from_json(j["M0"], "M0");
      // A flat array is one state row over the D-1 coordinates.
      if (spec.M0.cols() == 1 && j["M0"].is_array() && j["M0"][0].is_number())
        spec.M0.transposeInPlace();
    });
  if (j.contains("C0")) guarded(report, "model.C0", [&] { spec.C0 = matrix_from_json(j["C0"], "C0"); });
  if (j.contains("Xi0")) guarded(report, "model.Xi0", [&] { spec.Xi0 = matrix_from_json(j["Xi0"], "Xi0"); });
  if (j.contains("nu0")) guarded(report, "model.nu0", [&] { spec.nu0 = number(j["nu0"]); });
  return spec;
}

json model_to_json(const ModelSpec& spec) {
  json j;
  auto list = [](const auto& items, auto conv) {
    if (items.size() == 1) return conv(items[0]);
    json out = json::array();
    for (const auto& x : items) out.push_back(conv(x));
    return out;
  };
  j["F"] = list(spec.F, [](const Eigen::VectorXd& v) { return vector_to_json(v); });
  j["G"] = list(spec.G, [](const Eigen::MatrixXd& m) { return matrix_to_json(m); });
  j["W"] = list(spec.W, [](const Eigen::MatrixXd& m) { return matrix_to_json(m); });
  if (spec.gamma.size() == 1) j["gamma"] = spec.gamma[0];
  else j["gamma"] = spec.gamma;
  j["M0"] = matrix_to_json(spec.M0);
  j["C0"] = matrix_to_json(spec.C0);
  j["Xi0"] = matrix_to_json(spec.Xi0);
  j["nu0"] = spec.nu0;
  return j;
}

HyperPrior hyperprior_from_json(const json& j, Index Q, ValidationReport& report) {
  check_keys(j, "hyperprior", {"a", "b"}, report);
  HyperPrior h;
  h.a = Eigen::VectorXd::Constant(Q, 30.0);
  h.b = Eigen::VectorXd::Constant(Q, 15.0);
  if (!j.is_object()) return h;
  for (const char* key : {"a", "b"}) {
    if (!j.contains(key)) continue;
    guarded(report, std::string("hyperprior.") + key, [&] {
      Eigen::VectorXd v = vector_from_json(j[key], key);
      if (v.size() == 1) v = Eigen::VectorXd::Constant(Q, v[0]);
      (std::string(key) == "a" ? h.a : h.b) = v;
    });
  }
  return h;
}

DMDBConfig dmdb_from_json(const json& j, ValidationReport& report) {
  check_keys(j, "dmdb", {"alpha", "num_samples", "seed"}, report);
  DMDBConfig c;
  if (!j.is_object()) return c;
  if (j.contains("alpha")) guarded(report, "dmdb.alpha", [&] { c.alpha = vector_from_json(j["alpha"], "alpha"); });
  if (j.contains("num_samples"))
    guarded(report, "dmdb.num_samples", [&] { c.num_samples = integer(j["num_samples"]); });
  if (j.contains("seed")) guarded(report, "dmdb.seed", [&] { c.seed = j["seed"].get<std::uint64_t>(); });
  return c;
}

OptimizerConfig optimizer_from_json(const json& j, ValidationReport& report) {
  check_keys(j, "optimizer",
             {"max_iters", "grad_tol", "rel_obj_tol", "history_size", "max_linesearch", "init_mode"},
             report);
  OptimizerConfig c;
  if (!j.is_object()) return c;
  if (j.contains("max_iters")) guarded(report, "optimizer.max_iters", [&] { c.max_iters = integer(j["max_iters"]); });
  if (j.contains("grad_tol")) guarded(report, "optimizer.grad_tol", [&] { c.grad_tol = number(j["grad_tol"]); });
  if (j.contains("rel_obj_tol"))
    guarded(report, "optimizer.rel_obj_tol", [&] { c.rel_obj_tol = number(j["rel_obj_tol"]); });
  if (j.contains("history_size"))
    guarded(report, "optimizer.history_size", [&] { c.history_size = integer(j["history_size"]); });
  if (j.contains("max_linesearch"))
    guarded(report, "optimizer.max_linesearch", [&] { c.max_linesearch = integer(j["max_linesearch"]); });
  if (j.contains("init_mode"))
    guarded(report, "optimizer.init_mode",
            [&] { c.init_mode = init_mode_from_string(j["init_mode"].get<std::string>()); });
  if (!(c.grad_tol > 0.0)) report.push_back({"optimizer.grad_tol", "must be > 0"});
  if (!(c.rel_obj_tol > 0.0)) report.push_back({"optimizer.rel_obj_tol", "must be > 0"});
  if (c.history_size < 1) report.push_back({"optimizer.history_size", "must be >= 1"});
  if (c.max_iters < 0) report.push_back({"optimizer.max_iters", "must be >= 0"});
  if (c.max_linesearch < 1) report.push_back({"optimizer.max_linesearch", "must be >= 1"});
  return c;
}

SimConfig simulation_from_json(const json& j, ValidationReport& report) {
  check_keys(j, "simulation",
             {"D", "T", "series_length", "missing_fraction", "w", "reversion", "Xi0", "nu0",
              "M0_range", "C0_range", "total_count", "seed"},
             report);
  SimConfig c;
  if (!j.is_object()) return c;
  auto range = [&](const char* key, double& lo, double& hi) {
    guarded(report, std::string("simulation.") + key, [&] {
      const Eigen::VectorXd v = vector_from_json(j[key], key);
      if (v.size() != 2) throw ValidationError("expected [low, high]");
      lo = v[0];
      hi = v[1];
    });
  };
  if (j.contains("D")) guarded(report, "simulation.D", [&] { c.D = integer(j["D"]); });
  if (j.contains("T")) guarded(report, "simulation.T", [&] { c.T_total = integer(j["T"]); });
  if (j.contains("series_length"))
    guarded(report, "simulation.series_length", [&] { c.series_length = integer(j["series_length"]); });
  if (j.contains("missing_fraction"))
    guarded(report, "simulation.missing_fraction",
            [&] { c.missing_fraction = number(j["missing_fraction"]); });
  if (j.contains("w")) guarded(report, "simulation.w", [&] { c.w = number(j["w"]); });
  if (j.contains("reversion")) guarded(report, "simulation.reversion", [&] { c.reversion = number(j["reversion"]); });
  if (j.contains("Xi0")) guarded(report, "simulation.Xi0", [&] { c.Xi0 = matrix_from_json(j["Xi0"], "Xi0"); });
  if (j.contains("nu0")) guarded(report, "simulation.nu0", [&] { c.nu0 = number(j["nu0"]); });
  if (j.contains("M0_range")) range("M0_range", c.M0_low, c.M0_high);
  if (j.contains("C0_range")) range("C0_range", c.C0_low, c.C0_high);
  if (j.contains("total_count"))
    guarded(report, "simulation.total_count", [&] { c.total_count = number(j["total_count"]); });
  if (j.contains("seed")) guarded(report, "simulation.seed", [&] { c.seed = j["seed"].get<std::uint64_t>(); });
  return c;
}

// ---------------------------------------------------------------- hashing

namespace {

std::string digest_hex(const unsigned char* md, unsigned int len) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  return digest_hex(md, len);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

void prepare_output_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw IoError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir, ec) && !force)
      throw IoError(dir.string() + " is not empty; pass --force to overwrite");
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace mlndlm::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mlndlm/dmdb.hpp"
#include "mlndlm/gibbs.hpp"
#include "mlndlm/model.hpp"
#include "mlndlm/optimizer.hpp"
#include "mlndlm/simulator.hpp"

namespace mlndlm::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Shortest round-tripping text for a double ("%.17g"); "NaN"/"Inf" aside.
std::string format_double(double x);

// ---------------------------------------------------------------- CSV

/// Splits one CSV line on commas. Quoting is not supported; fields are trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const fs::path& path);

/// Counts file: header "category,<time index>...", one row per category.
/// Empty or NA cells mark a missing time point; a column must be either all
/// missing or fully numeric.
struct CountsFile {
  std::vector<std::string> categories;
  std::vector<std::int64_t> time_index;
  Eigen::MatrixXd Y;             // missing columns hold zeros
  std::vector<bool> present;     // false where the column was NA
};
CountsFile read_counts(const fs::path& path);
void write_counts(const fs::path& path, const CountDataset& data,
                  const std::vector<std::int64_t>& time_index);

/// Metadata file with columns (time_index, series_id, observed), one row per
/// counts column in the same order. Series must occupy contiguous columns.
struct MetadataRow {
  std::int64_t time_index = 0;
  std::string series_id;
  bool observed = true;
};
std::vector<MetadataRow> read_metadata(const fs::path& path);
void write_metadata(const fs::path& path, const SeriesLayout& layout,
                    const std::vector<std::int64_t>& time_index);

/// Counts plus optional metadata into a dataset. Without metadata the data is
/// a single series, observed wherever the counts column is present. With
/// `zero_total_missing`, observed columns whose counts sum to 0 are
/// reclassified as missing.
struct LoadedData {
  CountDataset data;
  std::vector<std::int64_t> time_index;
  std::vector<std::string> categories;
};
LoadedData load_dataset(const fs::path& counts, const fs::path& metadata,
                        bool zero_total_missing = false);

/// Matrix with a header "<row_label>,<column labels>" and one labelled row per
/// matrix row.
void write_labelled_matrix(const fs::path& path, const std::string& row_label,
                           const std::vector<std::string>& row_names,
                           const std::vector<std::string>& col_names, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_labelled_matrix(const fs::path& path);

void write_trajectory(const fs::path& path, const std::vector<IterationRecord>& trajectory);

// ---------------------------------------------------------------- draws cache

/// Binary cache of S equally shaped matrices: magic, S, rows, cols, then the
/// values column-major, little-endian doubles.
void write_draws_binary(const fs::path& path, const std::vector<Eigen::MatrixXd>& draws);
std::vector<Eigen::MatrixXd> read_draws_binary(const fs::path& path);

// ---------------------------------------------------------------- JSON config

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field);
Eigen::VectorXd vector_from_json(const json& j, const std::string& field);
json matrix_to_json(const Eigen::MatrixXd& m);
json vector_to_json(const Eigen::VectorXd& v);

/// "model" section. Either {"builtin": "random_walk", "w": ...} or
/// {"builtin": "local_trend", "w_theta", "w_alpha", "damping"}, optionally
/// followed by overrides, or explicit F, G, W, gamma, M0, C0, Xi0, nu0.
/// Issues are appended to `report`.
ModelSpec model_from_json(const json& j, Index D, Index T, ValidationReport& report);
json model_to_json(const ModelSpec& spec);

HyperPrior hyperprior_from_json(const json& j, Index Q, ValidationReport& report);
DMDBConfig dmdb_from_json(const json& j, ValidationReport& report);
OptimizerConfig optimizer_from_json(const json& j, ValidationReport& report);
SimConfig simulation_from_json(const json& j, ValidationReport& report);

// ---------------------------------------------------------------- hashing

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

/// Creates `dir`. An existing non-empty directory is refused unless `force`.
void prepare_output_dir(const fs::path& dir, bool force);

}  // namespace mlndlm::io

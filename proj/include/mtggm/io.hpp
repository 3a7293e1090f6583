#pragma once

#include "mtggm/bcd.hpp"
#include "mtggm/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mtggm {

enum class MatrixRole { Samples, Covariance };

// A parsed numeric table plus its declared role.
struct MatrixFile {
  Eigen::MatrixXd values;
  MatrixRole role = MatrixRole::Samples;
  std::string path;
  bool had_header = false;
  std::vector<std::string> warnings;
};

// Comma-separated numeric table; a non-numeric first line is treated as a
// header. Covariance files must be square and symmetric to 1e-10 relative
// (symmetrized on load with a warning).
MatrixFile load_matrix_csv(const std::string& path, MatrixRole role);

// Maximum-likelihood covariance (divisor T) of row-wise observations,
// optionally centered by the sample mean. Returns the matrix and T.
std::pair<SymmetricMatrix, double> sample_covariance(const MatrixFile& samples, bool center);

// Writes values with 17 significant digits so a reload is bit-exact.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values);

std::string format_full_precision(double value);

// FNV-1a 64-bit content fingerprint, as a hex string.
std::string fnv1a64_file(const std::string& path);

struct InputRecord {
  std::string path;
  std::string kind;
  std::string hash;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

// Reproducibility record for one run. Serialized without volatile fields so
// artifacts of identical runs are byte-identical.
struct RunManifest {
  std::string tool_version;
  std::string command;
  ProblemSpec spec;
  std::uint64_t seed = 0;
  std::vector<InputRecord> inputs;
  std::size_t task_count = 0;
  Eigen::Index order = 0;
  std::vector<double> sample_counts;
  std::vector<std::string> artifacts;  // relative to the output directory
  bool ok = true;
  std::string error_kind;
  std::string error_message;
  // fit summary
  int sweeps_run = 0;
  bool converged = false;
  double final_objective = 0.0;
  int newton_fallbacks = 0;
};

std::string fit_report_to_json(const FitReport& report);
std::string run_manifest_to_json(const RunManifest& manifest);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mtggm

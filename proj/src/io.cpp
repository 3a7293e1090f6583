#include "mtggm/io.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mtggm {

namespace {

constexpr int kFitReportSchemaVersion = 1;
constexpr int kRunManifestSchemaVersion = 1;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  out = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

}  // namespace

MatrixFile load_matrix_csv(const std::string& path, MatrixRole role) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_number = 0;
  bool had_header = false;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_fields(line);

    std::vector<double> row(fields.size());
    bool numeric = true;
    std::size_t bad_column = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        numeric = false;
        bad_column = c;
        break;
      }
    }

    if (!numeric) {
      if (rows.empty() && !had_header) {
        had_header = true;  // non-numeric first line is a header
        continue;
      }
      throw ParseError(path + ": non-numeric cell at row " + std::to_string(line_number) +
                       ", column " + std::to_string(bad_column + 1));
    }

    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(path + ": ragged row " + std::to_string(line_number) + " (expected " +
                       std::to_string(width) + " columns, got " + std::to_string(row.size()) +
                       ")");
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw ParseError(path + ": no numeric rows");

  MatrixFile file;
  file.path = path;
  file.role = role;
  file.had_header = had_header;
  file.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      file.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }

  if (role == MatrixRole::Covariance) {
    if (file.values.rows() != file.values.cols()) {
      throw ParseError(path + ": covariance must be square, got " +
                       std::to_string(file.values.rows()) + "x" +
                       std::to_string(file.values.cols()));
    }
    const double asymmetry = (file.values - file.values.transpose()).cwiseAbs().maxCoeff();
    const double scale = 1.0 + file.values.cwiseAbs().maxCoeff();
    if (asymmetry > 1e-10 * scale) {
      throw ParseError(path + ": covariance asymmetry " + std::to_string(asymmetry) +
                       " exceeds tolerance");
    }
    if (asymmetry > 0.0) {
      file.values = (0.5 * (file.values + file.values.transpose())).eval();
      file.warnings.push_back("symmetrized covariance with asymmetry " +
                              std::to_string(asymmetry));
    }
  }
  return file;
}

std::pair<SymmetricMatrix, double> sample_covariance(const MatrixFile& samples, bool center) {
  const Eigen::Index t_count = samples.values.rows();
  if (center && t_count < 2) {
    throw DegenerateInputError("sample covariance with centering needs at least two rows");
  }
  if (t_count < 1) throw DegenerateInputError("sample covariance needs at least one row");

  Eigen::MatrixXd data = samples.values;
  if (center) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;
  }
  const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(t_count);
  return {SymmetricMatrix::from_lower(cov), static_cast<double>(t_count)};
}

std::string format_full_precision(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_full_precision(values(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("failed while writing '" + path + "'");
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for hashing");
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buffer))) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::ordered_json j;
  j["schema_version"] = kFitReportSchemaVersion;
  j["objective_trace"] = report.objective_trace;
  j["min_eig_trace"] = report.min_eig_trace;
  std::vector<long long> screened;
  screened.reserve(report.screened_blocks.size());
  for (Eigen::Index n : report.screened_blocks) screened.push_back(static_cast<long long>(n));
  j["screened_blocks"] = screened;
  j["sweeps_run"] = report.sweeps_run;
  j["newton_fallbacks"] = report.newton_fallbacks;
  j["converged"] = report.converged;
  return j.dump(2) + "\n";
}

std::string run_manifest_to_json(const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["schema_version"] = kRunManifestSchemaVersion;
  j["tool_version"] = manifest.tool_version;
  j["command"] = manifest.command;
  j["spec"] = {
      {"rho", manifest.spec.rho},
      {"p", norm_name(manifest.spec.norm)},
      {"penalize_diagonal", manifest.spec.penalize_diagonal},
      {"max_sweeps", manifest.spec.max_sweeps},
      {"objective_tol", manifest.spec.objective_tol},
      {"newton_iters", manifest.spec.newton_iters},
  };
  j["seed"] = manifest.seed;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const InputRecord& input : manifest.inputs) {
    inputs.push_back({{"path", input.path},
                      {"kind", input.kind},
                      {"fnv1a64", input.hash},
                      {"rows", input.rows},
                      {"cols", input.cols}});
  }
  j["inputs"] = inputs;
  j["dims"] = {{"tasks", manifest.task_count},
               {"variables", manifest.order},
               {"sample_counts", manifest.sample_counts}};
  j["artifacts"] = manifest.artifacts;
  j["status"] = manifest.ok ? "ok" : "error";
  if (!manifest.ok) {
    j["error"] = {{"kind", manifest.error_kind}, {"message", manifest.error_message}};
  }
  j["fit"] = {{"sweeps_run", manifest.sweeps_run},
              {"converged", manifest.converged},
              {"final_objective", manifest.final_objective},
              {"newton_fallbacks", manifest.newton_fallbacks}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("failed while writing '" + path + "'");
}

}  // namespace mtggm

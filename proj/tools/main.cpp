// Command-line harness: data ingestion, fits, synthetic experiments, metric
// evaluation and rho sweeps. All outputs land in a run-scoped directory and
// are deterministic given (inputs, config, seed).

#include "mtggm/bcd.hpp"
#include "mtggm/io.hpp"
#include "mtggm/model.hpp"
#include "mtggm/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "mtggm " MTGGM_VERSION;

struct CommonOptions {
  std::vector<std::string> inputs;
  std::string input_kind = "samples";
  double rho = 0.0;
  std::string p = "inf";
  bool penalize_diagonal = false;
  int max_sweeps = 10;
  double tol = 1e-6;
  int newton_iters = 10;
  std::uint64_t seed = 0;
  std::string out = "mtggm_out";
  std::string config_path;
  bool center = true;
  std::vector<double> sample_counts;
};

struct SynthOptions {
  Eigen::Index n_vars = 50;
  int k_tasks = 5;
  double density = 0.1;
  Eigen::Index t_samples = 50;
  int repetitions = 50;
  std::vector<double> rho_grid;
  int rho_count = 20;
};

struct EvalOptions {
  std::vector<std::string> estimates;
  std::vector<std::string> truths;
  std::string topology;
  double threshold = -1.0;  // negative: use the scale-relative default
};

mtggm::ProblemSpec make_spec(const CommonOptions& options) {
  mtggm::ProblemSpec spec;
  spec.rho = options.rho;
  spec.norm = mtggm::norm_from_string(options.p);
  spec.penalize_diagonal = options.penalize_diagonal;
  spec.max_sweeps = options.max_sweeps;
  spec.objective_tol = options.tol;
  spec.newton_iters = options.newton_iters;
  return spec;
}

// Config file values fill in everything the command line did not set.
template <typename T>
void maybe_set(const json& config, const char* key, const CLI::Option* option, T& value) {
  if (option != nullptr && option->count() > 0) return;
  if (config.contains(key)) value = config.at(key).get<T>();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw mtggm::ParseError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw mtggm::ParseError("config '" + path + "': " + e.what());
  }
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const mtggm::ParseError*>(&e)) return "parse";
  if (dynamic_cast<const mtggm::DefinitenessError*>(&e)) return "definiteness";
  if (dynamic_cast<const mtggm::DegenerateInputError*>(&e)) return "degenerate-input";
  if (dynamic_cast<const mtggm::NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const mtggm::InternalStateError*>(&e)) return "internal-state";
  if (dynamic_cast<const mtggm::Error*>(&e)) return "error";
  return "unexpected";
}

// Loads the per-task inputs into a suite, recording fingerprints.
mtggm::TaskSuite load_suite(const CommonOptions& options,
                            std::vector<mtggm::InputRecord>& records) {
  if (options.inputs.empty()) throw mtggm::ParseError("no --input files given");
  const bool covariance_kind = options.input_kind == "covariance";
  if (!covariance_kind && options.input_kind != "samples") {
    throw mtggm::ParseError("--input-kind must be 'samples' or 'covariance'");
  }

  std::vector<mtggm::Task> tasks;
  for (std::size_t k = 0; k < options.inputs.size(); ++k) {
    const std::string& path = options.inputs[k];
    const mtggm::MatrixFile file = mtggm::load_matrix_csv(
        path, covariance_kind ? mtggm::MatrixRole::Covariance : mtggm::MatrixRole::Samples);
    for (const std::string& warning : file.warnings) {
      std::cerr << "warning: " << path << ": " << warning << "\n";
    }
    mtggm::InputRecord record;
    record.path = path;
    record.kind = options.input_kind;
    record.hash = mtggm::fnv1a64_file(path);
    record.rows = file.values.rows();
    record.cols = file.values.cols();
    records.push_back(record);

    if (covariance_kind) {
      double t_count = 1.0;
      if (options.sample_counts.size() == 1) {
        t_count = options.sample_counts.front();
      } else if (k < options.sample_counts.size()) {
        t_count = options.sample_counts[k];
      }
      tasks.push_back({mtggm::SymmetricMatrix::from_lower(file.values), t_count});
    } else {
      auto [cov, t_count] = mtggm::sample_covariance(file, options.center);
      tasks.push_back({std::move(cov), t_count});
    }
  }
  return mtggm::TaskSuite(std::move(tasks));
}

std::vector<double> make_rho_grid(const SynthOptions& synth, const mtggm::TaskSuite& suite,
                                  mtggm::NormOrder norm) {
  if (!synth.rho_grid.empty()) return synth.rho_grid;
  // Log-spaced from the full-screening level down three decades.
  const double top = mtggm::full_screening_rho(suite, norm);
  const int count = std::max(1, synth.rho_count);
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = top;
    return grid;
  }
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] =
        top * std::pow(10.0, -3.0 + 3.0 * static_cast<double>(i) / (count - 1));
  }
  return grid;
}

void write_error_manifest(const std::string& out_dir, mtggm::RunManifest manifest,
                          const std::exception& e) {
  manifest.ok = false;
  manifest.error_kind = error_kind(e);
  manifest.error_message = e.what();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!ec) {
    try {
      mtggm::write_text_file((fs::path(out_dir) / "manifest.json").string(),
                             mtggm::run_manifest_to_json(manifest));
    } catch (...) {
    }
  }
}

int run_fit(const CommonOptions& options) {
  mtggm::RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = "fit";
  manifest.seed = options.seed;
  try {
    const mtggm::ProblemSpec spec = make_spec(options);
    spec.validate();
    manifest.spec = spec;

    const mtggm::TaskSuite suite = load_suite(options, manifest.inputs);
    manifest.task_count = suite.task_count();
    manifest.order = suite.order();
    for (std::size_t k = 0; k < suite.task_count(); ++k) {
      manifest.sample_counts.push_back(suite.task(k).sample_count);
    }

    const mtggm::FitResult fit = mtggm::solve(suite, spec);

    fs::create_directories(options.out);
    for (std::size_t k = 0; k < suite.task_count(); ++k) {
      const std::string name = "task_" + std::to_string(k) + "_precision.csv";
      mtggm::write_matrix_csv((fs::path(options.out) / name).string(),
                              fit.precisions.matrix(k).dense());
      manifest.artifacts.push_back(name);
    }
    mtggm::write_text_file((fs::path(options.out) / "fitreport.json").string(),
                           mtggm::fit_report_to_json(fit.report));
    manifest.artifacts.push_back("fitreport.json");

    manifest.sweeps_run = fit.report.sweeps_run;
    manifest.converged = fit.report.converged;
    manifest.final_objective = fit.report.objective_trace.empty()
                                   ? 0.0
                                   : fit.report.objective_trace.back();
    manifest.newton_fallbacks = fit.report.newton_fallbacks;
    mtggm::write_text_file((fs::path(options.out) / "manifest.json").string(),
                           mtggm::run_manifest_to_json(manifest));

    std::cout << "fit: " << fit.report.sweeps_run << " sweeps, objective "
              << manifest.final_objective << ", " << fit.report.wall_time_sec << " s\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << "\n";
    write_error_manifest(options.out, manifest, e);
    return 1;
  }
}

int run_sweep(const CommonOptions& options, const SynthOptions& grid_options) {
  mtggm::RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = "sweep";
  manifest.seed = options.seed;
  try {
    CommonOptions with_rho = options;
    if (with_rho.rho <= 0.0) with_rho.rho = 1.0;  // grid supplies the real values
    mtggm::ProblemSpec spec = make_spec(with_rho);
    spec.validate();
    manifest.spec = spec;

    const mtggm::TaskSuite suite = load_suite(options, manifest.inputs);
    manifest.task_count = suite.task_count();
    manifest.order = suite.order();
    for (std::size_t k = 0; k < suite.task_count(); ++k) {
      manifest.sample_counts.push_back(suite.task(k).sample_count);
    }

    const std::vector<double> grid = make_rho_grid(grid_options, suite, spec.norm);
    fs::create_directories(options.out);

    std::string csv = "rho,objective,loglik_mean,edges,converged\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      spec.rho = grid[i];
      const mtggm::FitResult fit = mtggm::solve(suite, spec);

      double loglik = 0.0;
      for (std::size_t k = 0; k < suite.task_count(); ++k) {
        loglik += mtggm::gaussian_log_likelihood(suite.task(k).covariance,
                                                 fit.precisions.matrix(k));
      }
      loglik /= static_cast<double>(suite.task_count());

      const double threshold = mtggm::default_edge_threshold(fit.precisions);
      std::size_t edges = 0;
      for (Eigen::Index a = 0; a < suite.order(); ++a) {
        for (Eigen::Index b = a + 1; b < suite.order(); ++b) {
          double magnitude = 0.0;
          for (std::size_t k = 0; k < suite.task_count(); ++k) {
            magnitude = std::max(magnitude, std::abs(fit.precisions.matrix(k)(a, b)));
          }
          if (magnitude > threshold) ++edges;
        }
      }

      const std::string sub = "rho_" + std::to_string(i);
      fs::create_directories(fs::path(options.out) / sub);
      for (std::size_t k = 0; k < suite.task_count(); ++k) {
        const std::string name = sub + "/task_" + std::to_string(k) + "_precision.csv";
        mtggm::write_matrix_csv((fs::path(options.out) / name).string(),
                                fit.precisions.matrix(k).dense());
        manifest.artifacts.push_back(name);
      }

      csv += mtggm::format_full_precision(grid[i]) + "," +
             mtggm::format_full_precision(fit.report.objective_trace.back()) + "," +
             mtggm::format_full_precision(loglik) + "," + std::to_string(edges) + "," +
             (fit.report.converged ? "1" : "0") + "\n";
    }
    mtggm::write_text_file((fs::path(options.out) / "sweep.csv").string(), csv);
    manifest.artifacts.push_back("sweep.csv");
    mtggm::write_text_file((fs::path(options.out) / "manifest.json").string(),
                           mtggm::run_manifest_to_json(manifest));
    std::cout << "sweep: " << grid.size() << " rho values\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << "\n";
    write_error_manifest(options.out, manifest, e);
    return 1;
  }
}

int run_synth(const CommonOptions& options, const SynthOptions& synth) {
  mtggm::RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = "synth";
  manifest.seed = options.seed;
  try {
    CommonOptions with_rho = options;
    if (with_rho.rho <= 0.0) with_rho.rho = 1.0;
    mtggm::ProblemSpec spec = make_spec(with_rho);
    spec.validate();
    manifest.spec = spec;

    fs::create_directories(options.out);

    std::vector<double> grid = synth.rho_grid;
    std::string points_csv = "repetition,rho,sensitivity,specificity,kl_mean\n";
    std::vector<double> sens_sum;
    std::vector<double> spec_sum;
    std::vector<double> kl_sum;
    std::vector<int> counts;
    double auc_sum = 0.0;
    int auc_count = 0;

    for (int rep = 0; rep < synth.repetitions; ++rep) {
      const std::uint64_t rep_seed = options.seed + 0x9e3779b9ULL * static_cast<std::uint64_t>(rep);
      const mtggm::GroundTruth truth = mtggm::generate_ground_truth(
          synth.n_vars, static_cast<std::size_t>(synth.k_tasks), synth.density, rep_seed);
      const std::vector<Eigen::MatrixXd> data = mtggm::sample_dataset(
          truth,
          std::vector<Eigen::Index>(static_cast<std::size_t>(synth.k_tasks), synth.t_samples),
          rep_seed + 1);

      std::vector<mtggm::Task> tasks;
      for (const Eigen::MatrixXd& d : data) {
        mtggm::MatrixFile file;
        file.values = d;
        auto [cov, t_count] = mtggm::sample_covariance(file, options.center);
        tasks.push_back({std::move(cov), t_count});
      }
      const mtggm::TaskSuite suite(std::move(tasks));

      if (grid.empty()) grid = make_rho_grid(synth, suite, spec.norm);
      if (sens_sum.empty()) {
        sens_sum.assign(grid.size(), 0.0);
        spec_sum.assign(grid.size(), 0.0);
        kl_sum.assign(grid.size(), 0.0);
        counts.assign(grid.size(), 0);
      }

      const mtggm::RocSweepResult sweep = mtggm::roc_sweep(suite, truth, spec, grid);
      for (std::size_t i = 0; i < sweep.points.size(); ++i) {
        const mtggm::RocPoint& point = sweep.points[i];
        if (!point.ok) {
          std::cerr << "warning: repetition " << rep << " rho " << point.rho << ": "
                    << point.error << "\n";
          continue;
        }
        points_csv += std::to_string(rep) + "," + mtggm::format_full_precision(point.rho) + "," +
                      mtggm::format_full_precision(point.metrics.sensitivity) + "," +
                      mtggm::format_full_precision(point.metrics.specificity) + "," +
                      mtggm::format_full_precision(point.kl_mean) + "\n";
        sens_sum[i] += point.metrics.sensitivity;
        spec_sum[i] += point.metrics.specificity;
        kl_sum[i] += point.kl_mean;
        counts[i] += 1;
      }
      if (sweep.auc.has_value()) {
        auc_sum += *sweep.auc;
        ++auc_count;
      }
    }

    mtggm::write_text_file((fs::path(options.out) / "points.csv").string(), points_csv);
    manifest.artifacts.push_back("points.csv");

    std::string aggregate_csv = "rho,sensitivity_mean,specificity_mean,kl_mean\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double denom = counts.empty() || counts[i] == 0 ? 1.0 : counts[i];
      aggregate_csv += mtggm::format_full_precision(grid[i]) + "," +
                       mtggm::format_full_precision(sens_sum[i] / denom) + "," +
                       mtggm::format_full_precision(spec_sum[i] / denom) + "," +
                       mtggm::format_full_precision(kl_sum[i] / denom) + "\n";
    }
    mtggm::write_text_file((fs::path(options.out) / "aggregate.csv").string(), aggregate_csv);
    manifest.artifacts.push_back("aggregate.csv");

    manifest.ok = true;
    mtggm::write_text_file((fs::path(options.out) / "manifest.json").string(),
                           mtggm::run_manifest_to_json(manifest));
    if (auc_count > 0) {
      std::cout << "synth: mean ROC area " << auc_sum / auc_count << " over " << auc_count
                << " repetitions\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << "\n";
    write_error_manifest(options.out, manifest, e);
    return 1;
  }
}

int run_eval(const CommonOptions& options, const EvalOptions& eval) {
  mtggm::RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = "eval";
  manifest.seed = options.seed;
  try {
    if (eval.estimates.empty()) throw mtggm::ParseError("no --estimate files given");
    if (eval.truths.empty() && options.inputs.empty()) {
      throw mtggm::ParseError("eval needs --truth files and/or --input covariances");
    }

    std::vector<mtggm::SymmetricMatrix> estimates;
    for (const std::string& path : eval.estimates) {
      const mtggm::MatrixFile file = mtggm::load_matrix_csv(path, mtggm::MatrixRole::Covariance);
      estimates.push_back(mtggm::SymmetricMatrix::from_lower(file.values));
      manifest.inputs.push_back(
          {path, "estimate", mtggm::fnv1a64_file(path), file.values.rows(), file.values.cols()});
    }
    const mtggm::PrecisionSet est_set = mtggm::PrecisionSet::unchecked(std::move(estimates));
    manifest.task_count = est_set.size();
    manifest.order = est_set.order();

    json metrics;
    metrics["schema_version"] = 1;

    if (!eval.truths.empty()) {
      if (eval.truths.size() != est_set.size()) {
        throw mtggm::ParseError("estimate/truth file counts differ");
      }
      std::vector<mtggm::SymmetricMatrix> truths;
      for (const std::string& path : eval.truths) {
        const mtggm::MatrixFile file =
            mtggm::load_matrix_csv(path, mtggm::MatrixRole::Covariance);
        truths.push_back(mtggm::SymmetricMatrix::from_lower(file.values));
        manifest.inputs.push_back(
            {path, "truth", mtggm::fnv1a64_file(path), file.values.rows(), file.values.cols()});
      }

      mtggm::GroundTruth truth;
      truth.models = truths;
      if (!eval.topology.empty()) {
        const mtggm::MatrixFile topo =
            mtggm::load_matrix_csv(eval.topology, mtggm::MatrixRole::Covariance);
        truth.topology = topo.values.cast<int>();
        manifest.inputs.push_back({eval.topology, "topology", mtggm::fnv1a64_file(eval.topology),
                                   topo.values.rows(), topo.values.cols()});
      } else {
        // Infer the support from the truth matrices.
        const Eigen::Index n = truths.front().order();
        truth.topology = Eigen::MatrixXi::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            for (const mtggm::SymmetricMatrix& m : truths) {
              if (m(i, j) != 0.0) truth.topology(i, j) = 1;
            }
          }
        }
      }

      const double threshold =
          eval.threshold >= 0.0 ? eval.threshold : mtggm::default_edge_threshold(est_set);
      const mtggm::SupportMetrics support = mtggm::support_metrics(truth, est_set, threshold);
      metrics["threshold"] = support.threshold;
      metrics["sensitivity"] = support.sensitivity;
      metrics["specificity"] = support.specificity;

      std::vector<double> kls;
      double kl_total = 0.0;
      for (std::size_t k = 0; k < est_set.size(); ++k) {
        const double kl = mtggm::kl_divergence(truth.models[k], est_set.matrix(k));
        kls.push_back(kl);
        kl_total += kl;
      }
      metrics["kl"] = kls;
      metrics["kl_mean"] = kl_total / static_cast<double>(est_set.size());
    }

    if (!options.inputs.empty()) {
      const mtggm::TaskSuite suite = load_suite(options, manifest.inputs);
      if (suite.task_count() != est_set.size() || suite.order() != est_set.order()) {
        throw mtggm::ParseError("input covariances do not match the estimates");
      }
      std::vector<double> logliks;
      for (std::size_t k = 0; k < suite.task_count(); ++k) {
        logliks.push_back(
            mtggm::gaussian_log_likelihood(suite.task(k).covariance, est_set.matrix(k)));
      }
      metrics["loglik"] = logliks;
      if (options.rho > 0.0) {
        const mtggm::ProblemSpec spec = make_spec(options);
        metrics["objective"] = mtggm::multitask_objective(suite, est_set, spec);
        manifest.spec = spec;
      }
    }

    fs::create_directories(options.out);
    mtggm::write_text_file((fs::path(options.out) / "metrics.json").string(),
                           metrics.dump(2) + "\n");
    manifest.artifacts.push_back("metrics.json");
    mtggm::write_text_file((fs::path(options.out) / "manifest.json").string(),
                           mtggm::run_manifest_to_json(manifest));
    std::cout << "eval: wrote metrics.json\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << "\n";
    write_error_manifest(options.out, manifest, e);
    return 1;
  }
}

void add_common_flags(CLI::App* cmd, CommonOptions& options, bool with_inputs = true) {
  if (with_inputs) {
    cmd->add_option("--input", options.inputs, "Input CSV, one per task (repeatable)");
    cmd->add_option("--input-kind", options.input_kind, "samples|covariance");
    cmd->add_option("--sample-count", options.sample_counts,
                    "Sample count per covariance input (repeatable or single broadcast value)");
    cmd->add_flag("!--no-center", options.center, "Skip mean centering of samples");
  }
  cmd->add_option("--rho", options.rho, "Regularization level");
  cmd->add_option("--p", options.p, "Norm order: 2 or inf");
  cmd->add_flag("--penalize-diagonal", options.penalize_diagonal, "Penalize diagonal entries");
  cmd->add_option("--max-sweeps", options.max_sweeps, "Sweep cap");
  cmd->add_option("--tol", options.tol, "Relative objective tolerance");
  cmd->add_option("--newton-iters", options.newton_iters, "Inner Newton iterations");
  cmd->add_option("--seed", options.seed, "Random seed");
  cmd->add_option("--out", options.out, "Output directory");
  cmd->add_option("--config", options.config_path, "JSON config; flags override file values");
}

void apply_common_config(const json& config, CLI::App* cmd, CommonOptions& options) {
  maybe_set(config, "inputs", cmd->get_option_no_throw("--input"), options.inputs);
  maybe_set(config, "input_kind", cmd->get_option_no_throw("--input-kind"), options.input_kind);
  maybe_set(config, "sample_counts", cmd->get_option_no_throw("--sample-count"),
            options.sample_counts);
  maybe_set(config, "center", cmd->get_option_no_throw("--no-center"), options.center);
  maybe_set(config, "rho", cmd->get_option_no_throw("--rho"), options.rho);
  maybe_set(config, "p", cmd->get_option_no_throw("--p"), options.p);
  maybe_set(config, "penalize_diagonal", cmd->get_option_no_throw("--penalize-diagonal"),
            options.penalize_diagonal);
  maybe_set(config, "max_sweeps", cmd->get_option_no_throw("--max-sweeps"), options.max_sweeps);
  maybe_set(config, "tol", cmd->get_option_no_throw("--tol"), options.tol);
  maybe_set(config, "newton_iters", cmd->get_option_no_throw("--newton-iters"),
            options.newton_iters);
  maybe_set(config, "seed", cmd->get_option_no_throw("--seed"), options.seed);
  maybe_set(config, "out", cmd->get_option_no_throw("--out"), options.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint sparse precision-matrix estimation across related tasks"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  CommonOptions fit_options;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Estimate precision matrices from data");
  add_common_flags(fit_cmd, fit_options);

  CommonOptions sweep_options;
  SynthOptions sweep_grid;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Fit across a rho grid on real data");
  add_common_flags(sweep_cmd, sweep_options);
  sweep_cmd->add_option("--rho-grid", sweep_grid.rho_grid, "Explicit rho values (repeatable)");
  sweep_cmd->add_option("--rho-count", sweep_grid.rho_count, "Grid size when derived from data");

  CommonOptions synth_options;
  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Synthetic recovery experiment");
  add_common_flags(synth_cmd, synth_options, false);
  synth_cmd->add_flag("!--no-center", synth_options.center, "Skip mean centering of samples");
  synth_cmd->add_option("--N", synth.n_vars, "Variables");
  synth_cmd->add_option("--K", synth.k_tasks, "Tasks");
  synth_cmd->add_option("--density", synth.density, "Edge density in (0,1)");
  synth_cmd->add_option("--T", synth.t_samples, "Samples per task");
  synth_cmd->add_option("--repetitions", synth.repetitions, "Experiment repetitions");
  synth_cmd->add_option("--rho-grid", synth.rho_grid, "Explicit rho values (repeatable)");
  synth_cmd->add_option("--rho-count", synth.rho_count, "Grid size when derived from data");

  CommonOptions eval_common;
  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Metrics on existing outputs");
  add_common_flags(eval_cmd, eval_common);
  eval_cmd->add_option("--estimate", eval.estimates, "Estimated precision CSV (repeatable)");
  eval_cmd->add_option("--truth", eval.truths, "Ground-truth precision CSV (repeatable)");
  eval_cmd->add_option("--topology", eval.topology, "Ground-truth topology CSV");
  eval_cmd->add_option("--threshold", eval.threshold, "Edge-call threshold");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) {
      const json config = load_config(fit_options.config_path);
      apply_common_config(config, fit_cmd, fit_options);
      return run_fit(fit_options);
    }
    if (sweep_cmd->parsed()) {
      const json config = load_config(sweep_options.config_path);
      apply_common_config(config, sweep_cmd, sweep_options);
      maybe_set(config, "rho_grid", sweep_cmd->get_option_no_throw("--rho-grid"),
                sweep_grid.rho_grid);
      maybe_set(config, "rho_count", sweep_cmd->get_option_no_throw("--rho-count"),
                sweep_grid.rho_count);
      return run_sweep(sweep_options, sweep_grid);
    }
    if (synth_cmd->parsed()) {
      const json config = load_config(synth_options.config_path);
      apply_common_config(config, synth_cmd, synth_options);
      long long n_vars = synth.n_vars;
      long long t_samples = synth.t_samples;
      maybe_set(config, "N", synth_cmd->get_option_no_throw("--N"), n_vars);
      maybe_set(config, "T", synth_cmd->get_option_no_throw("--T"), t_samples);
      synth.n_vars = static_cast<Eigen::Index>(n_vars);
      synth.t_samples = static_cast<Eigen::Index>(t_samples);
      maybe_set(config, "K", synth_cmd->get_option_no_throw("--K"), synth.k_tasks);
      maybe_set(config, "density", synth_cmd->get_option_no_throw("--density"), synth.density);
      maybe_set(config, "repetitions", synth_cmd->get_option_no_throw("--repetitions"),
                synth.repetitions);
      maybe_set(config, "rho_grid", synth_cmd->get_option_no_throw("--rho-grid"), synth.rho_grid);
      maybe_set(config, "rho_count", synth_cmd->get_option_no_throw("--rho-count"),
                synth.rho_count);
      return run_synth(synth_options, synth);
    }
    if (eval_cmd->parsed()) {
      const json config = load_config(eval_common.config_path);
      apply_common_config(config, eval_cmd, eval_common);
      maybe_set(config, "estimates", eval_cmd->get_option_no_throw("--estimate"), eval.estimates);
      maybe_set(config, "truths", eval_cmd->get_option_no_throw("--truth"), eval.truths);
      maybe_set(config, "topology", eval_cmd->get_option_no_throw("--topology"), eval.topology);
      maybe_set(config, "threshold", eval_cmd->get_option_no_throw("--threshold"), eval.threshold);
      return run_eval(eval_common, eval);
    }
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#include "mtggm/synthetic.hpp"

#include "mtggm/model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

namespace mtggm {

namespace {

constexpr double kMinEigenvalueTarget = 0.1;

// Deterministic sub-stream derivation so truth generation and sampling can
// be reproduced independently.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

GroundTruth generate_ground_truth(Eigen::Index n_vars, std::size_t k_tasks, double density,
                                  std::uint64_t seed) {
  if (n_vars < 2) throw DegenerateInputError("ground truth needs at least two variables");
  if (k_tasks < 1) throw DegenerateInputError("ground truth needs at least one task");
  if (!(density > 0.0) || !(density < 1.0)) {
    throw DegenerateInputError("density must lie in (0, 1)");
  }

  std::mt19937_64 rng(derive_seed(seed, 0));

  // All unordered pairs, then a partial shuffle picks the edge set.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n_vars * (n_vars - 1) / 2));
  for (Eigen::Index i = 0; i < n_vars; ++i) {
    for (Eigen::Index j = i + 1; j < n_vars; ++j) pairs.emplace_back(i, j);
  }
  const std::size_t edge_count = static_cast<std::size_t>(
      density * static_cast<double>(n_vars) * static_cast<double>(n_vars - 1) / 2.0);
  for (std::size_t i = 0; i < edge_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pairs.size() - 1);
    std::swap(pairs[i], pairs[pick(rng)]);
  }

  GroundTruth truth;
  truth.density = density;
  truth.topology = Eigen::MatrixXi::Zero(n_vars, n_vars);
  for (std::size_t e = 0; e < edge_count; ++e) {
    truth.topology(pairs[e].first, pairs[e].second) = 1;
    truth.topology(pairs[e].second, pairs[e].first) = 1;
  }

  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  truth.models.reserve(k_tasks);
  for (std::size_t k = 0; k < k_tasks; ++k) {
    SymmetricMatrix model(n_vars);
    for (int attempt = 0; attempt < 100; ++attempt) {
      model = SymmetricMatrix::identity(n_vars);
      for (std::size_t e = 0; e < edge_count; ++e) {
        model.set(pairs[e].first, pairs[e].second, weight(rng));
      }
      if (min_eigenvalue(model) >= kMinEigenvalueTarget) break;
    }
    const double lambda_min = min_eigenvalue(model);
    if (lambda_min < kMinEigenvalueTarget) {
      // Diagonal shift guarantees termination while keeping the support.
      const double shift = kMinEigenvalueTarget - lambda_min + 1e-6;
      for (Eigen::Index i = 0; i < n_vars; ++i) model.set(i, i, model(i, i) + shift);
    }
    truth.models.push_back(std::move(model));
  }
  return truth;
}

std::vector<Eigen::MatrixXd> sample_dataset(const GroundTruth& truth,
                                            const std::vector<Eigen::Index>& samples_per_task,
                                            std::uint64_t seed) {
  if (samples_per_task.size() != truth.models.size()) {
    throw DegenerateInputError("sample counts do not match the number of tasks");
  }
  std::vector<Eigen::MatrixXd> datasets;
  datasets.reserve(truth.models.size());
  for (std::size_t k = 0; k < truth.models.size(); ++k) {
    const Eigen::Index t_count = samples_per_task[k];
    if (t_count < 1) throw DegenerateInputError("sample count must be positive");
    const Eigen::Index n_vars = truth.models[k].order();

    Eigen::LLT<Eigen::MatrixXd> llt(truth.models[k].dense());
    if (llt.info() != Eigen::Success) {
      throw NumericError("ground-truth model is not positive definite");
    }

    std::mt19937_64 rng(derive_seed(seed, 1 + k));
    std::normal_distribution<double> gauss(0.0, 1.0);

    // x = L^{-T} z has covariance (L L^T)^{-1} = model^{-1}.
    Eigen::MatrixXd data(t_count, n_vars);
    Eigen::VectorXd z(n_vars);
    for (Eigen::Index t = 0; t < t_count; ++t) {
      for (Eigen::Index i = 0; i < n_vars; ++i) z[i] = gauss(rng);
      data.row(t) = llt.matrixU().solve(z).transpose();
    }
    datasets.push_back(std::move(data));
  }
  return datasets;
}

double kl_divergence(const SymmetricMatrix& truth_prec, const SymmetricMatrix& est_prec) {
  if (truth_prec.order() != est_prec.order()) {
    throw DegenerateInputError("KL divergence: order mismatch");
  }
  const Eigen::Index n = truth_prec.order();
  Eigen::LLT<Eigen::MatrixXd> llt(truth_prec.dense());
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("KL divergence: truth precision not positive definite");
  }
  const double trace_term = llt.solve(est_prec.dense()).trace();
  return 0.5 * (trace_term - static_cast<double>(n) + log_det_pd(truth_prec) -
                log_det_pd(est_prec));
}

SupportMetrics support_metrics(const GroundTruth& truth, const PrecisionSet& est,
                               double threshold) {
  const Eigen::Index n = truth.topology.rows();
  if (est.order() != n) throw DegenerateInputError("support metrics: order mismatch");

  std::size_t true_edges = 0;
  std::size_t true_gaps = 0;
  std::size_t kept_edges = 0;
  std::size_t kept_gaps = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double magnitude = 0.0;
      for (std::size_t k = 0; k < est.size(); ++k) {
        magnitude = std::max(magnitude, std::abs(est.matrix(k)(i, j)));
      }
      const bool called = magnitude > threshold;
      if (truth.topology(i, j) != 0) {
        ++true_edges;
        if (called) ++kept_edges;
      } else {
        ++true_gaps;
        if (!called) ++kept_gaps;
      }
    }
  }

  SupportMetrics metrics;
  metrics.threshold = threshold;
  metrics.sensitivity = true_edges == 0
                            ? 1.0
                            : static_cast<double>(kept_edges) / static_cast<double>(true_edges);
  metrics.specificity =
      true_gaps == 0 ? 1.0 : static_cast<double>(kept_gaps) / static_cast<double>(true_gaps);
  return metrics;
}

double default_edge_threshold(const PrecisionSet& est) {
  double magnitude = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    magnitude = std::max(magnitude, est.matrix(k).dense().cwiseAbs().maxCoeff());
  }
  return 1e-6 * magnitude;
}

RocSweepResult roc_sweep(const TaskSuite& suite, const GroundTruth& truth,
                         const ProblemSpec& spec_template, const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw DegenerateInputError("roc sweep: empty grid");
  if (truth.models.size() != suite.task_count()) {
    throw DegenerateInputError("roc sweep: task count mismatch");
  }

  RocSweepResult result;
  result.points.reserve(rho_grid.size());
  for (double rho : rho_grid) {
    RocPoint point;
    point.rho = rho;
    try {
      ProblemSpec spec = spec_template;
      spec.rho = rho;
      const FitResult fit = solve(suite, spec);
      point.report = fit.report;
      point.metrics =
          support_metrics(truth, fit.precisions, default_edge_threshold(fit.precisions));
      double kl_sum = 0.0;
      for (std::size_t k = 0; k < truth.models.size(); ++k) {
        kl_sum += kl_divergence(truth.models[k], fit.precisions.matrix(k));
      }
      point.kl_mean = kl_sum / static_cast<double>(truth.models.size());
      point.ok = true;
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
    }
    result.points.push_back(std::move(point));
  }
  std::sort(result.points.begin(), result.points.end(),
            [](const RocPoint& a, const RocPoint& b) { return a.rho < b.rho; });

  // Trapezoid over (1 - specificity, sensitivity), anchored at (0,0), (1,1).
  std::vector<std::pair<double, double>> curve;
  curve.emplace_back(0.0, 0.0);
  for (const RocPoint& point : result.points) {
    if (point.ok) curve.emplace_back(1.0 - point.metrics.specificity, point.metrics.sensitivity);
  }
  curve.emplace_back(1.0, 1.0);
  std::sort(curve.begin(), curve.end());
  if (curve.size() > 3) {  // more than the anchors plus a single point
    double auc = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      auc += 0.5 * (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second);
    }
    result.auc = auc;
  }
  return result;
}

}  // namespace mtggm

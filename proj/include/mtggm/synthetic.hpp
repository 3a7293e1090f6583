#pragma once

#include "mtggm/bcd.hpp"
#include "mtggm/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtggm {

// Shared random topology plus the per-task precision models living on it.
struct GroundTruth {
  Eigen::MatrixXi topology;              // symmetric 0/1, zero diagonal
  std::vector<SymmetricMatrix> models;   // PD, min eigenvalue >= 0.1
  double density = 0.0;
};

// Samples floor(density * N(N-1)/2) edges uniformly without replacement,
// assigns uniform [-1, 1] weights per task with unit diagonal, then enforces
// a minimum eigenvalue of 0.1 (resampling first, diagonal shift fallback).
GroundTruth generate_ground_truth(Eigen::Index n_vars, std::size_t k_tasks, double density,
                                  std::uint64_t seed);

// I.i.d. zero-mean Gaussian draws with covariance model_k^{-1}; one
// (T_k x N) matrix per task.
std::vector<Eigen::MatrixXd> sample_dataset(const GroundTruth& truth,
                                            const std::vector<Eigen::Index>& samples_per_task,
                                            std::uint64_t seed);

// KL divergence between the zero-mean Gaussians defined by two precision
// matrices: 1/2 (tr(est * truth^{-1}) - N + log det truth - log det est).
double kl_divergence(const SymmetricMatrix& truth_prec, const SymmetricMatrix& est_prec);

struct SupportMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double threshold = 0.0;
};

// Edge recovery quality over unordered off-diagonal pairs; an edge is called
// when max_k |entry_k| exceeds the threshold.
SupportMetrics support_metrics(const GroundTruth& truth, const PrecisionSet& est,
                               double threshold);

// Scale-relative zero test used by the sweep: 1e-6 * max_k max|entry|.
double default_edge_threshold(const PrecisionSet& est);

struct RocPoint {
  double rho = 0.0;
  SupportMetrics metrics;
  double kl_mean = 0.0;
  FitReport report;
  bool ok = false;
  std::string error;
};

struct RocSweepResult {
  std::vector<RocPoint> points;          // sorted by rho
  std::optional<double> auc;             // absent for degenerate grids
};

// Solves once per grid value and scores edge recovery and KL against the
// known truth; failures are recorded per point and the sweep continues.
RocSweepResult roc_sweep(const TaskSuite& suite, const GroundTruth& truth,
                         const ProblemSpec& spec_template, const std::vector<double>& rho_grid);

}  // namespace mtggm

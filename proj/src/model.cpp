#include "mtggm/model.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace mtggm {

double log_det_pd(const SymmetricMatrix& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("matrix is not positive definite; log det undefined");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double spectral_norm(const SymmetricMatrix& m) {
  const Eigen::Index n = m.order();
  // Mildly tilted start vector so structured matrices cannot hide their top
  // eigenvector in the orthogonal complement.
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i);
  x.normalize();

  double estimate = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::VectorXd y = m.dense() * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    x = y / norm;
    const double next = x.dot(m.dense() * x);
    if (std::abs(next - estimate) < 1e-12 * std::max(1.0, std::abs(next))) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

double gaussian_log_likelihood(const SymmetricMatrix& cov, const SymmetricMatrix& prec) {
  if (cov.order() != prec.order()) {
    throw DegenerateInputError("covariance/precision order mismatch");
  }
  return log_det_pd(prec) - cov.dense().cwiseProduct(prec.dense()).sum();
}

double l1p_norm(const std::vector<SymmetricMatrix>& matrices, NormOrder p) {
  if (matrices.empty()) throw DegenerateInputError("empty matrix set");
  const Eigen::Index n = matrices.front().order();
  const std::size_t k_count = matrices.size();
  double total = 0.0;
  Eigen::VectorXd group(static_cast<Eigen::Index>(k_count));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) group[static_cast<Eigen::Index>(k)] = matrices[k](i, j);
      total += vector_norm(group, p);
    }
  }
  return total;
}

double l1p_norm(const PrecisionSet& precs, NormOrder p) {
  return l1p_norm(precs.matrices(), p);
}

double l1p_diagonal(const std::vector<SymmetricMatrix>& matrices, NormOrder p) {
  const Eigen::Index n = matrices.front().order();
  const std::size_t k_count = matrices.size();
  double total = 0.0;
  Eigen::VectorXd group(static_cast<Eigen::Index>(k_count));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < k_count; ++k) group[static_cast<Eigen::Index>(k)] = matrices[k](i, i);
    total += vector_norm(group, p);
  }
  return total;
}

double regularizer_value(const std::vector<SymmetricMatrix>& matrices, const ProblemSpec& spec) {
  double r = l1p_norm(matrices, spec.norm);
  if (!spec.penalize_diagonal) r -= l1p_diagonal(matrices, spec.norm);
  return r;
}

double multitask_objective(const TaskSuite& suite, const std::vector<SymmetricMatrix>& matrices,
                           const ProblemSpec& spec) {
  if (matrices.size() != suite.task_count()) {
    throw DegenerateInputError("task count mismatch between suite and precision set");
  }
  double value = 0.0;
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    value += suite.task(k).sample_count *
             gaussian_log_likelihood(suite.task(k).covariance, matrices[k]);
  }
  return value - spec.rho * regularizer_value(matrices, spec);
}

double multitask_objective(const TaskSuite& suite, const PrecisionSet& precs,
                           const ProblemSpec& spec) {
  return multitask_objective(suite, precs.matrices(), spec);
}

EigenBounds eigenvalue_bounds(const TaskSuite& suite, const ProblemSpec& spec) {
  spec.validate();
  const double n = static_cast<double>(suite.order());
  EigenBounds bounds;
  bounds.lower.reserve(suite.task_count());
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const Task& t = suite.task(k);
    bounds.lower.push_back(1.0 / (spectral_norm(t.covariance) + n * spec.rho / t.sample_count));
  }
  bounds.upper = n * static_cast<double>(suite.task_count()) / spec.rho;
  return bounds;
}

double optimality_residual(const TaskSuite& suite, const std::vector<SymmetricMatrix>& matrices,
                           const ProblemSpec& spec) {
  if (matrices.size() != suite.task_count()) {
    throw DegenerateInputError("task count mismatch between suite and precision set");
  }
  const double nk = static_cast<double>(suite.order()) * static_cast<double>(suite.task_count());
  double value = -nk;
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    value += suite.task(k).sample_count *
             suite.task(k).covariance.dense().cwiseProduct(matrices[k].dense()).sum();
  }
  value += spec.rho * regularizer_value(matrices, spec);
  return std::abs(value);
}

double optimality_residual(const TaskSuite& suite, const PrecisionSet& precs,
                           const ProblemSpec& spec) {
  return optimality_residual(suite, precs.matrices(), spec);
}

}  // namespace mtggm

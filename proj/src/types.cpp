#include "mtggm/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace mtggm {

double dual_exponent(NormOrder p) {
  return p == NormOrder::P2 ? 2.0 : 1.0;
}

std::string norm_name(NormOrder p) {
  return p == NormOrder::P2 ? "2" : "inf";
}

NormOrder norm_from_string(const std::string& name) {
  if (name == "2") return NormOrder::P2;
  if (name == "inf" || name == "Inf" || name == "INF") return NormOrder::PInf;
  throw ParseError("unknown norm order '" + name + "' (expected '2' or 'inf')");
}

double vector_norm(const Eigen::VectorXd& v, NormOrder p) {
  return p == NormOrder::P2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

double dual_vector_norm(const Eigen::VectorXd& v, NormOrder p) {
  return p == NormOrder::P2 ? v.norm() : v.lpNorm<1>();
}

SymmetricMatrix::SymmetricMatrix(Eigen::Index order) {
  if (order < 2) throw DegenerateInputError("symmetric matrix order must be at least 2");
  entries_ = Eigen::MatrixXd::Zero(order, order);
}

SymmetricMatrix SymmetricMatrix::from_lower(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) throw DegenerateInputError("matrix is not square");
  SymmetricMatrix m(dense.rows());
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    for (Eigen::Index i = j; i < dense.rows(); ++i) {
      m.entries_(i, j) = dense(i, j);
      m.entries_(j, i) = dense(i, j);
    }
  }
  return m;
}

SymmetricMatrix SymmetricMatrix::symmetrized(const Eigen::MatrixXd& dense) {
  if (dense.rows() != dense.cols()) throw DegenerateInputError("matrix is not square");
  SymmetricMatrix m(dense.rows());
  for (Eigen::Index j = 0; j < dense.cols(); ++j) {
    for (Eigen::Index i = j; i < dense.rows(); ++i) {
      const double value = 0.5 * (dense(i, j) + dense(j, i));
      m.entries_(i, j) = value;
      m.entries_(j, i) = value;
    }
  }
  return m;
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index order) {
  SymmetricMatrix m(order);
  m.entries_.setIdentity();
  return m;
}

SymmetricMatrix SymmetricMatrix::diagonal(const Eigen::VectorXd& d) {
  SymmetricMatrix m(d.size());
  m.entries_.diagonal() = d;
  return m;
}

void SymmetricMatrix::set(Eigen::Index i, Eigen::Index j, double value) {
  entries_(i, j) = value;
  entries_(j, i) = value;
}

double min_eigenvalue(const SymmetricMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.dense(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  return solver.eigenvalues().minCoeff();
}

bool is_positive_definite(const SymmetricMatrix& m) {
  if (!m.dense().allFinite()) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m.dense());
  return llt.info() == Eigen::Success;
}

double TaskSuite::psd_tolerance(const SymmetricMatrix& covariance) {
  const double max_diag = covariance.dense().diagonal().maxCoeff();
  return 1e-8 * (1.0 + std::max(0.0, max_diag));
}

TaskSuite::TaskSuite(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw DegenerateInputError("task suite needs at least one task");
  const Eigen::Index n = tasks_.front().covariance.order();
  for (std::size_t k = 0; k < tasks_.size(); ++k) {
    const Task& t = tasks_[k];
    if (t.covariance.order() != n) {
      throw DegenerateInputError("covariance order mismatch in task " + std::to_string(k));
    }
    if (!(t.sample_count > 0.0) || !std::isfinite(t.sample_count)) {
      throw DegenerateInputError("sample count must be positive in task " + std::to_string(k));
    }
    if (!t.covariance.dense().allFinite()) {
      throw DegenerateInputError("covariance has non-finite entries in task " + std::to_string(k));
    }
    if (min_eigenvalue(t.covariance) < -psd_tolerance(t.covariance)) {
      throw DefinitenessError("covariance of task " + std::to_string(k) +
                              " is not positive semidefinite");
    }
  }
}

void ProblemSpec::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DegenerateInputError("rho must be positive");
  if (max_sweeps < 1) throw DegenerateInputError("max_sweeps must be at least 1");
  if (!(objective_tol >= 0.0)) throw DegenerateInputError("objective_tol must be nonnegative");
  if (newton_iters < 1) throw DegenerateInputError("newton_iters must be at least 1");
}

PrecisionSet::PrecisionSet(std::vector<SymmetricMatrix> matrices, Unchecked)
    : matrices_(std::move(matrices)) {
  if (matrices_.empty()) throw DegenerateInputError("precision set is empty");
}

PrecisionSet::PrecisionSet(std::vector<SymmetricMatrix> matrices)
    : PrecisionSet(std::move(matrices), Unchecked{}) {
  const Eigen::Index n = matrices_.front().order();
  for (std::size_t k = 0; k < matrices_.size(); ++k) {
    if (matrices_[k].order() != n) {
      throw DegenerateInputError("precision order mismatch in task " + std::to_string(k));
    }
    if (!is_positive_definite(matrices_[k])) {
      throw DefinitenessError("precision matrix of task " + std::to_string(k) +
                              " is not positive definite");
    }
  }
}

PrecisionSet PrecisionSet::unchecked(std::vector<SymmetricMatrix> matrices) {
  return PrecisionSet(std::move(matrices), Unchecked{});
}

}  // namespace mtggm

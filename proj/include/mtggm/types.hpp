#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mtggm {

// Error taxonomy shared across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log det (or another operation) is undefined for the given matrix.
class DefinitenessError : public Error {
 public:
  using Error::Error;
};

// Input data is structurally unusable (zero variance, bad dimensions, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A numeric routine produced a non-finite or otherwise invalid iterate.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Internal solver state became inconsistent and could not be recovered.
class InternalStateError : public Error {
 public:
  using Error::Error;
};

// Malformed file or configuration content.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A caller violated a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Norm order of the coupling penalty across tasks. The dual exponent drives
// the screening test and the subgradient conditions.
enum class NormOrder { P2, PInf };

// Dual exponent: P2 -> 2, PInf -> 1 (so that 1/p + 1/p_dual = 1).
double dual_exponent(NormOrder p);

std::string norm_name(NormOrder p);
NormOrder norm_from_string(const std::string& name);

// lp norm of a task-indexed coefficient vector for the supported orders.
double vector_norm(const Eigen::VectorXd& v, NormOrder p);
// Norm with the dual exponent (2 stays 2, inf becomes 1).
double dual_vector_norm(const Eigen::VectorXd& v, NormOrder p);

// Dense symmetric matrix with mirrored writes; both triangles always agree
// exactly.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Eigen::Index order);

  // Mirrors the lower triangle (column-major authoritative half).
  static SymmetricMatrix from_lower(const Eigen::MatrixXd& dense);
  // Builds (a + a^T)/2.
  static SymmetricMatrix symmetrized(const Eigen::MatrixXd& dense);
  static SymmetricMatrix identity(Eigen::Index order);
  static SymmetricMatrix diagonal(const Eigen::VectorXd& d);

  Eigen::Index order() const { return entries_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  void set(Eigen::Index i, Eigen::Index j, double value);
  const Eigen::MatrixXd& dense() const { return entries_; }
  Eigen::VectorXd diagonal_vector() const { return entries_.diagonal(); }

 private:
  Eigen::MatrixXd entries_;
};

double min_eigenvalue(const SymmetricMatrix& m);
bool is_positive_definite(const SymmetricMatrix& m);

// One dataset: its sample covariance and (possibly fractional) sample count.
struct Task {
  SymmetricMatrix covariance;
  double sample_count = 0.0;
};

// The K covariance/sample-count pairs jointly estimated. Immutable after
// construction; validation happens once here.
class TaskSuite {
 public:
  explicit TaskSuite(std::vector<Task> tasks);

  std::size_t task_count() const { return tasks_.size(); }
  Eigen::Index order() const { return tasks_.front().covariance.order(); }
  const Task& task(std::size_t k) const { return tasks_[k]; }
  const std::vector<Task>& tasks() const { return tasks_; }

  // Semidefiniteness slack used when validating an input covariance.
  static double psd_tolerance(const SymmetricMatrix& covariance);

 private:
  std::vector<Task> tasks_;
};

// Solver configuration.
struct ProblemSpec {
  double rho = 0.0;
  NormOrder norm = NormOrder::PInf;
  bool penalize_diagonal = false;
  int max_sweeps = 10;
  double objective_tol = 1e-6;
  int newton_iters = 10;

  void validate() const;
};

// The K symmetric positive definite precision estimates.
class PrecisionSet {
 public:
  // Validates: non-empty, consistent orders, every matrix positive definite.
  explicit PrecisionSet(std::vector<SymmetricMatrix> matrices);
  // Skips the definiteness check (solver-internal results, tests).
  static PrecisionSet unchecked(std::vector<SymmetricMatrix> matrices);

  std::size_t size() const { return matrices_.size(); }
  Eigen::Index order() const { return matrices_.front().order(); }
  const SymmetricMatrix& matrix(std::size_t k) const { return matrices_[k]; }
  const std::vector<SymmetricMatrix>& matrices() const { return matrices_; }

 private:
  struct Unchecked {};
  PrecisionSet(std::vector<SymmetricMatrix> matrices, Unchecked);

  std::vector<SymmetricMatrix> matrices_;
};

// Analytic eigenvalue bracket for the optimum: per-task lower bounds and a
// shared upper bound.
struct EigenBounds {
  std::vector<double> lower;
  double upper = 0.0;
};

}  // namespace mtggm

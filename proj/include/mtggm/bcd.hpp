#pragma once

#include "mtggm/subproblems.hpp"
#include "mtggm/types.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace mtggm {

// Task-local split of the precision and covariance with variable n moved to
// the last position: [W y; y' z] and [S u; u' v].
struct BlockView {
  Eigen::MatrixXd W;
  Eigen::VectorXd y;
  double z = 0.0;
  Eigen::MatrixXd S;
  Eigen::VectorXd u;
  double v = 0.0;
  double sample_count = 0.0;
};

BlockView make_block_view(const SymmetricMatrix& precision, const SymmetricMatrix& covariance,
                          double sample_count, Eigen::Index n);

// Inverse of make_block_view; reproduces the original matrix exactly.
SymmetricMatrix reassemble_block_view(const BlockView& view, Eigen::Index n);

// Sufficient statistics of the W^{-1} split used by the off-diagonal step:
// h22 is the diagonal entry of W^{-1} at the inner position, h12_dot_y1 the
// scalar h12' y1, and u2 the covariance entry between the inner and outer
// variable.
struct InnerView {
  double h22 = 0.0;
  double h12_dot_y1 = 0.0;
  double u2 = 0.0;
  double v = 0.0;
  double sample_count = 0.0;
};

InnerView make_inner_view(const Eigen::MatrixXd& w_inverse, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& u, double v, double sample_count,
                          Eigen::Index j);

// Diagnostics of one solve.
struct FitReport {
  std::vector<double> objective_trace;               // one entry per sweep
  std::vector<std::vector<double>> min_eig_trace;    // per sweep, per task
  std::vector<Eigen::Index> screened_blocks;         // variables fixed by screening
  int sweeps_run = 0;
  int newton_fallbacks = 0;
  double wall_time_sec = 0.0;
  bool converged = false;
};

// Raised when a solve aborts; carries the partial diagnostics.
class SolveError : public Error {
 public:
  SolveError(const std::string& message, FitReport partial)
      : Error(message), partial_report(std::move(partial)) {}
  FitReport partial_report;
};

// Test and instrumentation hooks.
struct SolveHooks {
  std::function<void(int sweep, Eigen::Index variable, const std::vector<SymmetricMatrix>&)>
      after_variable_update;
  bool disable_screening = false;
};

// Diagonal starting point 1 / diag(covariance) per task.
PrecisionSet initialize(const TaskSuite& suite);

// Variables whose whole off-diagonal block is zero at the optimum:
// max_{n' != n} || (T_k cov_k[n',n])_k ||_{p_dual} <= rho. Evaluated once on
// the constant covariance data.
std::vector<Eigen::Index> screen_blocks(const TaskSuite& suite, const ProblemSpec& spec);

// Largest rho for which every block is screened (grid upper bound helper).
double full_screening_rho(const TaskSuite& suite, NormOrder norm);

// Dense SPD inversion; throws InternalStateError when the factorization
// fails.
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& w);

// Replaces row/column j of w by new_col and refreshes w_inverse through a
// rank-2 correction; falls back to a fresh factorization when the update
// pivot degenerates.
void update_w_inverse(Eigen::MatrixXd& w, Eigen::MatrixXd& w_inverse, Eigen::Index j,
                      const Eigen::VectorXd& new_col);

// One coupled off-diagonal update: builds the separable quadratic from the
// per-task views and returns the new entries across tasks.
Eigen::VectorXd off_diagonal_step(const std::vector<InnerView>& views, const ProblemSpec& spec,
                                  int* fallback_count = nullptr);

// One coupled diagonal update from the Schur-complement statistics
// b_k = y' W^{-1} y; unpenalized mode is the closed form 1/v + b, penalized
// mode solves the logarithmic inner problem.
Eigen::VectorXd diagonal_step_values(const Eigen::VectorXd& v, const Eigen::VectorXd& sample_count,
                                     const Eigen::VectorXd& b, const ProblemSpec& spec,
                                     int* fallback_count = nullptr);

// Convenience overload that derives b from the full views.
Eigen::VectorXd diagonal_step(const std::vector<BlockView>& views, const ProblemSpec& spec,
                              int* fallback_count = nullptr);

struct FitResult {
  PrecisionSet precisions;
  FitReport report;
};

// Block coordinate ascent on the penalized multi-task likelihood.
FitResult solve(const TaskSuite& suite, const ProblemSpec& spec, const SolveHooks& hooks = {});

}  // namespace mtggm

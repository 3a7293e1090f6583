#pragma once

#include "mtggm/types.hpp"

#include <Eigen/Core>

#include <functional>

namespace mtggm {

// Data of the separable quadratic inner problem
//   min_x 1/2 x' diag(q) x - c' x + rho ||x||_p.
struct SeparableQuadratic {
  Eigen::VectorXd q;  // strictly positive curvature weights
  Eigen::VectorXd c;  // linear coefficients
  double rho = 0.0;

  void validate() const;
};

// Data of the separable logarithmic inner problem used by diagonal
// penalization. b entries may be exactly zero.
struct SeparableLogarithmic {
  Eigen::VectorXd q;  // > 0
  Eigen::VectorXd c;  // > 0
  Eigen::VectorXd b;  // >= 0
  double rho = 0.0;

  void validate() const;
};

// Solution of a knapsack-type inner problem. `values` holds g (quadratic
// variant) or r (logarithmic variant); `nu` is the equality multiplier and
// `active_count` the number of coordinates strictly inside the positive
// branch.
struct KnapsackSolution {
  Eigen::VectorXd values;
  double nu = 0.0;
  Eigen::Index active_count = 0;
  bool used_fallback = false;
};

// Solution of the trust-region dual: the primal point x and the ball
// multiplier lambda.
struct TrustRegionSolution {
  Eigen::VectorXd x;
  double lambda = 0.0;
  bool used_fallback = false;
};

struct LogTrustRegionSolution {
  Eigen::VectorXd r;
  double lambda = 0.0;
  bool used_fallback = false;
};

struct LpQuadSolution {
  Eigen::VectorXd x;
  bool used_fallback = false;
};

// Shared one-dimensional Newton kernel: minimizes a strictly convex function
// given its first and second derivative, clamping each iterate to >= lower.
// Throws NumericError on non-positive curvature or non-finite iterates.
double newton_1d(const std::function<double(double)>& fprime,
                 const std::function<double(double)>& fsecond, double x0, int iters,
                 double lower);

// Continuous quadratic knapsack
//   min_{g >= 0, 1'g = rho} sum_k (g_k - a_k)^2 / (2 q_k)
// by the sorted-breakpoint prefix scan. Requires a > 0 elementwise and
// ||a||_1 > rho (callers take the interior branch otherwise).
KnapsackSolution solve_quadratic_knapsack(const Eigen::VectorXd& q, const Eigen::VectorXd& a,
                                          double rho);

// One-dimensional dual of the separable trust-region problem:
//   min_{lambda >= 0} sum_k c_k^2 / (q_k + lambda q_k^2) + rho^2 lambda,
// solved by Newton from lambda = 0 with a bisection fallback. Requires
// ||c||_2 > rho. The primal point is x_k = lambda c_k / (1 + lambda q_k).
TrustRegionSolution solve_trust_region_dual(const Eigen::VectorXd& q, const Eigen::VectorXd& c,
                                            double rho, int iters);

// Continuous logarithmic knapsack
//   min_{r >= 0, 1'r = rho} -sum_k q_k log(r_k + c_k) - b'r
// via breakpoint sort, range location and Newton on the multiplier.
KnapsackSolution solve_log_knapsack(const SeparableLogarithmic& prob, int newton_iters = 10);

// Separable logarithmic trust-region problem
//   min_{r >= 0, ||r||_2 <= rho} -sum_k q_k log(r_k + c_k) - b'r,
// solved through its one-dimensional dual in lambda.
LogTrustRegionSolution solve_log_trust_region(const SeparableLogarithmic& prob,
                                              int newton_iters = 10);

// Unique minimizer of the separable quadratic inner problem; dispatches to
// the knapsack path (p = inf) or the trust-region path (p = 2). Coordinates
// with c_k = 0 are fixed to zero before dispatch.
LpQuadSolution solve_lp_separable_quadratic(const SeparableQuadratic& prob, NormOrder norm,
                                            int newton_iters = 10);

}  // namespace mtggm

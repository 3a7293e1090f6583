#include "mtggm/subproblems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mtggm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double square(double v) { return v * v; }

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw ContractViolation(std::string(what) + " has non-finite entries");
}

// Monotone bisection: f(lo) and f(hi) must straddle zero with f increasing.
double bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                         int steps) {
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// A few undamped Newton steps inside a known bracket; keeps the last good
// iterate if a step leaves the bracket or curvature degenerates.
double newton_polish(const std::function<double(double)>& fprime,
                     const std::function<double(double)>& fsecond, double x, double lo,
                     double hi, int steps) {
  for (int i = 0; i < steps; ++i) {
    const double d2 = fsecond(x);
    if (!(d2 > 0.0) || !std::isfinite(d2)) break;
    const double next = x - fprime(x) / d2;
    if (!std::isfinite(next) || next < lo || next > hi) break;
    x = next;
  }
  return x;
}

}  // namespace

void SeparableQuadratic::validate() const {
  if (q.size() == 0 || q.size() != c.size()) {
    throw ContractViolation("separable quadratic: empty problem or size mismatch");
  }
  require_finite(q, "q");
  require_finite(c, "c");
  if ((q.array() <= 0.0).any()) throw ContractViolation("separable quadratic: q must be positive");
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ContractViolation("separable quadratic: rho must be positive");
  }
}

void SeparableLogarithmic::validate() const {
  if (q.size() == 0 || q.size() != c.size() || q.size() != b.size()) {
    throw ContractViolation("separable logarithmic: empty problem or size mismatch");
  }
  require_finite(q, "q");
  require_finite(c, "c");
  require_finite(b, "b");
  if ((q.array() <= 0.0).any() || (c.array() <= 0.0).any()) {
    throw ContractViolation("separable logarithmic: q and c must be positive");
  }
  if ((b.array() < 0.0).any()) throw ContractViolation("separable logarithmic: b must be nonnegative");
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ContractViolation("separable logarithmic: rho must be positive");
  }
}

double newton_1d(const std::function<double(double)>& fprime,
                 const std::function<double(double)>& fsecond, double x0, int iters,
                 double lower) {
  double x = std::max(x0, lower);
  for (int i = 0; i < iters; ++i) {
    const double d2 = fsecond(x);
    if (!std::isfinite(d2) || !(d2 > 0.0)) {
      throw NumericError("newton_1d: non-positive or non-finite curvature");
    }
    const double d1 = fprime(x);
    if (!std::isfinite(d1)) throw NumericError("newton_1d: non-finite derivative");
    const double next = x - d1 / d2;
    if (!std::isfinite(next)) throw NumericError("newton_1d: non-finite iterate");
    x = std::max(next, lower);
  }
  return x;
}

KnapsackSolution solve_quadratic_knapsack(const Eigen::VectorXd& q, const Eigen::VectorXd& a,
                                          double rho) {
  const Eigen::Index k_count = q.size();
  if (k_count == 0 || a.size() != k_count) {
    throw ContractViolation("quadratic knapsack: empty problem or size mismatch");
  }
  require_finite(q, "q");
  require_finite(a, "a");
  if ((q.array() <= 0.0).any()) throw ContractViolation("quadratic knapsack: q must be positive");
  if ((a.array() <= 0.0).any()) {
    throw ContractViolation("quadratic knapsack: a must be positive (remove zero coordinates)");
  }
  if (!(rho > 0.0)) throw ContractViolation("quadratic knapsack: rho must be positive");
  if (!(a.lpNorm<1>() > rho)) {
    throw ContractViolation("quadratic knapsack: ||a||_1 <= rho, interior branch belongs to the caller");
  }

  // Breakpoints a_k / q_k in decreasing order, ties kept in index order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k_count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a[i] * q[j] > a[j] * q[i];
  });

  // Prefix scan for the multiplier: the first prefix whose candidate value
  // reaches the next breakpoint is the active set.
  double nu = 0.0;
  double prefix_a = 0.0;
  double prefix_q = 0.0;
  Eigen::Index active = 0;
  for (Eigen::Index j = 0; j < k_count; ++j) {
    prefix_a += a[order[static_cast<std::size_t>(j)]];
    prefix_q += q[order[static_cast<std::size_t>(j)]];
    const double candidate = (prefix_a - rho) / prefix_q;
    const double next_breakpoint =
        (j + 1 < k_count) ? a[order[static_cast<std::size_t>(j + 1)]] /
                                q[order[static_cast<std::size_t>(j + 1)]]
                          : 0.0;
    if (candidate >= next_breakpoint) {
      nu = candidate;
      active = j + 1;
      break;
    }
  }
  if (active == 0) throw InternalStateError("quadratic knapsack: breakpoint scan failed");

  Eigen::VectorXd g(k_count);
  const auto eval = [&](double nu_value) {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      g[k] = std::max(0.0, std::fma(-nu_value, q[k], a[k]));
      sum += g[k];
    }
    return sum;
  };

  // One or two multiplier corrections push |1'g - rho| down to rounding
  // level even when rho is orders of magnitude below the a scale.
  double sum = eval(nu);
  for (int round = 0; round < 3; ++round) {
    const double gap = sum - rho;
    if (std::abs(gap) <= 1e-15 * rho) break;
    double active_q = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (g[k] > 0.0) active_q += q[k];
    }
    if (!(active_q > 0.0)) break;
    nu += gap / active_q;
    sum = eval(nu);
  }

  KnapsackSolution solution;
  solution.values = g;
  solution.nu = nu;
  solution.active_count = active;
  return solution;
}

TrustRegionSolution solve_trust_region_dual(const Eigen::VectorXd& q, const Eigen::VectorXd& c,
                                            double rho, int iters) {
  const Eigen::Index k_count = q.size();
  if (k_count == 0 || c.size() != k_count) {
    throw ContractViolation("trust region: empty problem or size mismatch");
  }
  require_finite(q, "q");
  require_finite(c, "c");
  if ((q.array() <= 0.0).any()) throw ContractViolation("trust region: q must be positive");
  if (!(rho > 0.0)) throw ContractViolation("trust region: rho must be positive");
  if (!(c.norm() > rho)) {
    throw ContractViolation("trust region: ||c||_2 <= rho, interior branch belongs to the caller");
  }

  // Derivative of the dual objective; the root satisfies
  // sum_k c_k^2/(1 + lambda q_k)^2 = rho^2.
  const auto deriv = [&](double lam) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) s += square(c[k] / (1.0 + lam * q[k]));
    return rho * rho - s;
  };
  const auto curvature = [&](double lam) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const double w = 1.0 + lam * q[k];
      s += 2.0 * square(c[k]) * q[k] / (w * w * w);
    }
    return s;
  };

  double lambda = newton_1d(deriv, curvature, 0.0, iters, 0.0);

  // The fixed iteration budget can stop short when the multiplier is large;
  // a bracketed bisection plus a short polish then finishes the job.
  bool used_fallback = false;
  const double tol = 1e-12 * rho * rho;
  if (!(std::abs(deriv(lambda)) <= tol)) {
    used_fallback = true;
    double lo;
    double hi;
    if (deriv(lambda) <= 0.0) {
      lo = lambda;
      hi = std::max(1.0, 2.0 * lambda);
      int grow = 0;
      while (deriv(hi) < 0.0 && grow++ < 200) hi *= 2.0;
      if (deriv(hi) < 0.0) throw NumericError("trust region: failed to bracket the multiplier");
    } else {
      lo = 0.0;
      hi = lambda;
    }
    lambda = bisect_increasing(deriv, lo, hi, 50);
    lambda = newton_polish(deriv, curvature, lambda, lo, hi, 4);
  }

  TrustRegionSolution solution;
  solution.lambda = lambda;
  solution.used_fallback = used_fallback;
  solution.x.resize(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    solution.x[k] = lambda * c[k] / (1.0 + lambda * q[k]);
  }
  return solution;
}

KnapsackSolution solve_log_knapsack(const SeparableLogarithmic& prob, int newton_iters) {
  prob.validate();
  const Eigen::VectorXd& q = prob.q;
  const Eigen::VectorXd& c = prob.c;
  const Eigen::VectorXd& b = prob.b;
  const double rho = prob.rho;
  const Eigen::Index k_count = q.size();

  const double b_max = b.maxCoeff();
  Eigen::VectorXd breakpoint(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) breakpoint[k] = q[k] / c[k] + b[k];

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k_count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return breakpoint[i] > breakpoint[j];
  });

  // Total budget consumed at multiplier nu; infinite at or below the poles.
  const auto total_r = [&](double nu) {
    if (nu <= b_max) return kInf;
    double s = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (nu < breakpoint[k]) s += q[k] / (nu - b[k]) - c[k];
    }
    return s;
  };

  // Active range: first sorted position whose lower breakpoint over-fills
  // the budget. total_r is decreasing, so this brackets the root.
  Eigen::Index kstar = 0;
  double range_low = 0.0;
  for (Eigen::Index j = 0; j < k_count; ++j) {
    range_low = (j + 1 < k_count) ? breakpoint[order[static_cast<std::size_t>(j + 1)]] : 0.0;
    if (total_r(range_low) >= rho) {
      kstar = j + 1;
      break;
    }
  }
  if (kstar == 0) throw InternalStateError("log knapsack: breakpoint scan failed");
  const double range_high = breakpoint[order[static_cast<std::size_t>(kstar - 1)]];

  const double epsilon = 1e-6 * (1.0 + b_max);
  const double floor = b_max + std::min(epsilon, 0.5 * std::max(range_high - b_max, 0.0));

  // Minimization form of the multiplier equation: derivative rho - total_r
  // is increasing with curvature sum q_k/(nu - b_k)^2 over the still-active
  // coordinates (closed condition so boundary evaluations keep curvature).
  const auto deriv = [&](double nu) { return rho - total_r(nu); };
  const auto curvature = [&](double nu) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (nu <= breakpoint[k]) s += q[k] / square(nu - b[k]);
    }
    return s;
  };

  const double nu0 = std::max(b_max + epsilon, range_high);
  double nu = nu0;
  bool newton_ok = true;
  try {
    nu = newton_1d(deriv, curvature, nu0, newton_iters, floor);
  } catch (const NumericError&) {
    newton_ok = false;
  }

  bool used_fallback = false;
  const double tol = 1e-12 * rho;
  if (!newton_ok || !std::isfinite(total_r(nu)) || !(std::abs(total_r(nu) - rho) <= tol)) {
    used_fallback = true;
    // Bracket: approach the pole until the budget is over-filled.
    double lo = (range_low > b_max) ? range_low : b_max + epsilon;
    double delta = lo - b_max;
    while (total_r(lo) < rho && delta > 5e-324) {
      delta /= 16.0;
      lo = b_max + delta;
    }
    double hi = std::max(range_high, lo);
    nu = bisect_increasing(deriv, lo, hi, 50);
    nu = newton_polish(deriv, curvature, nu, lo, hi, 4);
  }

  KnapsackSolution solution;
  solution.nu = nu;
  solution.used_fallback = used_fallback;
  solution.values.resize(k_count);
  solution.active_count = 0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double r =
        (nu < breakpoint[k]) ? std::max(0.0, q[k] / (nu - b[k]) - c[k]) : 0.0;
    solution.values[k] = r;
    if (r > 0.0) ++solution.active_count;
  }
  if (!solution.values.allFinite()) throw NumericError("log knapsack: non-finite solution");
  return solution;
}

LogTrustRegionSolution solve_log_trust_region(const SeparableLogarithmic& prob,
                                              int newton_iters) {
  prob.validate();
  const Eigen::VectorXd& q = prob.q;
  const Eigen::VectorXd& c = prob.c;
  const Eigen::VectorXd& b = prob.b;
  const double rho = prob.rho;
  const Eigen::Index k_count = q.size();

  // Positive root of lambda r^2 + (lambda c - b) r - (b c + q) = 0. The
  // rationalized branch avoids cancellation when lambda c dominates b.
  Eigen::VectorXd r(k_count);
  const auto eval_r = [&](double lam) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const double disc =
          std::sqrt(square(b[k] + lam * c[k]) + 4.0 * lam * q[k]);
      const double shifted = lam * c[k] - b[k];
      r[k] = (shifted > 0.0) ? 2.0 * (b[k] * c[k] + q[k]) / (disc + shifted)
                             : (b[k] - lam * c[k] + disc) / (2.0 * lam);
    }
  };

  const auto deriv = [&](double lam) {
    eval_r(lam);
    return 0.5 * (rho * rho - r.squaredNorm());
  };
  const auto curvature = [&](double lam) {
    eval_r(lam);
    double s = 0.0;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const double rk = r[k];
      s += rk * rk * rk * (rk + c[k]) / (lam * rk * rk + b[k] * c[k] + q[k]);
    }
    return s;
  };

  // Average of the per-task optimal multipliers.
  double lambda0 = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    lambda0 += (q[k] + b[k] * (c[k] + rho)) / (rho * (c[k] + rho));
  }
  lambda0 /= static_cast<double>(k_count);
  const double floor = 1e-12 * lambda0;

  double lambda = lambda0;
  bool newton_ok = true;
  try {
    lambda = newton_1d(deriv, curvature, lambda0, newton_iters, floor);
  } catch (const NumericError&) {
    newton_ok = false;
  }

  bool used_fallback = false;
  const double tol = 1e-12 * rho * rho;
  if (!newton_ok || !(std::abs(2.0 * deriv(lambda)) <= tol)) {
    used_fallback = true;
    double lo = std::min(lambda0, lambda > 0.0 ? lambda : lambda0);
    int shrink = 0;
    while (deriv(lo) > 0.0 && shrink++ < 400) lo /= 10.0;
    if (deriv(lo) > 0.0) throw NumericError("log trust region: failed to bracket the multiplier");
    double hi = std::max(lambda0, lambda);
    int grow = 0;
    while (deriv(hi) < 0.0 && grow++ < 400) hi *= 10.0;
    if (deriv(hi) < 0.0) throw NumericError("log trust region: failed to bracket the multiplier");
    lambda = bisect_increasing(deriv, lo, hi, 50);
    lambda = newton_polish(deriv, curvature, lambda, lo, hi, 4);
  }

  LogTrustRegionSolution solution;
  eval_r(lambda);
  solution.r = r;
  solution.lambda = lambda;
  solution.used_fallback = used_fallback;
  if (!solution.r.allFinite()) throw NumericError("log trust region: non-finite solution");
  return solution;
}

LpQuadSolution solve_lp_separable_quadratic(const SeparableQuadratic& prob, NormOrder norm,
                                            int newton_iters) {
  prob.validate();
  const Eigen::Index k_count = prob.q.size();

  LpQuadSolution solution;
  solution.x = Eigen::VectorXd::Zero(k_count);

  // Coordinates with no linear pull are zero at the optimum and can be
  // dropped without affecting the rest.
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(k_count));
  for (Eigen::Index k = 0; k < k_count; ++k) {
    if (prob.c[k] != 0.0) keep.push_back(k);
  }
  if (keep.empty()) return solution;

  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd q(m);
  Eigen::VectorXd c(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    q[i] = prob.q[keep[static_cast<std::size_t>(i)]];
    c[i] = prob.c[keep[static_cast<std::size_t>(i)]];
  }

  if (norm == NormOrder::PInf) {
    if (c.lpNorm<1>() <= prob.rho) return solution;
    const KnapsackSolution ks = solve_quadratic_knapsack(q, c.cwiseAbs(), prob.rho);
    solution.used_fallback = ks.used_fallback;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double sign = (c[i] > 0.0) ? 1.0 : -1.0;
      solution.x[keep[static_cast<std::size_t>(i)]] = (c[i] - sign * ks.values[i]) / q[i];
    }
  } else {
    if (c.norm() <= prob.rho) return solution;
    const TrustRegionSolution tr = solve_trust_region_dual(q, c, prob.rho, newton_iters);
    solution.used_fallback = tr.used_fallback;
    for (Eigen::Index i = 0; i < m; ++i) {
      solution.x[keep[static_cast<std::size_t>(i)]] = tr.x[i];
    }
  }
  return solution;
}

}  // namespace mtggm

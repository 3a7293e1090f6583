#include "oracles.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracles {

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> magnitudes(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) magnitudes[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(magnitudes.begin(), magnitudes.end(), std::greater<double>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    cumulative += magnitudes[i];
    const double candidate = (cumulative - radius) / static_cast<double>(i + 1);
    if (i + 1 == magnitudes.size() || magnitudes[i + 1] <= candidate) {
      theta = candidate;
      break;
    }
  }

  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double magnitude = std::max(0.0, std::abs(v[i]) - theta);
    out[i] = v[i] >= 0.0 ? magnitude : -magnitude;
  }
  return out;
}

Eigen::VectorXd prox_group(const Eigen::VectorXd& w, double weight, mtggm::NormOrder norm) {
  if (norm == mtggm::NormOrder::P2) {
    const double magnitude = w.norm();
    if (magnitude <= weight) return Eigen::VectorXd::Zero(w.size());
    return (1.0 - weight / magnitude) * w;
  }
  // Moreau: prox of the max norm is the residual of the l1-ball projection.
  return w - project_l1_ball(w, weight);
}

double separable_quadratic_objective(const Eigen::VectorXd& q, const Eigen::VectorXd& c,
                                     double rho, mtggm::NormOrder norm,
                                     const Eigen::VectorXd& x) {
  return 0.5 * x.cwiseProduct(q).dot(x) - c.dot(x) + rho * mtggm::vector_norm(x, norm);
}

Eigen::VectorXd prox_grad_separable_quadratic(const Eigen::VectorXd& q, const Eigen::VectorXd& c,
                                              double rho, mtggm::NormOrder norm, int max_iters,
                                              double tol) {
  const double step = 1.0 / q.maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(q.size());
  for (int iter = 0; iter < max_iters; ++iter) {
    const Eigen::VectorXd gradient = q.cwiseProduct(x) - c;
    const Eigen::VectorXd next = prox_group(x - step * gradient, step * rho, norm);
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (change <= tol * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
  }
  return x;
}

namespace {

double smooth_part(const std::vector<Eigen::MatrixXd>& covs, const std::vector<double>& t_counts,
                   const std::vector<Eigen::MatrixXd>& omegas) {
  double value = 0.0;
  for (std::size_t k = 0; k < covs.size(); ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(omegas[k]);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    value += t_counts[k] * (covs[k].cwiseProduct(omegas[k]).sum() - log_det);
  }
  return value;
}

double penalty_part(const std::vector<Eigen::MatrixXd>& omegas, double rho,
                    mtggm::NormOrder norm, bool penalize_diagonal) {
  const Eigen::Index n = omegas.front().rows();
  const Eigen::Index k_count = static_cast<Eigen::Index>(omegas.size());
  Eigen::VectorXd group(k_count);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j && !penalize_diagonal) continue;
      for (Eigen::Index k = 0; k < k_count; ++k) group[k] = omegas[static_cast<std::size_t>(k)](i, j);
      total += mtggm::vector_norm(group, norm);
    }
  }
  return rho * total;
}

bool all_positive_definite(const std::vector<Eigen::MatrixXd>& omegas) {
  for (const Eigen::MatrixXd& omega : omegas) {
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

}  // namespace

double reference_objective(const std::vector<Eigen::MatrixXd>& covs,
                           const std::vector<double>& t_counts,
                           const std::vector<Eigen::MatrixXd>& omegas, double rho,
                           mtggm::NormOrder norm, bool penalize_diagonal) {
  // Sign convention: the maximized joint likelihood value.
  return -(smooth_part(covs, t_counts, omegas) + penalty_part(omegas, rho, norm, penalize_diagonal));
}

ReferenceFit reference_multitask_fit(const std::vector<Eigen::MatrixXd>& covs,
                                     const std::vector<double>& t_counts, double rho,
                                     mtggm::NormOrder norm, bool penalize_diagonal,
                                     int max_iters, double tol) {
  const std::size_t k_count = covs.size();
  const Eigen::Index n = covs.front().rows();

  std::vector<Eigen::MatrixXd> omegas(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    omegas[k] = covs[k].diagonal().cwiseInverse().asDiagonal();
  }

  double f_value = smooth_part(covs, t_counts, omegas);
  double total = f_value + penalty_part(omegas, rho, norm, penalize_diagonal);

  double step = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) step = std::max(step, t_counts[k]);
  step = 0.1 / step;

  std::vector<Eigen::MatrixXd> gradient(k_count);
  std::vector<Eigen::MatrixXd> candidate(k_count);
  Eigen::VectorXd group(static_cast<Eigen::Index>(k_count));

  int stable_rounds = 0;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    for (std::size_t k = 0; k < k_count; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(omegas[k]);
      gradient[k] =
          t_counts[k] * (covs[k] - llt.solve(Eigen::MatrixXd::Identity(n, n)));
    }

    bool accepted = false;
    for (int backtrack = 0; backtrack < 60 && !accepted; ++backtrack) {
      for (std::size_t k = 0; k < k_count; ++k) candidate[k] = omegas[k] - step * gradient[k];
      // Groupwise shrinkage across tasks, position by position.
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (i == j && !penalize_diagonal) continue;
          for (std::size_t k = 0; k < k_count; ++k) group[static_cast<Eigen::Index>(k)] = candidate[k](i, j);
          const Eigen::VectorXd shrunk = prox_group(group, step * rho, norm);
          for (std::size_t k = 0; k < k_count; ++k) candidate[k](i, j) = shrunk[static_cast<Eigen::Index>(k)];
        }
      }

      if (all_positive_definite(candidate)) {
        const double f_candidate = smooth_part(covs, t_counts, candidate);
        double linearized = f_value;
        double sq_norm = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
          const Eigen::MatrixXd diff = candidate[k] - omegas[k];
          linearized += gradient[k].cwiseProduct(diff).sum();
          sq_norm += diff.squaredNorm();
        }
        if (f_candidate <= linearized + 0.5 * sq_norm / step + 1e-12 * std::abs(f_candidate)) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;

    omegas.swap(candidate);
    f_value = smooth_part(covs, t_counts, omegas);
    const double next_total = f_value + penalty_part(omegas, rho, norm, penalize_diagonal);
    const double change = std::abs(next_total - total);
    total = next_total;
    if (change <= tol * (1.0 + std::abs(total))) {
      if (++stable_rounds >= 3) break;
    } else {
      stable_rounds = 0;
    }
    step *= 1.2;
  }

  ReferenceFit fit;
  fit.omegas = std::move(omegas);
  fit.objective = -total;
  fit.iterations = iter;
  return fit;
}

}  // namespace oracles

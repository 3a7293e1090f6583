#include "mtggm/bcd.hpp"

#include "mtggm/model.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

namespace mtggm {

namespace {

// Reduced index i of the order-(N-1) view maps to variable (i < n ? i : i+1).
Eigen::Index reduced_to_full(Eigen::Index i, Eigen::Index n) { return i < n ? i : i + 1; }

Eigen::MatrixXd extract_submatrix(const SymmetricMatrix& m, Eigen::Index n) {
  const Eigen::Index size = m.order() - 1;
  Eigen::MatrixXd out(size, size);
  for (Eigen::Index j = 0; j < size; ++j) {
    const Eigen::Index cj = reduced_to_full(j, n);
    for (Eigen::Index i = 0; i < size; ++i) {
      out(i, j) = m(reduced_to_full(i, n), cj);
    }
  }
  return out;
}

Eigen::VectorXd extract_column(const SymmetricMatrix& m, Eigen::Index n) {
  const Eigen::Index size = m.order() - 1;
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) out[i] = m(reduced_to_full(i, n), n);
  return out;
}

// Per-variable screening statistic max_{n' != n} ||(T_k cov_k[n',n])_k||_dual.
Eigen::VectorXd screening_statistics(const TaskSuite& suite, NormOrder norm) {
  const Eigen::Index n_vars = suite.order();
  const Eigen::Index k_count = static_cast<Eigen::Index>(suite.task_count());
  Eigen::VectorXd stats = Eigen::VectorXd::Zero(n_vars);
  Eigen::VectorXd group(k_count);
  for (Eigen::Index n = 0; n < n_vars; ++n) {
    double stat = 0.0;
    for (Eigen::Index m = 0; m < n_vars; ++m) {
      if (m == n) continue;
      for (Eigen::Index k = 0; k < k_count; ++k) {
        const Task& task = suite.task(static_cast<std::size_t>(k));
        group[k] = task.sample_count * task.covariance(m, n);
      }
      stat = std::max(stat, dual_vector_norm(group, norm));
    }
    stats[n] = stat;
  }
  return stats;
}

}  // namespace

BlockView make_block_view(const SymmetricMatrix& precision, const SymmetricMatrix& covariance,
                          double sample_count, Eigen::Index n) {
  if (precision.order() != covariance.order()) {
    throw DegenerateInputError("block view: order mismatch");
  }
  if (n < 0 || n >= precision.order()) throw ContractViolation("block view: variable out of range");
  BlockView view;
  view.W = extract_submatrix(precision, n);
  view.y = extract_column(precision, n);
  view.z = precision(n, n);
  view.S = extract_submatrix(covariance, n);
  view.u = extract_column(covariance, n);
  view.v = covariance(n, n);
  view.sample_count = sample_count;
  return view;
}

SymmetricMatrix reassemble_block_view(const BlockView& view, Eigen::Index n) {
  const Eigen::Index order = view.W.rows() + 1;
  SymmetricMatrix out(order);
  for (Eigen::Index j = 0; j < view.W.cols(); ++j) {
    for (Eigen::Index i = 0; i < view.W.rows(); ++i) {
      out.set(reduced_to_full(i, n), reduced_to_full(j, n), view.W(i, j));
    }
  }
  for (Eigen::Index i = 0; i < view.y.size(); ++i) {
    out.set(reduced_to_full(i, n), n, view.y[i]);
  }
  out.set(n, n, view.z);
  return out;
}

InnerView make_inner_view(const Eigen::MatrixXd& w_inverse, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& u, double v, double sample_count,
                          Eigen::Index j) {
  InnerView view;
  view.h22 = w_inverse(j, j);
  view.h12_dot_y1 = w_inverse.col(j).dot(y) - w_inverse(j, j) * y[j];
  view.u2 = u[j];
  view.v = v;
  view.sample_count = sample_count;
  return view;
}

PrecisionSet initialize(const TaskSuite& suite) {
  std::vector<SymmetricMatrix> matrices;
  matrices.reserve(suite.task_count());
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const Eigen::VectorXd diag = suite.task(k).covariance.diagonal_vector();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      if (!(diag[i] > 0.0)) {
        throw DegenerateInputError("task " + std::to_string(k) + " has zero variance at variable " +
                                   std::to_string(i));
      }
    }
    matrices.push_back(SymmetricMatrix::diagonal(diag.cwiseInverse()));
  }
  return PrecisionSet::unchecked(std::move(matrices));
}

std::vector<Eigen::Index> screen_blocks(const TaskSuite& suite, const ProblemSpec& spec) {
  spec.validate();
  const Eigen::VectorXd stats = screening_statistics(suite, spec.norm);
  std::vector<Eigen::Index> screened;
  for (Eigen::Index n = 0; n < stats.size(); ++n) {
    if (stats[n] <= spec.rho) screened.push_back(n);
  }
  return screened;
}

double full_screening_rho(const TaskSuite& suite, NormOrder norm) {
  return screening_statistics(suite, norm).maxCoeff();
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& w) {
  Eigen::LLT<Eigen::MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) {
    throw InternalStateError("working block lost positive definiteness");
  }
  return llt.solve(Eigen::MatrixXd::Identity(w.rows(), w.cols()));
}

void update_w_inverse(Eigen::MatrixXd& w, Eigen::MatrixXd& w_inverse, Eigen::Index j,
                      const Eigen::VectorXd& new_col) {
  const Eigen::VectorXd delta = new_col - w.col(j);

  // The authoritative block gets the new content exactly.
  w.col(j) = new_col;
  w.row(j) = new_col.transpose();

  // Row/column replacement as the symmetric rank-2 update e_j d' + d e_j'.
  Eigen::VectorXd d = delta;
  d[j] -= 0.5 * delta[j];

  const Eigen::VectorXd t1 = w_inverse.col(j);
  const Eigen::VectorXd t2 = w_inverse * d;
  const double m00 = t1[j];
  const double m01 = 1.0 + t2[j];
  const double m11 = d.dot(t2);
  const double det = m00 * m11 - m01 * m01;
  const double pivot_scale = std::abs(m00 * m11) + m01 * m01 + 1e-300;

  if (!std::isfinite(det) || std::abs(det) < 1e-12 * pivot_scale) {
    w_inverse = invert_spd(w);
    return;
  }

  const double i00 = m11 / det;
  const double i01 = -m01 / det;
  const double i11 = m00 / det;
  w_inverse -= i00 * (t1 * t1.transpose()) + i01 * (t1 * t2.transpose() + t2 * t1.transpose()) +
               i11 * (t2 * t2.transpose());
  w_inverse = (0.5 * (w_inverse + w_inverse.transpose())).eval();

  if (!w_inverse.allFinite() || w_inverse.diagonal().minCoeff() <= 0.0) {
    w_inverse = invert_spd(w);
  }
}

Eigen::VectorXd off_diagonal_step(const std::vector<InnerView>& views, const ProblemSpec& spec,
                                  int* fallback_count) {
  const Eigen::Index k_count = static_cast<Eigen::Index>(views.size());
  SeparableQuadratic prob;
  prob.q.resize(k_count);
  prob.c.resize(k_count);
  prob.rho = spec.rho;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const InnerView& view = views[static_cast<std::size_t>(k)];
    prob.q[k] = view.sample_count * view.v * view.h22;
    prob.c[k] = -view.sample_count * (view.v * view.h12_dot_y1 + view.u2);
    if (!(prob.q[k] > 0.0) || !std::isfinite(prob.q[k])) {
      throw InternalStateError("off-diagonal step: non-positive curvature weight");
    }
  }
  const LpQuadSolution solution = solve_lp_separable_quadratic(prob, spec.norm, spec.newton_iters);
  if (fallback_count != nullptr && solution.used_fallback) ++*fallback_count;
  return solution.x;
}

Eigen::VectorXd diagonal_step_values(const Eigen::VectorXd& v, const Eigen::VectorXd& sample_count,
                                     const Eigen::VectorXd& b, const ProblemSpec& spec,
                                     int* fallback_count) {
  const Eigen::Index k_count = v.size();
  if (sample_count.size() != k_count || b.size() != k_count) {
    throw ContractViolation("diagonal step: size mismatch");
  }
  Eigen::VectorXd z(k_count);
  if (!spec.penalize_diagonal) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (!(v[k] > 0.0)) throw DegenerateInputError("diagonal step: zero variance");
      z[k] = 1.0 / v[k] + b[k];
    }
    return z;
  }

  SeparableLogarithmic prob;
  prob.q = sample_count;
  prob.c = sample_count.cwiseProduct(v);
  prob.b = b;
  prob.rho = spec.rho;
  Eigen::VectorXd r;
  bool used_fallback = false;
  if (spec.norm == NormOrder::PInf) {
    const KnapsackSolution ks = solve_log_knapsack(prob, spec.newton_iters);
    r = ks.values;
    used_fallback = ks.used_fallback;
  } else {
    const LogTrustRegionSolution tr = solve_log_trust_region(prob, spec.newton_iters);
    r = tr.r;
    used_fallback = tr.used_fallback;
  }
  if (fallback_count != nullptr && used_fallback) ++*fallback_count;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    z[k] = b[k] + sample_count[k] / (sample_count[k] * v[k] + r[k]);
    if (!(z[k] > b[k])) {
      throw InternalStateError("diagonal step: Schur complement margin lost");
    }
  }
  return z;
}

Eigen::VectorXd diagonal_step(const std::vector<BlockView>& views, const ProblemSpec& spec,
                              int* fallback_count) {
  const Eigen::Index k_count = static_cast<Eigen::Index>(views.size());
  Eigen::VectorXd v(k_count);
  Eigen::VectorXd samples(k_count);
  Eigen::VectorXd b(k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const BlockView& view = views[static_cast<std::size_t>(k)];
    Eigen::LLT<Eigen::MatrixXd> llt(view.W);
    if (llt.info() != Eigen::Success) {
      throw DefinitenessError("diagonal step: working block not positive definite");
    }
    v[k] = view.v;
    samples[k] = view.sample_count;
    b[k] = view.y.dot(llt.solve(view.y));
  }
  return diagonal_step_values(v, samples, b, spec, fallback_count);
}

FitResult solve(const TaskSuite& suite, const ProblemSpec& spec, const SolveHooks& hooks) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&start]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const Eigen::Index n_vars = suite.order();
  const std::size_t k_count = suite.task_count();

  FitReport report;
  std::vector<SymmetricMatrix> omegas = initialize(suite).matrices();

  if (!hooks.disable_screening) {
    report.screened_blocks = screen_blocks(suite, spec);
  }
  std::vector<char> is_screened(static_cast<std::size_t>(n_vars), 0);
  for (Eigen::Index n : report.screened_blocks) is_screened[static_cast<std::size_t>(n)] = 1;

  struct WorkingSet {
    Eigen::MatrixXd W;
    Eigen::MatrixXd Winv;
  };
  std::vector<WorkingSet> working(k_count);

  try {
    double objective_prev = multitask_objective(suite, omegas, spec);

    for (int sweep = 1; sweep <= spec.max_sweeps; ++sweep) {
      // Fresh factorization each sweep bounds drift of the chained updates.
      for (std::size_t k = 0; k < k_count; ++k) {
        working[k].W = extract_submatrix(omegas[k], 0);
        working[k].Winv = invert_spd(working[k].W);
      }

      for (Eigen::Index n = 0; n < n_vars; ++n) {
        if (n > 0) {
          // Move the excluded variable from n-1 to n: slot n-1 of the
          // working block swaps variable n for variable n-1.
          for (std::size_t k = 0; k < k_count; ++k) {
            Eigen::VectorXd new_col(n_vars - 1);
            for (Eigen::Index i = 0; i < n_vars - 1; ++i) {
              new_col[i] = omegas[k](reduced_to_full(i, n), n - 1);
            }
            update_w_inverse(working[k].W, working[k].Winv, n - 1, new_col);
          }
        }

        std::vector<Eigen::VectorXd> y(k_count);
        std::vector<Eigen::VectorXd> u(k_count);
        Eigen::VectorXd v(static_cast<Eigen::Index>(k_count));
        Eigen::VectorXd samples(static_cast<Eigen::Index>(k_count));
        for (std::size_t k = 0; k < k_count; ++k) {
          const Task& task = suite.task(k);
          y[k] = extract_column(omegas[k], n);
          u[k] = extract_column(task.covariance, n);
          v[static_cast<Eigen::Index>(k)] = task.covariance(n, n);
          samples[static_cast<Eigen::Index>(k)] = task.sample_count;
        }

        if (!is_screened[static_cast<std::size_t>(n)]) {
          std::vector<InnerView> views(k_count);
          for (Eigen::Index inner = 0; inner < n_vars; ++inner) {
            if (inner == n || is_screened[static_cast<std::size_t>(inner)]) continue;
            const Eigen::Index j = inner < n ? inner : inner - 1;
            for (std::size_t k = 0; k < k_count; ++k) {
              views[k] = make_inner_view(working[k].Winv, y[k], u[k],
                                         v[static_cast<Eigen::Index>(k)],
                                         samples[static_cast<Eigen::Index>(k)], j);
            }
            const Eigen::VectorXd x = off_diagonal_step(views, spec, &report.newton_fallbacks);
            for (std::size_t k = 0; k < k_count; ++k) {
              omegas[k].set(inner, n, x[static_cast<Eigen::Index>(k)]);
              y[k][j] = x[static_cast<Eigen::Index>(k)];
            }
          }
        }

        Eigen::VectorXd b(static_cast<Eigen::Index>(k_count));
        for (std::size_t k = 0; k < k_count; ++k) {
          b[static_cast<Eigen::Index>(k)] = y[k].dot(working[k].Winv * y[k]);
        }
        const Eigen::VectorXd z =
            diagonal_step_values(v, samples, b, spec, &report.newton_fallbacks);
        for (std::size_t k = 0; k < k_count; ++k) {
          omegas[k].set(n, n, z[static_cast<Eigen::Index>(k)]);
        }

        if (hooks.after_variable_update) hooks.after_variable_update(sweep, n, omegas);
      }

      const double objective = multitask_objective(suite, omegas, spec);
      report.objective_trace.push_back(objective);
      std::vector<double> eigs(k_count);
      for (std::size_t k = 0; k < k_count; ++k) eigs[k] = min_eigenvalue(omegas[k]);
      report.min_eig_trace.push_back(std::move(eigs));
      report.sweeps_run = sweep;

      const double change = std::abs(objective - objective_prev);
      objective_prev = objective;
      if (change < spec.objective_tol * std::max(1.0, std::abs(objective))) {
        report.converged = true;
        break;
      }
    }

    report.wall_time_sec = elapsed();
    return FitResult{PrecisionSet(std::move(omegas)), std::move(report)};
  } catch (const SolveError&) {
    throw;
  } catch (const Error& e) {
    report.wall_time_sec = elapsed();
    throw SolveError(std::string("solve aborted: ") + e.what(), std::move(report));
  }
}

}  // namespace mtggm

#include "mtggm/bcd.hpp"

#include "mtggm/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mtggm;

namespace {

SymmetricMatrix random_pd(Eigen::Index n, std::mt19937_64& rng, double jitter = 0.5) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = gauss(rng);
  }
  return SymmetricMatrix::from_lower(m * m.transpose() / static_cast<double>(n) +
                                     jitter * Eigen::MatrixXd::Identity(n, n));
}

TaskSuite random_suite(Eigen::Index n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> samples(5.0, 50.0);
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < k; ++i) tasks.push_back({random_pd(n, rng), samples(rng)});
  return TaskSuite(std::move(tasks));
}

}  // namespace

TEST_CASE("initialize inverts the covariance diagonal") {
  {
    const TaskSuite suite({Task{SymmetricMatrix::identity(3), 1.0}});
    const PrecisionSet init = initialize(suite);
    CHECK(init.matrix(0).dense().isApprox(Eigen::MatrixXd::Identity(3, 3)));
  }
  {
    const TaskSuite suite({Task{SymmetricMatrix::diagonal(Eigen::Vector2d(2.0, 4.0)), 1.0}});
    const PrecisionSet init = initialize(suite);
    CHECK(init.matrix(0)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(init.matrix(0)(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  }
  {
    SymmetricMatrix degenerate(2);
    degenerate.set(1, 1, 1.0);  // zero variance at variable 0
    const TaskSuite suite({Task{degenerate, 1.0}});
    CHECK_THROWS_AS(initialize(suite), DegenerateInputError);
  }
}

TEST_CASE("screening boundary cases") {
  SymmetricMatrix cov(2);
  cov.set(0, 0, 1.0);
  cov.set(1, 1, 1.0);
  cov.set(0, 1, 0.3);
  SymmetricMatrix cov2(2);
  cov2.set(0, 0, 1.0);
  cov2.set(1, 1, 1.0);
  cov2.set(0, 1, 0.4);
  const TaskSuite suite({Task{cov, 1.0}, Task{cov2, 1.0}});

  ProblemSpec spec;
  spec.rho = 0.5;
  spec.norm = NormOrder::P2;  // dual exponent 2: ||(0.3, 0.4)||_2 = 0.5
  CHECK(screen_blocks(suite, spec).size() == 2);

  spec.norm = NormOrder::PInf;  // dual exponent 1: 0.7 > 0.5
  CHECK(screen_blocks(suite, spec).empty());

  // Diagonal covariances screen every block for any positive rho.
  const TaskSuite diag({Task{SymmetricMatrix::diagonal(Eigen::Vector3d(1.0, 2.0, 3.0)), 1.0}});
  ProblemSpec tiny;
  tiny.rho = 1e-12;
  CHECK(screen_blocks(diag, tiny).size() == 3);
}

TEST_CASE("w inverse rank-2 refresh") {
  {
    // Replacing the off-diagonal couples an identity block.
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd winv = Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd new_col(2);
    new_col << 0.5, 1.0;
    update_w_inverse(w, winv, 1, new_col);
    CHECK(w(0, 1) == 0.5);
    CHECK(winv(0, 0) == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
    CHECK(winv(0, 1) == doctest::Approx(-0.5 / 0.75).epsilon(1e-12));
    CHECK(winv(1, 1) == doctest::Approx(1.0 / 0.75).epsilon(1e-12));
  }
  {
    // Random replacement chains keep the residual at working precision.
    std::mt19937_64 rng(53);
    const Eigen::Index n = 6;
    SymmetricMatrix base = random_pd(n + 1, rng, 1.0);
    Eigen::MatrixXd w = base.dense().topLeftCorner(n, n);
    Eigen::MatrixXd winv = invert_spd(w);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::normal_distribution<double> gauss(0.0, 0.2);
    for (int round = 0; round < 25; ++round) {
      const Eigen::Index j = pick(rng);
      Eigen::VectorXd col = w.col(j);
      for (Eigen::Index i = 0; i < n; ++i) col[i] += gauss(rng);
      col[j] = std::abs(col[j]) + 2.0;  // keep the block well conditioned
      update_w_inverse(w, winv, j, col);
      const double residual =
          (w * winv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
      CHECK(residual < 1e-8);
    }
  }
}

TEST_CASE("off diagonal step closed forms") {
  ProblemSpec spec;
  spec.rho = 2.0;
  spec.norm = NormOrder::PInf;

  {
    // No data signal: c = 0 keeps the entry at zero.
    std::vector<InnerView> views{{1.0, 0.0, 0.0, 1.0, 1.0}};
    CHECK(off_diagonal_step(views, spec).isZero(0.0));
  }
  {
    // Soft threshold (3 - 2) / 1.
    std::vector<InnerView> views{{1.0, 0.0, -3.0, 1.0, 1.0}};
    const Eigen::VectorXd x = off_diagonal_step(views, spec);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // Doubling every sample count together with rho leaves the max-norm
    // minimizer unchanged.
    std::vector<InnerView> views{{0.8, 0.3, -1.5, 1.2, 4.0}, {1.1, -0.2, 0.7, 0.9, 6.0}};
    ProblemSpec doubled = spec;
    doubled.rho = 2.0 * spec.rho;
    std::vector<InnerView> scaled = views;
    for (InnerView& view : scaled) view.sample_count *= 2.0;
    const Eigen::VectorXd x1 = off_diagonal_step(views, spec);
    const Eigen::VectorXd x2 = off_diagonal_step(scaled, doubled);
    CHECK((x1 - x2).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("diagonal step closed forms") {
  {
    ProblemSpec spec;
    spec.rho = 1.0;
    const Eigen::VectorXd z = diagonal_step_values(Eigen::VectorXd::Constant(1, 2.0),
                                                   Eigen::VectorXd::Constant(1, 1.0),
                                                   Eigen::VectorXd::Zero(1), spec);
    CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-15));
  }
  {
    ProblemSpec spec;
    spec.rho = 1.0;
    spec.penalize_diagonal = true;
    for (NormOrder norm : {NormOrder::P2, NormOrder::PInf}) {
      spec.norm = norm;
      const Eigen::VectorXd z = diagonal_step_values(Eigen::VectorXd::Constant(1, 1.0),
                                                     Eigen::VectorXd::Constant(1, 1.0),
                                                     Eigen::VectorXd::Zero(1), spec);
      CHECK(z[0] == doctest::Approx(0.5).epsilon(1e-9));
    }
  }
  {
    // The penalized diagonal always sits below the unpenalized one.
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> vdist(0.2, 3.0);
    std::uniform_real_distribution<double> bdist(0.0, 2.0);
    std::uniform_real_distribution<double> tdist(1.0, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index k = 3;
      Eigen::VectorXd v(k), t(k), b(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        v[i] = vdist(rng);
        t[i] = tdist(rng);
        b[i] = bdist(rng);
      }
      ProblemSpec plain;
      plain.rho = 0.7;
      ProblemSpec penalized = plain;
      penalized.penalize_diagonal = true;
      for (NormOrder norm : {NormOrder::P2, NormOrder::PInf}) {
        penalized.norm = norm;
        const Eigen::VectorXd z0 = diagonal_step_values(v, t, b, plain);
        const Eigen::VectorXd z1 = diagonal_step_values(v, t, b, penalized);
        for (Eigen::Index i = 0; i < k; ++i) {
          CHECK(z1[i] < z0[i] + 1e-12);
          CHECK(z1[i] > b[i]);
        }
      }
    }
  }
}

TEST_CASE("block view reassembly is exact") {
  std::mt19937_64 rng(61);
  const SymmetricMatrix omega = random_pd(5, rng);
  const SymmetricMatrix sigma = random_pd(5, rng);
  for (Eigen::Index n = 0; n < 5; ++n) {
    const BlockView view = make_block_view(omega, sigma, 3.0, n);
    CHECK(view.v == sigma(n, n));
    const SymmetricMatrix back = reassemble_block_view(view, n);
    CHECK((back.dense() - omega.dense()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("inner view matches an explicit permuted split") {
  std::mt19937_64 rng(67);
  const Eigen::Index n = 6;
  const SymmetricMatrix omega = random_pd(n, rng);
  const SymmetricMatrix sigma = random_pd(n, rng);
  const BlockView view = make_block_view(omega, sigma, 2.0, n - 1);
  const Eigen::MatrixXd winv = invert_spd(view.W);

  for (Eigen::Index j = 0; j < n - 1; ++j) {
    const InnerView inner = make_inner_view(winv, view.y, view.u, view.v, 2.0, j);
    CHECK(inner.h22 == winv(j, j));
    double dot = 0.0;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      if (i != j) dot += winv(i, j) * view.y[i];
    }
    CHECK(inner.h12_dot_y1 == doctest::Approx(dot).epsilon(1e-12));
    CHECK(inner.u2 == view.u[j]);
  }
}

TEST_CASE("identity covariance is a fixed point") {
  std::vector<Task> tasks{{SymmetricMatrix::identity(4), 3.0}, {SymmetricMatrix::identity(4), 5.0}};
  const TaskSuite suite(std::move(tasks));
  ProblemSpec spec;
  spec.rho = 0.25;
  const FitResult fit = solve(suite, spec);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK((fit.precisions.matrix(k).dense() - Eigen::MatrixXd::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  CHECK(fit.report.screened_blocks.size() == 4);
  CHECK(fit.report.objective_trace.back() == doctest::Approx(-4.0 * 8.0).epsilon(1e-12));
}

TEST_CASE("full screening returns the diagonal initializer") {
  std::mt19937_64 rng(71);
  const TaskSuite suite = random_suite(5, 2, rng);
  ProblemSpec spec;
  spec.norm = NormOrder::PInf;
  spec.rho = 1.01 * full_screening_rho(suite, spec.norm);
  const FitResult fit = solve(suite, spec);
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const Eigen::VectorXd expected = suite.task(k).covariance.diagonal_vector().cwiseInverse();
    CHECK((fit.precisions.matrix(k).dense() - Eigen::MatrixXd(expected.asDiagonal()))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("solve keeps iterates positive definite and the objective monotone") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::Index n = 4 + trial;
    const TaskSuite suite = random_suite(n, 2, rng);
    ProblemSpec spec;
    spec.rho = 0.5 * full_screening_rho(suite, NormOrder::PInf) * 0.2;
    spec.norm = trial % 2 == 0 ? NormOrder::PInf : NormOrder::P2;
    spec.penalize_diagonal = trial >= 2;
    spec.max_sweeps = 8;
    spec.objective_tol = 0.0;

    SolveHooks hooks;
    std::vector<double> per_update_objectives;
    hooks.after_variable_update = [&](int, Eigen::Index,
                                      const std::vector<SymmetricMatrix>& omegas) {
      for (const SymmetricMatrix& omega : omegas) CHECK(min_eigenvalue(omega) > 0.0);
      per_update_objectives.push_back(multitask_objective(suite, omegas, spec));
    };
    const FitResult fit = solve(suite, spec, hooks);
    for (std::size_t i = 1; i < per_update_objectives.size(); ++i) {
      CHECK(per_update_objectives[i] >=
            per_update_objectives[i - 1] - 1e-9 * (1.0 + std::abs(per_update_objectives[i - 1])));
    }
    CHECK(fit.report.sweeps_run == 8);
    CHECK(fit.report.objective_trace.size() == 8);
    CHECK(fit.report.min_eig_trace.size() == 8);
  }
}

TEST_CASE("single task path consistency between both norms") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 5; ++trial) {
    const TaskSuite suite = random_suite(5, 1, rng);
    ProblemSpec spec;
    spec.rho = 0.1 * full_screening_rho(suite, NormOrder::PInf);
    spec.max_sweeps = 100;
    spec.objective_tol = 1e-12;

    spec.norm = NormOrder::PInf;
    const FitResult inf_fit = solve(suite, spec);
    spec.norm = NormOrder::P2;
    const FitResult two_fit = solve(suite, spec);
    CHECK((inf_fit.precisions.matrix(0).dense() - two_fit.precisions.matrix(0).dense())
              .cwiseAbs()
              .maxCoeff() < 1e-6);
  }
}

TEST_CASE("solve is permutation equivariant") {
  std::mt19937_64 rng(83);
  const Eigen::Index n = 5;
  const TaskSuite suite = random_suite(n, 2, rng);
  ProblemSpec spec;
  spec.rho = 0.15 * full_screening_rho(suite, NormOrder::PInf);
  spec.max_sweeps = 300;
  spec.objective_tol = 0.0;

  const FitResult base = solve(suite, spec);

  const std::vector<Eigen::Index> perm{2, 4, 0, 3, 1};
  auto permute = [&](const SymmetricMatrix& m) {
    SymmetricMatrix out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) out.set(perm[i], perm[j], m(i, j));
    }
    return out;
  };
  std::vector<Task> permuted;
  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    permuted.push_back({permute(suite.task(k).covariance), suite.task(k).sample_count});
  }
  const FitResult shuffled = solve(TaskSuite(std::move(permuted)), spec);

  for (std::size_t k = 0; k < suite.task_count(); ++k) {
    const SymmetricMatrix expected = permute(base.precisions.matrix(k));
    CHECK((shuffled.precisions.matrix(k).dense() - expected.dense()).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("eigenvalues stay inside the analytic bracket after convergence") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 3; ++trial) {
    const TaskSuite suite = random_suite(5, 2, rng);
    ProblemSpec spec;
    spec.rho = 0.3 * full_screening_rho(suite, NormOrder::PInf);
    spec.max_sweeps = 200;
    spec.objective_tol = 1e-12;
    const FitResult fit = solve(suite, spec);
    const EigenBounds bounds = eigenvalue_bounds(suite, spec);
    for (std::size_t k = 0; k < suite.task_count(); ++k) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(fit.precisions.matrix(k).dense());
      CHECK(solver.eigenvalues().minCoeff() >= bounds.lower[k] - 1e-8);
      CHECK(solver.eigenvalues().maxCoeff() <= bounds.upper + 1e-8);
    }
  }
}

TEST_CASE("screening does not move the converged objective") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 3; ++trial) {
    // Scale down one variable's couplings so its block screens.
    SymmetricMatrix cov = random_pd(5, rng);
    for (Eigen::Index i = 1; i < 5; ++i) cov.set(0, i, cov(0, i) * 1e-3);
    if (min_eigenvalue(cov) <= 0.0) continue;
    const TaskSuite suite({Task{cov, 10.0}});

    ProblemSpec spec;
    spec.norm = NormOrder::PInf;
    spec.max_sweeps = 200;
    spec.objective_tol = 1e-13;
    Eigen::VectorXd stats(5);
    for (Eigen::Index n = 0; n < 5; ++n) {
      double stat = 0.0;
      for (Eigen::Index m = 0; m < 5; ++m) {
        if (m != n) stat = std::max(stat, std::abs(10.0 * cov(m, n)));
      }
      stats[n] = stat;
    }
    spec.rho = 2.0 * stats[0];  // variable 0 screens, the rest typically not
    const FitResult with = solve(suite, spec);
    REQUIRE(!with.report.screened_blocks.empty());

    SolveHooks hooks;
    hooks.disable_screening = true;
    const FitResult without = solve(suite, spec, hooks);
    const double a = with.report.objective_trace.back();
    const double b = without.report.objective_trace.back();
    CHECK(std::abs(a - b) <= 1e-8 * (1.0 + std::abs(b)));
  }
}

TEST_CASE("solve converges to a small optimality residual") {
  std::mt19937_64 rng(101);
  const TaskSuite suite = random_suite(5, 2, rng);
  ProblemSpec spec;
  spec.rho = 0.2 * full_screening_rho(suite, NormOrder::PInf);
  spec.max_sweeps = 300;
  spec.objective_tol = 1e-13;
  const FitResult fit = solve(suite, spec);
  const double residual = optimality_residual(suite, fit.precisions, spec);
  CHECK(residual < 1e-4 * static_cast<double>(suite.order()) *
                       static_cast<double>(suite.task_count()));
}

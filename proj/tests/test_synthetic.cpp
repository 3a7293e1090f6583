#include "mtggm/synthetic.hpp"

#include "mtggm/io.hpp"
#include "mtggm/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace mtggm;

TEST_CASE("ground truth generation") {
  const GroundTruth truth = generate_ground_truth(50, 2, 0.1, 12345);
  CHECK(truth.topology.diagonal().isZero());
  CHECK(truth.topology.sum() == 2 * 122);  // floor(0.1 * 1225) edges, both triangles

  for (const SymmetricMatrix& model : truth.models) {
    CHECK(min_eigenvalue(model) >= 0.1 - 1e-12);
    // Off-diagonal support stays inside the topology.
    for (Eigen::Index i = 0; i < 50; ++i) {
      for (Eigen::Index j = i + 1; j < 50; ++j) {
        if (truth.topology(i, j) == 0) CHECK(model(i, j) == 0.0);
      }
    }
  }

  // Same seed, same truth; the eigenvalue guard is checked over many seeds.
  const GroundTruth again = generate_ground_truth(50, 2, 0.1, 12345);
  CHECK((truth.models[0].dense() - again.models[0].dense()).cwiseAbs().maxCoeff() == 0.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const GroundTruth t = generate_ground_truth(12, 3, 0.3, seed);
    for (const SymmetricMatrix& model : t.models) {
      CHECK(min_eigenvalue(model) >= 0.1 - 1e-12);
    }
  }
}

TEST_CASE("sampling matches the model covariance in the large-sample limit") {
  GroundTruth truth;
  truth.topology = Eigen::MatrixXi::Zero(2, 2);
  truth.models.push_back(SymmetricMatrix::identity(2));
  truth.density = 0.0;

  const Eigen::Index t_count = 100000;
  const std::vector<Eigen::MatrixXd> data = sample_dataset(truth, {t_count}, 7);
  REQUIRE(data.size() == 1);
  CHECK(data[0].rows() == t_count);

  const double band = 5.0 / std::sqrt(static_cast<double>(t_count));
  const Eigen::RowVectorXd mean = data[0].colwise().mean();
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(mean[j]) < band);

  const Eigen::MatrixXd cov =
      data[0].transpose() * data[0] / static_cast<double>(t_count);
  CHECK((cov - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.03);

  // Determinism under the seed.
  const std::vector<Eigen::MatrixXd> replay = sample_dataset(truth, {t_count}, 7);
  CHECK((replay[0] - data[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kl divergence closed forms") {
  const SymmetricMatrix eye = SymmetricMatrix::identity(2);
  CHECK(kl_divergence(eye, eye) == doctest::Approx(0.0).epsilon(1e-14));

  const SymmetricMatrix half = SymmetricMatrix::diagonal(Eigen::Vector2d(0.5, 0.5));
  CHECK(kl_divergence(eye, half) ==
        doctest::Approx(0.5 * (1.0 - 2.0 + std::log(4.0))).epsilon(1e-12));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const GroundTruth a = generate_ground_truth(5, 1, 0.4, 100 + trial);
    const GroundTruth b = generate_ground_truth(5, 1, 0.4, 200 + trial);
    CHECK(kl_divergence(a.models[0], b.models[0]) >= -1e-12);
  }
  (void)rng;
}

TEST_CASE("support metrics counting") {
  GroundTruth truth;
  truth.topology = Eigen::MatrixXi::Zero(3, 3);
  truth.topology(0, 1) = truth.topology(1, 0) = 1;

  SymmetricMatrix est(3);
  est.set(0, 0, 1.0);
  est.set(1, 1, 1.0);
  est.set(2, 2, 1.0);
  est.set(0, 1, 0.5);
  est.set(0, 2, 0.5);
  const PrecisionSet set = PrecisionSet::unchecked({est});

  const SupportMetrics m = support_metrics(truth, set, 0.1);
  CHECK(m.sensitivity == doctest::Approx(1.0));
  CHECK(m.specificity == doctest::Approx(0.5));

  const SupportMetrics all = support_metrics(truth, set, 0.0);
  CHECK(all.sensitivity == doctest::Approx(1.0));
  CHECK(all.specificity == doctest::Approx(0.0));

  const SupportMetrics none =
      support_metrics(truth, set, std::numeric_limits<double>::infinity());
  CHECK(none.sensitivity == doctest::Approx(0.0));
  CHECK(none.specificity == doctest::Approx(1.0));
}

TEST_CASE("raising the call threshold trades sensitivity for specificity") {
  const GroundTruth truth = generate_ground_truth(8, 2, 0.3, 55);
  const PrecisionSet est = PrecisionSet::unchecked(truth.models);
  double prev_sens = 2.0;
  double prev_spec = -1.0;
  for (double threshold : {0.0, 0.05, 0.1, 0.3, 0.6, 1.5}) {
    const SupportMetrics m = support_metrics(truth, est, threshold);
    CHECK(m.sensitivity <= prev_sens + 1e-15);
    CHECK(m.specificity >= prev_spec - 1e-15);
    prev_sens = m.sensitivity;
    prev_spec = m.specificity;
  }
}

TEST_CASE("metrics are invariant under joint relabeling") {
  const GroundTruth truth = generate_ground_truth(6, 2, 0.4, 77);
  const PrecisionSet est = PrecisionSet::unchecked(truth.models);
  const SupportMetrics base = support_metrics(truth, est, 0.2);

  const std::vector<Eigen::Index> perm{3, 1, 5, 0, 2, 4};
  GroundTruth shuffled;
  shuffled.density = truth.density;
  shuffled.topology = Eigen::MatrixXi::Zero(6, 6);
  std::vector<SymmetricMatrix> models;
  for (const SymmetricMatrix& m : truth.models) {
    SymmetricMatrix out(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) {
        out.set(perm[i], perm[j], m(i, j));
        shuffled.topology(perm[i], perm[j]) = truth.topology(i, j);
      }
    }
    models.push_back(std::move(out));
  }
  shuffled.models = models;
  const SupportMetrics moved =
      support_metrics(shuffled, PrecisionSet::unchecked(models), 0.2);
  CHECK(moved.sensitivity == base.sensitivity);
  CHECK(moved.specificity == base.specificity);

  CHECK(kl_divergence(shuffled.models[0], shuffled.models[1]) ==
        doctest::Approx(kl_divergence(truth.models[0], truth.models[1])).epsilon(1e-12));
}

TEST_CASE("roc sweep on a small synthetic instance") {
  const GroundTruth truth = generate_ground_truth(10, 2, 0.2, 99);
  const std::vector<Eigen::MatrixXd> data = sample_dataset(truth, {200, 200}, 100);

  std::vector<Task> tasks;
  for (const Eigen::MatrixXd& d : data) {
    MatrixFile file;
    file.values = d;
    auto [cov, t_count] = sample_covariance(file, true);
    tasks.push_back({std::move(cov), t_count});
  }
  const TaskSuite suite(std::move(tasks));

  ProblemSpec spec;
  spec.norm = NormOrder::PInf;
  spec.rho = 1.0;  // grid overrides

  const double rho_top = full_screening_rho(suite, spec.norm);
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(rho_top * std::pow(10.0, -3.0 * i / 7.0));

  const RocSweepResult sweep = roc_sweep(suite, truth, spec, grid);
  REQUIRE(sweep.points.size() == grid.size());
  for (const RocPoint& point : sweep.points) CHECK(point.ok);
  CHECK(std::is_sorted(sweep.points.begin(), sweep.points.end(),
                       [](const RocPoint& a, const RocPoint& b) { return a.rho < b.rho; }));
  REQUIRE(sweep.auc.has_value());
  CHECK(*sweep.auc > 0.5);

  // Full screening at the top of the grid: no edges called.
  CHECK(sweep.points.back().metrics.sensitivity == doctest::Approx(0.0));

  // Tuning helps: the best mean KL beats the most regularized point.
  double best_kl = 1e300;
  for (const RocPoint& point : sweep.points) best_kl = std::min(best_kl, point.kl_mean);
  CHECK(best_kl < sweep.points.back().kl_mean);

  // Degenerate grid: one point, no area.
  const RocSweepResult single = roc_sweep(suite, truth, spec, {grid.front()});
  CHECK(single.points.size() == 1);
  CHECK(!single.auc.has_value());
}

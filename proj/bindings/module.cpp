#include "mtggm/bcd.hpp"
#include "mtggm/io.hpp"
#include "mtggm/model.hpp"
#include "mtggm/subproblems.hpp"
#include "mtggm/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

namespace py = pybind11;
using namespace mtggm;

namespace {

TaskSuite suite_from_arrays(const std::vector<Eigen::MatrixXd>& covariances,
                            const std::vector<double>& sample_counts) {
  if (covariances.size() != sample_counts.size()) {
    throw DegenerateInputError("covariances and sample_counts differ in length");
  }
  std::vector<Task> tasks;
  tasks.reserve(covariances.size());
  for (std::size_t k = 0; k < covariances.size(); ++k) {
    tasks.push_back({SymmetricMatrix::symmetrized(covariances[k]), sample_counts[k]});
  }
  return TaskSuite(std::move(tasks));
}

PrecisionSet set_from_arrays(const std::vector<Eigen::MatrixXd>& matrices) {
  std::vector<SymmetricMatrix> out;
  out.reserve(matrices.size());
  for (const Eigen::MatrixXd& m : matrices) out.push_back(SymmetricMatrix::symmetrized(m));
  return PrecisionSet::unchecked(std::move(out));
}

std::vector<Eigen::MatrixXd> arrays_from_set(const PrecisionSet& set) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) out.push_back(set.matrix(k).dense());
  return out;
}

ProblemSpec spec_from_args(double rho, const std::string& p, bool penalize_diagonal,
                           int max_sweeps, double tol, int newton_iters) {
  ProblemSpec spec;
  spec.rho = rho;
  spec.norm = norm_from_string(p);
  spec.penalize_diagonal = penalize_diagonal;
  spec.max_sweeps = max_sweeps;
  spec.objective_tol = tol;
  spec.newton_iters = newton_iters;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint sparse precision-matrix estimation across related tasks";
  m.attr("__version__") = MTGGM_VERSION;

  py::register_exception<Error>(m, "MtggmError", PyExc_RuntimeError);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("objective_trace", &FitReport::objective_trace)
      .def_readonly("min_eig_trace", &FitReport::min_eig_trace)
      .def_readonly("screened_blocks", &FitReport::screened_blocks)
      .def_readonly("sweeps_run", &FitReport::sweeps_run)
      .def_readonly("newton_fallbacks", &FitReport::newton_fallbacks)
      .def_readonly("wall_time_sec", &FitReport::wall_time_sec)
      .def_readonly("converged", &FitReport::converged);

  py::class_<SupportMetrics>(m, "SupportMetrics")
      .def_readonly("sensitivity", &SupportMetrics::sensitivity)
      .def_readonly("specificity", &SupportMetrics::specificity)
      .def_readonly("threshold", &SupportMetrics::threshold);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def_property_readonly("topology",
                             [](const GroundTruth& t) { return t.topology; })
      .def_property_readonly("models",
                             [](const GroundTruth& t) {
                               std::vector<Eigen::MatrixXd> out;
                               for (const SymmetricMatrix& model : t.models)
                                 out.push_back(model.dense());
                               return out;
                             })
      .def_readonly("density", &GroundTruth::density);

  m.def(
      "fit",
      [](const std::vector<Eigen::MatrixXd>& covariances, const std::vector<double>& counts,
         double rho, const std::string& p, bool penalize_diagonal, int max_sweeps, double tol,
         int newton_iters) {
        const TaskSuite suite = suite_from_arrays(covariances, counts);
        const ProblemSpec spec =
            spec_from_args(rho, p, penalize_diagonal, max_sweeps, tol, newton_iters);
        FitResult result = solve(suite, spec);
        return py::make_tuple(arrays_from_set(result.precisions), result.report);
      },
      py::arg("covariances"), py::arg("sample_counts"), py::arg("rho"), py::arg("p") = "inf",
      py::arg("penalize_diagonal") = false, py::arg("max_sweeps") = 10, py::arg("tol") = 1e-6,
      py::arg("newton_iters") = 10,
      "Jointly estimate sparse precision matrices; returns (matrices, report)");

  m.def(
      "multitask_objective",
      [](const std::vector<Eigen::MatrixXd>& covariances, const std::vector<double>& counts,
         const std::vector<Eigen::MatrixXd>& precisions, double rho, const std::string& p,
         bool penalize_diagonal) {
        return multitask_objective(suite_from_arrays(covariances, counts),
                                   set_from_arrays(precisions),
                                   spec_from_args(rho, p, penalize_diagonal, 10, 1e-6, 10));
      },
      py::arg("covariances"), py::arg("sample_counts"), py::arg("precisions"), py::arg("rho"),
      py::arg("p") = "inf", py::arg("penalize_diagonal") = false);

  m.def(
      "optimality_residual",
      [](const std::vector<Eigen::MatrixXd>& covariances, const std::vector<double>& counts,
         const std::vector<Eigen::MatrixXd>& precisions, double rho, const std::string& p,
         bool penalize_diagonal) {
        return optimality_residual(suite_from_arrays(covariances, counts),
                                   set_from_arrays(precisions),
                                   spec_from_args(rho, p, penalize_diagonal, 10, 1e-6, 10));
      },
      py::arg("covariances"), py::arg("sample_counts"), py::arg("precisions"), py::arg("rho"),
      py::arg("p") = "inf", py::arg("penalize_diagonal") = false);

  m.def(
      "gaussian_log_likelihood",
      [](const Eigen::MatrixXd& cov, const Eigen::MatrixXd& prec) {
        return gaussian_log_likelihood(SymmetricMatrix::symmetrized(cov),
                                       SymmetricMatrix::symmetrized(prec));
      },
      py::arg("cov"), py::arg("prec"));

  m.def(
      "l1p_norm",
      [](const std::vector<Eigen::MatrixXd>& matrices, const std::string& p) {
        std::vector<SymmetricMatrix> ms;
        for (const Eigen::MatrixXd& m : matrices) ms.push_back(SymmetricMatrix::symmetrized(m));
        return l1p_norm(ms, norm_from_string(p));
      },
      py::arg("matrices"), py::arg("p") = "inf");

  m.def(
      "eigenvalue_bounds",
      [](const std::vector<Eigen::MatrixXd>& covariances, const std::vector<double>& counts,
         double rho, const std::string& p) {
        const EigenBounds bounds = eigenvalue_bounds(
            suite_from_arrays(covariances, counts), spec_from_args(rho, p, false, 10, 1e-6, 10));
        return py::make_tuple(bounds.lower, bounds.upper);
      },
      py::arg("covariances"), py::arg("sample_counts"), py::arg("rho"), py::arg("p") = "inf");

  m.def(
      "screen_blocks",
      [](const std::vector<Eigen::MatrixXd>& covariances, const std::vector<double>& counts,
         double rho, const std::string& p) {
        return screen_blocks(suite_from_arrays(covariances, counts),
                             spec_from_args(rho, p, false, 10, 1e-6, 10));
      },
      py::arg("covariances"), py::arg("sample_counts"), py::arg("rho"), py::arg("p") = "inf");

  m.def(
      "solve_lp_separable_quadratic",
      [](const Eigen::VectorXd& q, const Eigen::VectorXd& c, double rho, const std::string& p,
         int newton_iters) {
        return solve_lp_separable_quadratic({q, c, rho}, norm_from_string(p), newton_iters).x;
      },
      py::arg("q"), py::arg("c"), py::arg("rho"), py::arg("p") = "inf",
      py::arg("newton_iters") = 10);

  m.def(
      "solve_quadratic_knapsack",
      [](const Eigen::VectorXd& q, const Eigen::VectorXd& a, double rho) {
        const KnapsackSolution s = solve_quadratic_knapsack(q, a, rho);
        return py::make_tuple(s.values, s.nu, s.active_count);
      },
      py::arg("q"), py::arg("a"), py::arg("rho"));

  m.def(
      "solve_trust_region_dual",
      [](const Eigen::VectorXd& q, const Eigen::VectorXd& c, double rho, int iters) {
        const TrustRegionSolution s = solve_trust_region_dual(q, c, rho, iters);
        return py::make_tuple(s.x, s.lambda);
      },
      py::arg("q"), py::arg("c"), py::arg("rho"), py::arg("iters") = 10);

  m.def(
      "solve_log_knapsack",
      [](const Eigen::VectorXd& q, const Eigen::VectorXd& c, const Eigen::VectorXd& b, double rho,
         int newton_iters) {
        const KnapsackSolution s = solve_log_knapsack({q, c, b, rho}, newton_iters);
        return py::make_tuple(s.values, s.nu, s.active_count);
      },
      py::arg("q"), py::arg("c"), py::arg("b"), py::arg("rho"), py::arg("newton_iters") = 10);

  m.def(
      "solve_log_trust_region",
      [](const Eigen::VectorXd& q, const Eigen::VectorXd& c, const Eigen::VectorXd& b, double rho,
         int newton_iters) {
        const LogTrustRegionSolution s = solve_log_trust_region({q, c, b, rho}, newton_iters);
        return py::make_tuple(s.r, s.lambda);
      },
      py::arg("q"), py::arg("c"), py::arg("b"), py::arg("rho"), py::arg("newton_iters") = 10);

  m.def(
      "generate_ground_truth",
      [](Eigen::Index n, std::size_t k, double density, std::uint64_t seed) {
        return generate_ground_truth(n, k, density, seed);
      },
      py::arg("n"), py::arg("k"), py::arg("density"), py::arg("seed"));

  m.def(
      "sample_dataset",
      [](const GroundTruth& truth, const std::vector<Eigen::Index>& counts, std::uint64_t seed) {
        return sample_dataset(truth, counts, seed);
      },
      py::arg("truth"), py::arg("samples_per_task"), py::arg("seed"));

  m.def(
      "kl_divergence",
      [](const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
        return kl_divergence(SymmetricMatrix::symmetrized(truth),
                             SymmetricMatrix::symmetrized(estimate));
      },
      py::arg("truth_prec"), py::arg("est_prec"));

  m.def(
      "support_metrics",
      [](const GroundTruth& truth, const std::vector<Eigen::MatrixXd>& estimates,
         double threshold) { return support_metrics(truth, set_from_arrays(estimates), threshold); },
      py::arg("truth"), py::arg("estimates"), py::arg("threshold"));

  m.def(
      "sample_covariance",
      [](const Eigen::MatrixXd& samples, bool center) {
        MatrixFile file;
        file.values = samples;
        auto [cov, t_count] = sample_covariance(file, center);
        return py::make_tuple(cov.dense(), t_count);
      },
      py::arg("samples"), py::arg("center") = true);
}

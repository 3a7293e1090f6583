#pragma once

#include "mtggm/types.hpp"

namespace mtggm {

// log det of a positive definite matrix via Cholesky; throws
// DefinitenessError when the factorization fails.
double log_det_pd(const SymmetricMatrix& m);

// Largest eigenvalue of a symmetric positive semidefinite matrix by power
// iteration (200 iterations, or relative change below 1e-12).
double spectral_norm(const SymmetricMatrix& m);

// Gaussian log-likelihood: log det(prec) - <cov, prec>.
double gaussian_log_likelihood(const SymmetricMatrix& cov, const SymmetricMatrix& prec);

// Coupling norm: sum over all N^2 positions of the lp norm of the K entries
// at that position. The diagonal is included; callers subtract
// l1p_diagonal() when it is not penalized.
double l1p_norm(const std::vector<SymmetricMatrix>& matrices, NormOrder p);
double l1p_norm(const PrecisionSet& precs, NormOrder p);

// Diagonal contribution to l1p_norm (sum over the N diagonal positions).
double l1p_diagonal(const std::vector<SymmetricMatrix>& matrices, NormOrder p);

// Penalty value actually charged under the given configuration.
double regularizer_value(const std::vector<SymmetricMatrix>& matrices, const ProblemSpec& spec);

// Penalized joint objective: sum_k T_k * loglik_k - rho * R.
double multitask_objective(const TaskSuite& suite, const std::vector<SymmetricMatrix>& matrices,
                           const ProblemSpec& spec);
double multitask_objective(const TaskSuite& suite, const PrecisionSet& precs,
                           const ProblemSpec& spec);

// Per-task lower bounds 1/(||cov||_2 + N rho / T) and shared upper bound
// N K / rho on the optimal eigenvalues.
EigenBounds eigenvalue_bounds(const TaskSuite& suite, const ProblemSpec& spec);

// Zero-gap diagnostic |-NK + sum_k T_k <cov_k, prec_k> + rho R|; vanishes at
// the exact optimum. A diagnostic only, not a certified distance.
double optimality_residual(const TaskSuite& suite, const std::vector<SymmetricMatrix>& matrices,
                           const ProblemSpec& spec);
double optimality_residual(const TaskSuite& suite, const PrecisionSet& precs,
                           const ProblemSpec& spec);

}  // namespace mtggm

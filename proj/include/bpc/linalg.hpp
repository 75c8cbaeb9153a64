#pragma once

#include <Eigen/Dense>

namespace bpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Cholesky factor (lower) of an SPD matrix. On failure a diagonal jitter of
/// 1e-8 is added and the factorization retried once; a second failure throws
/// IllConditionedError with `what` in the message.
Eigen::LLT<MatrixXd> chol_spd(const MatrixXd& a, const char* what);

/// Inverse of an SPD matrix via Cholesky (same jitter policy).
MatrixXd spd_inverse(const MatrixXd& a, const char* what);

/// log|A| for SPD A.
double spd_log_det(const MatrixXd& a, const char* what);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration,
/// converged to the given relative tolerance.
double power_iteration_max_eig(const MatrixXd& a, double rel_tol = 1e-6,
                               int max_iters = 100000);

/// log of the multivariate gamma function, log Gamma_d(a).
double log_multigamma(int d, double a);

inline MatrixXd symmetrize(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace bpc

#include "bpc/linalg.hpp"

#include <cmath>
#include <string>

#include "bpc/errors.hpp"

namespace bpc {

namespace {
constexpr double kJitter = 1e-8;
}

Eigen::LLT<MatrixXd> chol_spd(const MatrixXd& a, const char* what) {
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt;
    MatrixXd jittered = a + kJitter * MatrixXd::Identity(a.rows(), a.cols());
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt;
    throw IllConditionedError(std::string("Cholesky failed for ") + what);
}

MatrixXd spd_inverse(const MatrixXd& a, const char* what) {
    auto llt = chol_spd(a, what);
    MatrixXd inv = llt.solve(MatrixXd::Identity(a.rows(), a.cols()));
    return symmetrize(inv);
}

double spd_log_det(const MatrixXd& a, const char* what) {
    auto llt = chol_spd(a, what);
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double power_iteration_max_eig(const MatrixXd& a, double rel_tol, int max_iters) {
    const auto n = a.rows();
    if (n == 1) return a(0, 0);
    VectorXd v = VectorXd::Ones(n).normalized();
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        VectorXd av = a * v;
        double norm = av.norm();
        if (norm == 0.0) return 0.0;
        v = av / norm;
        double next = v.dot(a * v);
        if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
        lambda = next;
    }
    return lambda;
}

double log_multigamma(int d, double a) {
    double out = 0.25 * d * (d - 1) * std::log(M_PI);
    for (int j = 1; j <= d; ++j) out += std::lgamma(a + 0.5 * (1 - j));
    return out;
}

}  // namespace bpc

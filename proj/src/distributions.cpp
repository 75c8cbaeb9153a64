#include "bpc/distributions.hpp"

#include <cmath>
#include <string>

#include "bpc/errors.hpp"

namespace bpc {

void MatrixNormalWishart::validate() const {
    const auto dy = out_dim();
    const auto dx = in_dim();
    if (col_cov.rows() != dx || col_cov.cols() != dx)
        throw ShapeError("col_cov must be d_x x d_x");
    if (scale.rows() != dy || scale.cols() != dy)
        throw ShapeError("scale must be d_y x d_y");
    if (!(dof > static_cast<double>(dy) - 1.0))
        throw DegeneratePosteriorError("Wishart dof must exceed d_y - 1");
    chol_spd(col_cov, "col_cov (V)");
    chol_spd(scale, "scale (Psi)");
}

NaturalParams& NaturalParams::operator+=(const NaturalParams& rhs) {
    eta1 += rhs.eta1;
    eta2 += rhs.eta2;
    eta3 += rhs.eta3;
    eta4 += rhs.eta4;
    return *this;
}

NaturalParams operator+(NaturalParams lhs, const NaturalParams& rhs) {
    lhs += rhs;
    return lhs;
}

NaturalParams operator*(double k, const NaturalParams& p) {
    return {k * p.eta1, k * p.eta2, k * p.eta3, k * p.eta4};
}

NaturalParams natural_from_moment(const MatrixNormalWishart& p) {
    const double dy = static_cast<double>(p.out_dim());
    const double dx = static_cast<double>(p.in_dim());
    MatrixXd v_inv = spd_inverse(p.col_cov, "col_cov (V)");
    MatrixXd psi_inv = spd_inverse(p.scale, "scale (Psi)");
    NaturalParams eta;
    eta.eta1 = v_inv;
    eta.eta2 = v_inv * p.mean.transpose();
    eta.eta3 = symmetrize(psi_inv + p.mean * v_inv * p.mean.transpose());
    eta.eta4 = p.dof - dy + dx - 1.0;
    return eta;
}

MatrixNormalWishart moment_from_natural(const NaturalParams& eta) {
    const double dy = static_cast<double>(eta.out_dim());
    const double dx = static_cast<double>(eta.in_dim());
    MatrixNormalWishart p;
    auto llt = chol_spd(eta.eta1, "eta1");
    p.col_cov = symmetrize(llt.solve(MatrixXd::Identity(eta.eta1.rows(), eta.eta1.cols())));
    MatrixXd v_eta2 = llt.solve(eta.eta2);  // V^-1 x = eta2  =>  x = V eta2 = M^T
    p.mean = v_eta2.transpose();
    MatrixXd psi_inv = symmetrize(eta.eta3 - eta.eta2.transpose() * v_eta2);
    Eigen::LLT<MatrixXd> psi_llt(psi_inv);
    if (psi_llt.info() != Eigen::Success)
        throw DegeneratePosteriorError(
            "eta3 - eta2^T eta1^-1 eta2 lost positive definiteness");
    p.scale = symmetrize(psi_llt.solve(MatrixXd::Identity(psi_inv.rows(), psi_inv.cols())));
    p.dof = eta.eta4 + dy - dx + 1.0;
    return p;
}

MatrixXd e_sigma_inv(const MatrixNormalWishart& p) { return p.dof * p.scale; }

MatrixXd e_sigma_inv_w(const MatrixNormalWishart& p) {
    return p.dof * p.scale * p.mean;
}

MatrixXd e_wt_sigma_inv_w(const MatrixNormalWishart& p) {
    const double dy = static_cast<double>(p.out_dim());
    return symmetrize(p.mean.transpose() * (p.dof * p.scale) * p.mean + dy * p.col_cov);
}

MatrixXd e_sigma(const MatrixNormalWishart& p) {
    const double dy = static_cast<double>(p.out_dim());
    if (!(p.dof > dy + 1.0))
        throw UndefinedMeanError("<Sigma> requires nu > d_y + 1");
    return spd_inverse(p.scale, "scale (Psi)") / (p.dof - dy - 1.0);
}

std::pair<MatrixXd, MatrixXd> sample_mnw(const MatrixNormalWishart& p, Rng& rng) {
    const auto dy = p.out_dim();
    const auto dx = p.in_dim();

    // Bartlett: Sigma^-1 = (L A)(L A)^T with Psi = L L^T, A lower triangular.
    MatrixXd l_psi = chol_spd(p.scale, "scale (Psi)").matrixL();
    MatrixXd a = MatrixXd::Zero(dy, dy);
    for (Eigen::Index i = 0; i < dy; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(p.dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    MatrixXd la = l_psi * a;
    MatrixXd sigma_inv = symmetrize(la * la.transpose());

    // W = M + C_Sigma X C_V^T given the drawn Sigma.
    MatrixXd sigma = spd_inverse(sigma_inv, "sampled Sigma^-1");
    MatrixXd c_sigma = chol_spd(sigma, "sampled Sigma").matrixL();
    MatrixXd c_v = chol_spd(p.col_cov, "col_cov (V)").matrixL();
    MatrixXd x(dy, dx);
    for (Eigen::Index i = 0; i < dy; ++i)
        for (Eigen::Index j = 0; j < dx; ++j) x(i, j) = rng.normal();
    MatrixXd w = p.mean + c_sigma * x * c_v.transpose();
    return {std::move(w), std::move(sigma_inv)};
}

double mnw_log_pdf(const MatrixXd& w, const MatrixXd& sigma_inv,
                   const MatrixNormalWishart& p) {
    const auto dy = p.out_dim();
    const auto dx = p.in_dim();
    const double nu = p.dof;

    MatrixXd v_inv = spd_inverse(p.col_cov, "col_cov (V)");
    MatrixXd psi_inv = spd_inverse(p.scale, "scale (Psi)");
    double log_det_sigma_inv = spd_log_det(sigma_inv, "sigma_inv");

    MatrixXd resid = w - p.mean;
    double quad = (sigma_inv * resid * v_inv * resid.transpose()).trace();

    double out = -0.5 * quad;
    out += 0.5 * (dx + nu - dy - 1.0) * log_det_sigma_inv;
    out += -0.5 * (sigma_inv * psi_inv).trace();
    out += -0.5 * dy * dx * std::log(2.0 * M_PI);
    out += -0.5 * dy * spd_log_det(p.col_cov, "col_cov (V)");
    out += 0.5 * nu * spd_log_det(psi_inv, "Psi^-1");
    out += -0.5 * nu * dy * std::log(2.0);
    out += -log_multigamma(static_cast<int>(dy), 0.5 * nu);
    return out;
}

double gaussian_log_pdf(const VectorXd& y, const GaussianMoments& moments) {
    const auto d = y.size();
    if (moments.mean.size() != d || moments.cov.rows() != d)
        throw ShapeError("gaussian_log_pdf: dimension mismatch");
    auto llt = chol_spd(moments.cov, "Gaussian covariance");
    VectorXd diff = y - moments.mean;
    double quad = diff.dot(llt.solve(diff));
    double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (d * std::log(2.0 * M_PI) + log_det + quad);
}

}  // namespace bpc

#pragma once

#include <utility>

#include "bpc/linalg.hpp"
#include "bpc/rng.hpp"

namespace bpc {

/// Joint distribution over a weight matrix W (d_y x d_x) and a noise
/// precision Sigma^-1 (d_y x d_y), in moment form: W | Sigma ~ MN(M, Sigma, V)
/// with row covariance Sigma and column covariance V, and
/// Sigma^-1 ~ Wishart(Psi, nu).
struct MatrixNormalWishart {
    MatrixXd mean;     // M, d_y x d_x
    MatrixXd col_cov;  // V, d_x x d_x, SPD
    MatrixXd scale;    // Psi, d_y x d_y, SPD
    double dof = 0.0;  // nu, > d_y - 1

    Eigen::Index out_dim() const { return mean.rows(); }
    Eigen::Index in_dim() const { return mean.cols(); }

    /// Throws unless V and Psi admit a Cholesky factorization and
    /// nu > d_y - 1.
    void validate() const;
};

/// The same distribution in natural-parameter coordinates, where conjugate
/// updates are additive. eta2 is stored d_x x d_y (the transpose of M V^-1)
/// so increments of the form f z^T add directly.
struct NaturalParams {
    MatrixXd eta1;     // V^-1, d_x x d_x
    MatrixXd eta2;     // V^-1 M^T, d_x x d_y
    MatrixXd eta3;     // Psi^-1 + M V^-1 M^T, d_y x d_y
    double eta4 = 0.0; // nu - d_y + d_x - 1

    Eigen::Index out_dim() const { return eta2.cols(); }
    Eigen::Index in_dim() const { return eta2.rows(); }

    NaturalParams& operator+=(const NaturalParams& rhs);
};

NaturalParams operator+(NaturalParams lhs, const NaturalParams& rhs);
NaturalParams operator*(double k, const NaturalParams& p);

/// Mean / covariance pair for a Gaussian belief over one layer's activity.
struct GaussianMoments {
    VectorXd mean;
    MatrixXd cov;
};

NaturalParams natural_from_moment(const MatrixNormalWishart& p);
MatrixNormalWishart moment_from_natural(const NaturalParams& eta);

/// <Sigma^-1> = nu * Psi
MatrixXd e_sigma_inv(const MatrixNormalWishart& p);

/// <Sigma^-1 W> = nu * Psi * M
MatrixXd e_sigma_inv_w(const MatrixNormalWishart& p);

/// <W^T Sigma^-1 W> = M^T (nu Psi) M + d_y * V
MatrixXd e_wt_sigma_inv_w(const MatrixNormalWishart& p);

/// <Sigma> = Psi^-1 / (nu - d_y - 1); requires nu > d_y + 1.
MatrixXd e_sigma(const MatrixNormalWishart& p);

/// One joint draw (W, Sigma^-1). Sigma^-1 comes from the Bartlett
/// construction; W is then drawn from the conditional matrix normal.
std::pair<MatrixXd, MatrixXd> sample_mnw(const MatrixNormalWishart& p, Rng& rng);

/// Joint log density of (W, Sigma^-1) under p, all normalizing terms included.
double mnw_log_pdf(const MatrixXd& w, const MatrixXd& sigma_inv,
                   const MatrixNormalWishart& p);

double gaussian_log_pdf(const VectorXd& y, const GaussianMoments& moments);

}  // namespace bpc

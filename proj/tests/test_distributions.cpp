#include <doctest.h>

#include <cmath>

#include "bpc/distributions.hpp"
#include "bpc/errors.hpp"
#include "test_util.hpp"

using namespace bpc;
using test::random_mnw;
using test::random_spd;

namespace {

double max_abs_diff(const MatrixXd& a, const MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Scalar reduction of the joint density: N(w | M, V/tau) * Gamma(tau | nu/2, 2 Psi).
double normal_gamma_log_pdf(double w, double tau, const MatrixNormalWishart& p) {
    const double m = p.mean(0, 0), v = p.col_cov(0, 0), psi = p.scale(0, 0), nu = p.dof;
    double out = -0.5 * std::log(2.0 * M_PI * v / tau) -
                 tau * (w - m) * (w - m) / (2.0 * v);
    out += (0.5 * nu - 1.0) * std::log(tau) - tau / (2.0 * psi) -
           0.5 * nu * std::log(2.0 * psi) - std::lgamma(0.5 * nu);
    return out;
}

struct McMoments {
    MatrixXd mean, se;
};

// Elementwise sample mean and standard error of a matrix-valued statistic.
template <typename F>
McMoments mc_moments(int n, Eigen::Index rows, Eigen::Index cols, F&& draw) {
    MatrixXd sum = MatrixXd::Zero(rows, cols);
    MatrixXd sum_sq = MatrixXd::Zero(rows, cols);
    for (int i = 0; i < n; ++i) {
        MatrixXd s = draw();
        sum += s;
        sum_sq += s.cwiseProduct(s);
    }
    McMoments out;
    out.mean = sum / n;
    MatrixXd var = (sum_sq / n - out.mean.cwiseProduct(out.mean)) * (n / (n - 1.0));
    out.se = (var / n).cwiseSqrt();
    return out;
}

void check_within_3se(const MatrixXd& analytic, const McMoments& mc) {
    for (Eigen::Index i = 0; i < analytic.rows(); ++i)
        for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
            INFO("entry (", i, ",", j, "): analytic=", analytic(i, j),
                 " mc=", mc.mean(i, j), " se=", mc.se(i, j));
            CHECK(std::abs(analytic(i, j) - mc.mean(i, j)) <= 3.0 * mc.se(i, j));
        }
}

MatrixNormalWishart scalar_mnw(double m, double v, double psi, double nu) {
    MatrixNormalWishart p;
    p.mean = MatrixXd::Constant(1, 1, m);
    p.col_cov = MatrixXd::Constant(1, 1, v);
    p.scale = MatrixXd::Constant(1, 1, psi);
    p.dof = nu;
    return p;
}

}  // namespace

TEST_CASE("natural_from_moment: zero-mean identity case") {
    MatrixNormalWishart p;
    p.mean = MatrixXd::Zero(3, 2);
    p.col_cov = MatrixXd::Identity(2, 2);
    p.scale = MatrixXd::Identity(3, 3);
    p.dof = 5.0;
    NaturalParams eta = natural_from_moment(p);
    CHECK(max_abs_diff(eta.eta1, MatrixXd::Identity(2, 2)) == 0.0);
    CHECK(eta.eta2.isZero(0.0));
    CHECK(max_abs_diff(eta.eta3, MatrixXd::Identity(3, 3)) < 1e-14);
    CHECK(eta.eta4 == doctest::Approx(3.0));  // 5 - 3 + 2 - 1

    MatrixNormalWishart back = moment_from_natural(eta);
    CHECK(max_abs_diff(back.mean, p.mean) < 1e-12);
    CHECK(max_abs_diff(back.col_cov, p.col_cov) < 1e-12);
    CHECK(max_abs_diff(back.scale, p.scale) < 1e-12);
    CHECK(back.dof == doctest::Approx(5.0));
}

TEST_CASE("natural_from_moment: scalar arithmetic") {
    auto p = scalar_mnw(2.0, 4.0, 0.5, 3.0);
    NaturalParams eta = natural_from_moment(p);
    CHECK(eta.eta1(0, 0) == doctest::Approx(0.25));
    CHECK(eta.eta2(0, 0) == doctest::Approx(0.5));
    CHECK(eta.eta3(0, 0) == doctest::Approx(3.0));  // 2 + 2*0.25*2
    CHECK(eta.eta4 == doctest::Approx(2.0));

    NaturalParams direct;
    direct.eta1 = MatrixXd::Constant(1, 1, 0.25);
    direct.eta2 = MatrixXd::Constant(1, 1, 0.5);
    direct.eta3 = MatrixXd::Constant(1, 1, 3.0);
    direct.eta4 = 2.0;
    MatrixNormalWishart back = moment_from_natural(direct);
    CHECK(back.mean(0, 0) == doctest::Approx(2.0));
    CHECK(back.col_cov(0, 0) == doctest::Approx(4.0));
    CHECK(back.scale(0, 0) == doctest::Approx(0.5));
    CHECK(back.dof == doctest::Approx(3.0));
}

TEST_CASE("natural<->moment round trips are the identity") {
    Rng rng(42);
    const std::pair<int, int> shapes[] = {{1, 1}, {3, 2}, {5, 5}};
    for (auto [d_y, d_x] : shapes) {
        for (int rep = 0; rep < 100; ++rep) {
            MatrixNormalWishart p = random_mnw(d_y, d_x, rng);
            MatrixNormalWishart back = moment_from_natural(natural_from_moment(p));
            CHECK(max_abs_diff(back.mean, p.mean) <= 1e-10);
            CHECK(max_abs_diff(back.col_cov, p.col_cov) <= 1e-10);
            CHECK(max_abs_diff(back.scale, p.scale) <= 1e-10);
            CHECK(std::abs(back.dof - p.dof) <= 1e-10);

            NaturalParams eta = natural_from_moment(p);
            NaturalParams eta_back = natural_from_moment(moment_from_natural(eta));
            CHECK(max_abs_diff(eta_back.eta1, eta.eta1) <= 1e-10);
            CHECK(max_abs_diff(eta_back.eta2, eta.eta2) <= 1e-10);
            CHECK(max_abs_diff(eta_back.eta3, eta.eta3) <= 1e-10);
            CHECK(std::abs(eta_back.eta4 - eta.eta4) <= 1e-10);
        }
    }
}

TEST_CASE("moment_from_natural rejects an indefinite Psi^-1 block") {
    NaturalParams eta;
    eta.eta1 = MatrixXd::Identity(1, 1);
    eta.eta2 = MatrixXd::Constant(1, 1, 2.0);
    eta.eta3 = MatrixXd::Constant(1, 1, 1.0);  // 1 - 4 < 0
    eta.eta4 = 2.0;
    CHECK_THROWS_AS(moment_from_natural(eta), DegeneratePosteriorError);
}

TEST_CASE("expectation formulas: fixed values") {
    CHECK(e_sigma_inv(scalar_mnw(0.0, 1.0, 2.0, 3.0))(0, 0) == doctest::Approx(6.0));

    MatrixNormalWishart p;
    p.mean = MatrixXd::Zero(2, 2);
    p.col_cov = MatrixXd::Identity(2, 2);
    p.scale = MatrixXd::Identity(2, 2);
    p.dof = 4.0;
    CHECK(max_abs_diff(e_sigma_inv(p), 4.0 * MatrixXd::Identity(2, 2)) == 0.0);
    CHECK(e_sigma_inv_w(p).isZero(0.0));

    CHECK(e_sigma_inv_w(scalar_mnw(1.5, 1.0, 2.0, 3.0))(0, 0) == doctest::Approx(9.0));
    CHECK(e_wt_sigma_inv_w(scalar_mnw(1.5, 4.0, 2.0, 3.0))(0, 0) ==
          doctest::Approx(17.5));

    MatrixNormalWishart q;
    q.mean = MatrixXd::Zero(3, 2);
    q.col_cov = MatrixXd::Identity(2, 2);
    q.scale = MatrixXd::Identity(3, 3);
    q.dof = 5.0;
    CHECK(max_abs_diff(e_wt_sigma_inv_w(q), 3.0 * MatrixXd::Identity(2, 2)) == 0.0);
}

TEST_CASE("e_sigma: fixed values and dof guard") {
    CHECK(e_sigma(scalar_mnw(0.0, 1.0, 0.5, 3.0))(0, 0) == doctest::Approx(2.0));

    MatrixNormalWishart p;
    p.mean = MatrixXd::Zero(2, 1);
    p.col_cov = MatrixXd::Identity(1, 1);
    p.scale = MatrixXd::Identity(2, 2);
    p.dof = 5.0;
    CHECK(max_abs_diff(e_sigma(p), 0.5 * MatrixXd::Identity(2, 2)) < 1e-14);

    p.dof = 3.0;  // not > d_y + 1
    CHECK_THROWS_AS(e_sigma(p), UndefinedMeanError);
}

TEST_CASE("analytic expectations match Monte Carlo") {
    const int n = 100000;
    Rng param_rng(7);
    MatrixNormalWishart p = random_mnw(3, 2, param_rng);
    Rng rng(123);

    auto mc_si = mc_moments(n, 3, 3, [&] { return sample_mnw(p, rng).second; });
    check_within_3se(e_sigma_inv(p), mc_si);

    Rng rng2(124);
    auto mc_siw = mc_moments(n, 3, 2, [&] {
        auto [w, si] = sample_mnw(p, rng2);
        return MatrixXd(si * w);
    });
    check_within_3se(e_sigma_inv_w(p), mc_siw);

    Rng rng3(125);
    auto mc_wsw = mc_moments(n, 2, 2, [&] {
        auto [w, si] = sample_mnw(p, rng3);
        return MatrixXd(w.transpose() * si * w);
    });
    check_within_3se(e_wt_sigma_inv_w(p), mc_wsw);

    Rng rng4(126);
    auto mc_sigma = mc_moments(n, 3, 3, [&] {
        auto [w, si] = sample_mnw(p, rng4);
        return spd_inverse(si, "sample");
    });
    check_within_3se(e_sigma(p), mc_sigma);
}

TEST_CASE("sample_mnw: sample means and determinism") {
    Rng param_rng(11);
    MatrixNormalWishart p = random_mnw(2, 3, param_rng);

    const int n = 100000;
    Rng rng(55);
    auto mc_w = mc_moments(n, 2, 3, [&] { return sample_mnw(p, rng).first; });
    check_within_3se(p.mean, mc_w);

    Rng a(99), b(99);
    for (int i = 0; i < 5; ++i) {
        auto [wa, sa] = sample_mnw(p, a);
        auto [wb, sb] = sample_mnw(p, b);
        CHECK(wa == wb);
        CHECK(sa == sb);
    }
}

TEST_CASE("mnw_log_pdf: scalar normal-gamma reduction") {
    auto p = scalar_mnw(0.5, 1.2, 0.8, 3.0);
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        double w = rng.normal(0.5, 1.5);
        double tau = rng.gamma(1.5, 1.6);
        MatrixXd wm = MatrixXd::Constant(1, 1, w);
        MatrixXd tm = MatrixXd::Constant(1, 1, tau);
        CHECK(mnw_log_pdf(wm, tm, p) ==
              doctest::Approx(normal_gamma_log_pdf(w, tau, p)).epsilon(1e-10));
    }
}

TEST_CASE("mnw_log_pdf: symmetric in the mean residual") {
    Rng rng(17);
    MatrixNormalWishart p = random_mnw(2, 2, rng);
    MatrixXd delta(2, 2);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) delta(i, j) = rng.normal();
    MatrixXd sigma_inv = random_spd(2, rng);
    CHECK(mnw_log_pdf(p.mean + delta, sigma_inv, p) ==
          doctest::Approx(mnw_log_pdf(p.mean - delta, sigma_inv, p)).epsilon(1e-12));
}

TEST_CASE("mnw_log_pdf: 1x1 density integrates to one") {
    auto p = scalar_mnw(0.5, 1.2, 0.8, 3.0);
    // Outer trapezoid over tau, inner over w with a tau-dependent range.
    const int n_tau = 3000, n_w = 1500;
    const double tau_lo = 1e-5, tau_hi = 40.0;
    double total = 0.0;
    double d_tau = (tau_hi - tau_lo) / n_tau;
    for (int i = 0; i <= n_tau; ++i) {
        double tau = tau_lo + i * d_tau;
        double sd = std::sqrt(p.col_cov(0, 0) / tau);
        double w_lo = p.mean(0, 0) - 10.0 * sd, w_hi = p.mean(0, 0) + 10.0 * sd;
        double d_w = (w_hi - w_lo) / n_w;
        double inner = 0.0;
        for (int j = 0; j <= n_w; ++j) {
            double w = w_lo + j * d_w;
            double val = std::exp(normal_gamma_log_pdf(w, tau, p));
            inner += (j == 0 || j == n_w) ? 0.5 * val : val;
        }
        inner *= d_w;
        total += (i == 0 || i == n_tau) ? 0.5 * inner : inner;
    }
    total *= d_tau;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));

    // and the implementation agrees with the scalar oracle, so it normalizes too
    MatrixXd wm = MatrixXd::Constant(1, 1, 0.9), tm = MatrixXd::Constant(1, 1, 1.7);
    CHECK(mnw_log_pdf(wm, tm, p) ==
          doctest::Approx(normal_gamma_log_pdf(0.9, 1.7, p)).epsilon(1e-10));
}

TEST_CASE("gaussian_log_pdf: fixed values and normalization") {
    GaussianMoments m;
    m.mean = VectorXd::Zero(3);
    m.cov = MatrixXd::Identity(3, 3) * 2.0;
    double at_mean = gaussian_log_pdf(VectorXd::Zero(3), m);
    CHECK(at_mean == doctest::Approx(-0.5 * (3.0 * std::log(2.0 * M_PI) +
                                             3.0 * std::log(2.0))));

    GaussianMoments scalar;
    scalar.mean = VectorXd::Zero(1);
    scalar.cov = MatrixXd::Identity(1, 1);
    CHECK(gaussian_log_pdf(VectorXd::Ones(1), scalar) ==
          doctest::Approx(-0.5 * std::log(2.0 * M_PI) - 0.5));

    double total = 0.0;
    const int n = 200000;
    const double lo = -10.0, hi = 10.0, dx = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        double val = std::exp(gaussian_log_pdf(VectorXd::Constant(1, lo + i * dx), scalar));
        total += (i == 0 || i == n) ? 0.5 * val : val;
    }
    CHECK(total * dx == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("validate flags bad inputs") {
    auto p = scalar_mnw(0.0, 1.0, 1.0, 0.5);
    CHECK_NOTHROW(p.validate());
    p.dof = -0.5;
    CHECK_THROWS_AS(p.validate(), DegeneratePosteriorError);

    MatrixNormalWishart bad;
    bad.mean = MatrixXd::Zero(2, 2);
    bad.col_cov = -MatrixXd::Identity(2, 2);
    bad.scale = MatrixXd::Identity(2, 2);
    bad.dof = 5.0;
    CHECK_THROWS_AS(bad.validate(), IllConditionedError);
    CHECK_THROWS_AS(natural_from_moment(bad), IllConditionedError);
}

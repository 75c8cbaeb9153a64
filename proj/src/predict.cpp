#include "bpc/predict.hpp"

#include <cmath>

#include "bpc/errors.hpp"

namespace bpc {

MatrixXd predict_deterministic(const MatrixXd& x_batch, const Posteriors& post,
                               const NetworkSpec& spec) {
    return mean_forward(spec, post, x_batch).back();
}

McPrediction predict_mc(const MatrixXd& x_batch, const Posteriors& post,
                        const NetworkSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("predict_mc: need at least one sample");
    const int L = spec.num_layers();
    const auto batch = x_batch.rows();
    Rng rng(seed);

    McPrediction out;
    out.samples.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        MatrixXd z = x_batch;
        for (int l = 1; l <= L; ++l) {
            auto [w, sigma_inv] = sample_mnw(post[l - 1].moments, rng);
            MatrixXd mean = activate_aug(z, spec) * w.transpose();
            MatrixXd sigma = spd_inverse(sigma_inv, "sampled Sigma^-1");
            MatrixXd chol = chol_spd(sigma, "sampled Sigma").matrixL();
            MatrixXd noise(mean.rows(), mean.cols());
            for (Eigen::Index i = 0; i < noise.rows(); ++i)
                for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(i, j) = rng.normal();
            z = mean + noise * chol.transpose();
        }
        out.samples.push_back(std::move(z));
    }

    const auto d_y = out.samples.front().cols();
    out.mean = MatrixXd::Zero(batch, d_y);
    for (const auto& s : out.samples) out.mean += s;
    out.mean /= static_cast<double>(n_samples);

    out.cov.assign(static_cast<std::size_t>(batch), MatrixXd::Zero(d_y, d_y));
    if (n_samples > 1) {
        for (const auto& s : out.samples)
            for (Eigen::Index n = 0; n < batch; ++n) {
                VectorXd diff = (s.row(n) - out.mean.row(n)).transpose();
                out.cov[static_cast<std::size_t>(n)] += diff * diff.transpose();
            }
        for (auto& c : out.cov) c /= static_cast<double>(n_samples - 1);
    }
    return out;
}

namespace {
inline double norm_cdf(double a) { return 0.5 * std::erfc(-a * M_SQRT1_2); }
inline double norm_pdf(double a) {
    return std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
}
}  // namespace

void relu_moments(const VectorXd& mean, const VectorXd& var, VectorXd& out_mean,
                  VectorXd& out_var) {
    const auto d = mean.size();
    out_mean.resize(d);
    out_var.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double mu = mean[i];
        const double v = var[i];
        if (v < 0.0) throw ConfigError("relu_moments: negative input variance");
        if (v == 0.0) {
            out_mean[i] = std::max(mu, 0.0);
            out_var[i] = 0.0;
            continue;
        }
        const double sd = std::sqrt(v);
        const double a = mu / sd;
        const double cdf = norm_cdf(a);
        const double pdf = norm_pdf(a);
        const double m1 = mu * cdf + sd * pdf;
        const double m2 = (mu * mu + v) * cdf + mu * sd * pdf;
        out_mean[i] = m1;
        out_var[i] = std::max(m2 - m1 * m1, 0.0);
    }
}

GaussianMoments relu_moments(const GaussianMoments& in) {
    VectorXd out_mean, out_var;
    relu_moments(in.mean, in.cov.diagonal(), out_mean, out_var);
    GaussianMoments out;
    out.mean = std::move(out_mean);
    out.cov = out_var.asDiagonal();
    return out;
}

std::vector<GaussianMoments> predict_analytic(const MatrixXd& x_batch,
                                              const Posteriors& post,
                                              const NetworkSpec& spec) {
    const int L = spec.num_layers();
    std::vector<MatrixXd> e_sig(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) e_sig[static_cast<std::size_t>(l)] = e_sigma(post[l].moments);

    std::vector<GaussianMoments> out;
    out.reserve(static_cast<std::size_t>(x_batch.rows()));
    for (Eigen::Index n = 0; n < x_batch.rows(); ++n) {
        VectorXd m = x_batch.row(n).transpose();
        MatrixXd s = MatrixXd::Zero(m.size(), m.size());
        for (int l = 1; l <= L; ++l) {
            // Activation moments; relu keeps only the diagonal of the input cov.
            VectorXd m_act;
            MatrixXd s_act;
            if (spec.activation == Activation::relu) {
                VectorXd v_act;
                relu_moments(m, s.diagonal(), m_act, v_act);
                s_act = v_act.asDiagonal();
            } else {
                m_act = m;
                s_act = s;
            }
            if (spec.bias) {
                VectorXd m_aug(m_act.size() + 1);
                m_aug << m_act, 1.0;
                MatrixXd s_aug = MatrixXd::Zero(s_act.rows() + 1, s_act.cols() + 1);
                s_aug.topLeftCorner(s_act.rows(), s_act.cols()) = s_act;
                m_act = std::move(m_aug);
                s_act = std::move(s_aug);
            }
            const auto& mnw = post[l - 1].moments;
            const MatrixXd& big_m = mnw.mean;
            double weight_scale = 1.0 + m_act.dot(mnw.col_cov * m_act) +
                                  (mnw.col_cov * s_act).trace();
            m = big_m * m_act;
            s = symmetrize(big_m * s_act * big_m.transpose() +
                           weight_scale * e_sig[static_cast<std::size_t>(l - 1)]);
        }
        out.push_back({std::move(m), std::move(s)});
    }
    return out;
}

double rmse(const MatrixXd& y_pred, const MatrixXd& y_true) {
    if (y_pred.rows() != y_true.rows() || y_pred.cols() != y_true.cols())
        throw ShapeError("rmse: shape mismatch");
    return std::sqrt((y_pred - y_true).array().square().mean());
}

double accuracy(const MatrixXd& y_pred, const MatrixXd& y_true) {
    if (y_pred.rows() != y_true.rows() || y_pred.cols() != y_true.cols())
        throw ShapeError("accuracy: shape mismatch");
    Eigen::Index correct = 0;
    for (Eigen::Index n = 0; n < y_pred.rows(); ++n) {
        Eigen::Index pi, ti;
        y_pred.row(n).maxCoeff(&pi);
        y_true.row(n).maxCoeff(&ti);
        if (pi == ti) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y_pred.rows());
}

double lpd(const MatrixXd& x_batch, const MatrixXd& y_batch, const Posteriors& post,
           const NetworkSpec& spec, const LpdOptions& opts) {
    if (opts.samples < 1) throw ConfigError("lpd: need at least one sample");
    const int L = spec.num_layers();
    const auto batch = x_batch.rows();
    Rng rng(opts.seed);

    // log N(y | mean_s, Sigma_s) per datum and sample
    MatrixXd log_liks(batch, opts.samples);
    for (int s = 0; s < opts.samples; ++s) {
        MatrixXd z = x_batch;
        MatrixXd sigma_out;
        for (int l = 1; l <= L; ++l) {
            auto [w, sigma_inv] = sample_mnw(post[l - 1].moments, rng);
            z = activate_aug(z, spec) * w.transpose();
            if (l == L) sigma_out = spd_inverse(sigma_inv, "sampled Sigma^-1");
        }
        auto llt = chol_spd(sigma_out, "sampled output Sigma");
        double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const double d_y = static_cast<double>(y_batch.cols());
        for (Eigen::Index n = 0; n < batch; ++n) {
            VectorXd diff = (y_batch.row(n) - z.row(n)).transpose();
            double quad = diff.dot(llt.solve(diff));
            log_liks(n, s) = -0.5 * (d_y * std::log(2.0 * M_PI) + log_det + quad);
        }
    }

    double total = 0.0;
    for (Eigen::Index n = 0; n < batch; ++n) {
        if (opts.mean_of_log) {
            total += log_liks.row(n).mean();
        } else {
            double mx = log_liks.row(n).maxCoeff();
            double sum_exp = (log_liks.row(n).array() - mx).exp().sum();
            total += mx + std::log(sum_exp / static_cast<double>(opts.samples));
        }
    }
    return total / static_cast<double>(batch);
}

}  // namespace bpc

#pragma once

#include <cstdint>
#include <vector>

#include "bpc/network.hpp"

namespace bpc {

enum class PredictMode { deterministic, monte_carlo, analytic };

struct PredictConfig {
    PredictMode mode = PredictMode::deterministic;
    int samples = 100;
    std::uint64_t seed = 0;
};

/// Forward pass with posterior-mean weights.
MatrixXd predict_deterministic(const MatrixXd& x_batch, const Posteriors& post,
                               const NetworkSpec& spec);

struct McPrediction {
    std::vector<MatrixXd> samples;  // one batch x d_y matrix per draw
    MatrixXd mean;                  // batch x d_y
    std::vector<MatrixXd> cov;      // per-datum d_y x d_y
};

/// Monte Carlo predictive: per draw, sample (W_l, Sigma_l) for every layer and
/// run the generative forward pass including layer noise.
McPrediction predict_mc(const MatrixXd& x_batch, const Posteriors& post,
                        const NetworkSpec& spec, int n_samples, std::uint64_t seed);

/// Moments of relu(u) for u ~ N(mean, diag(var)), matched per coordinate.
void relu_moments(const VectorXd& mean, const VectorXd& var, VectorXd& out_mean,
                  VectorXd& out_var);
/// GaussianMoments wrapper; only the diagonal of the input covariance is used.
GaussianMoments relu_moments(const GaussianMoments& in);

/// Layer-by-layer Gaussian propagation of input points through the posterior;
/// covariance is diagonalized before each activation.
std::vector<GaussianMoments> predict_analytic(const MatrixXd& x_batch,
                                              const Posteriors& post,
                                              const NetworkSpec& spec);

double rmse(const MatrixXd& y_pred, const MatrixXd& y_true);
double accuracy(const MatrixXd& y_pred, const MatrixXd& y_true);

struct LpdOptions {
    int samples = 20;
    std::uint64_t seed = 0;
    // log of the sample-averaged likelihood by default; true switches to the
    // average of per-sample log likelihoods.
    bool mean_of_log = false;
};

/// Log predictive density of targets under posterior parameter samples,
/// averaged over the batch.
double lpd(const MatrixXd& x_batch, const MatrixXd& y_batch, const Posteriors& post,
           const NetworkSpec& spec, const LpdOptions& opts);

}  // namespace bpc

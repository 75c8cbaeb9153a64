#pragma once

#include <cstdint>
#include <vector>

#include "bpc/data.hpp"
#include "bpc/network.hpp"

namespace bpc {

struct PriorSpec {
    double v_scale = 10.0;     // V0 = v_scale * I
    double psi_scale = 1000.0; // Psi0 = psi_scale * I
    double nu_offset = 2.0;    // nu0 = d_y + nu_offset
};

struct PcConfig {
    double weight_lr = 2e-4;
    double weight_decay = 0.65;
    double state_lr = 0.01;
    double state_momentum = 0.65;
    int state_iters = 10;
};

struct BpConfig {
    double lr = 1e-3;
};

// Which layers the data pins during training. targets_only trains
// unsupervised: the state is still seeded from x, but only z_L stays fixed.
enum class ClampMode { both, inputs_only, targets_only };

struct TrainConfig {
    int epochs = 10;
    int batch_size = 0;  // <= 0: full batch
    EStepConfig estep;
    double kappa_exponent = 0.25;
    PriorSpec prior;
    std::uint64_t seed = 0;
    Task task = Task::regression;
    ClampMode clamp = ClampMode::both;
    PcConfig pc;
    BpConfig bp;
};

struct EpochRecord {
    int epoch = 0;
    double train_metric = 0.0;
    double test_metric = 0.0;
    double energy = 0.0;  // mean per-datum energy (loss for bp)
    double wall_seconds = 0.0;
};

struct MetricsLog {
    std::vector<EpochRecord> records;
};

/// Hebbian sufficient statistics of one batch for layer l:
/// (sum f f^T, sum f z^T, sum z z^T, count) with f = f~(z*_{l-1}).
NaturalParams suff_stats(const LatentState& zstar, const NetworkSpec& spec, int layer);

/// Exact conjugate update: eta*_l = eta0_l + suff_stats(zstar, l) per layer.
std::vector<NaturalParams> m_step_full(const std::vector<NaturalParams>& prior_eta,
                                       const LatentState& zstar,
                                       const NetworkSpec& spec);

/// Natural-parameter blend eta <- (1-kappa) eta + kappa eta_batch_star.
NaturalParams m_step_minibatch(const NaturalParams& eta,
                               const NaturalParams& batch_eta_star, double kappa);

/// kappa_t = t^-eps, t >= 1.
double kappa_schedule(int t, double eps);

/// Zero-mean scaled-identity priors in the default configuration.
std::vector<MatrixNormalWishart> make_priors(const NetworkSpec& spec,
                                             const PriorSpec& prior);

/// Posterior initialization: the prior with the mean replaced by
/// U(-sqrt(k), sqrt(k)) entries, k = 1 / fan_in.
Posteriors init_posteriors(const NetworkSpec& spec,
                           const std::vector<MatrixNormalWishart>& priors, Rng& rng);

/// Uniform fan-in-scaled init for plain weight matrices (bias column included).
std::vector<MatrixXd> init_weights(const NetworkSpec& spec, Rng& rng);

/// Forward pass through plain weights: z_l = W_l f~(z_{l-1}).
MatrixXd weights_forward(const MatrixXd& x_batch, const std::vector<MatrixXd>& weights,
                         const NetworkSpec& spec);

/// Prediction-error energy with unit noise covariance, summed over the batch.
double pc_energy(const LatentState& state, const std::vector<MatrixXd>& weights,
                 const NetworkSpec& spec);

/// Momentum relaxation of the unclamped latent layers against pc_energy.
void pc_relax_states(LatentState& state, const std::vector<MatrixXd>& weights,
                     const NetworkSpec& spec, const PcConfig& cfg,
                     std::vector<double>* energy_trace = nullptr);

struct BpcResult {
    Posteriors posteriors;
    MetricsLog log;
};

struct BaselineResult {
    std::vector<MatrixXd> weights;
    MetricsLog log;
};

BpcResult train_bpc(const TrainTestSplit& data, const NetworkSpec& spec,
                    const TrainConfig& cfg);

/// Predictive-coding baseline: unit noise covariance, momentum relaxation of
/// the states, decoupled-weight-decay adaptive-moment weight steps.
BaselineResult train_pc(const TrainTestSplit& data, const NetworkSpec& spec,
                        const TrainConfig& cfg);

/// Backprop baseline on the identical architecture, squared-error loss.
BaselineResult train_bp(const TrainTestSplit& data, const NetworkSpec& spec,
                        const TrainConfig& cfg);

}  // namespace bpc

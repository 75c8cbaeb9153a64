#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bpc/distributions.hpp"

namespace bpc {

enum class Activation { relu, identity };

struct NetworkSpec {
    std::vector<int> dims;  // d_0 .. d_L
    Activation activation = Activation::relu;
    bool bias = true;

    int num_layers() const { return static_cast<int>(dims.size()) - 1; }
    // Width of f(z_{l-1}) as seen by layer l's weights, bias column included.
    int aug_dim(int layer) const { return dims[layer - 1] + (bias ? 1 : 0); }
    void validate() const;
};

/// Pointwise activation of a batch (rows = data points).
MatrixXd activate(const MatrixXd& z, Activation act);
/// Elementwise derivative f'(z); relu' at exactly 0 is taken as 0.
MatrixXd activate_deriv(const MatrixXd& z, Activation act);
/// f(z) with a constant-1 column appended when bias is on.
MatrixXd activate_aug(const MatrixXd& z, const NetworkSpec& spec);

/// Per-layer activities for a batch. z[l] is batch x d_l; clamped layers are
/// held fixed by every update.
struct LatentState {
    std::vector<MatrixXd> z;
    std::vector<std::uint8_t> clamped;

    int num_layers() const { return static_cast<int>(z.size()) - 1; }
};

/// Posterior over one layer's (W, Sigma), kept in natural form with the
/// moment form cached alongside.
struct LayerPosterior {
    NaturalParams eta;
    MatrixNormalWishart moments;

    static LayerPosterior from_natural(NaturalParams eta);
    static LayerPosterior from_moments(const MatrixNormalWishart& m);
    void set_natural(NaturalParams eta);
};

using Posteriors = std::vector<LayerPosterior>;

enum class StateOptimizer { plain_gd, adaptive_moment };

struct EStepConfig {
    // Negative step size means "auto": 0.9 / lambda_max(A_l) per layer,
    // refreshed whenever the posteriors change.
    double step_size = 0.01;
    bool auto_step = false;
    int max_iters = 10;
    double tol = 1e-6;
    StateOptimizer optimizer = StateOptimizer::adaptive_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

/// Deterministic forward pass z_l = M_l f~(z_{l-1}); returns all layers.
std::vector<MatrixXd> mean_forward(const NetworkSpec& spec, const Posteriors& post,
                                   const MatrixXd& x_batch);

/// Initial latent state: z_0 = x (clamped), hidden layers from the mean
/// forward pass, z_L = y and clamped when targets are given.
LatentState forward_init(const NetworkSpec& spec, const Posteriors& post,
                         const MatrixXd& x_batch,
                         const std::optional<MatrixXd>& y_batch);

/// Expected energy, summed over the batch:
///   1/2 sum_l [ (z_l - M_l f)^T (nu Psi) (z_l - M_l f) + d_y f^T V f ].
double energy(const LatentState& state, const Posteriors& post,
              const NetworkSpec& spec);

/// Exact gradient of energy() with respect to z_l (1 <= l <= L).
MatrixXd grad_z(const LatentState& state, const Posteriors& post,
                const NetworkSpec& spec, int layer);

/// 1 / lambda_max( <Sigma_l^-1> + <W_{l+1}^T Sigma_{l+1}^-1 W_{l+1}> );
/// the second term is absent for the top layer, the first for layer 0.
double alpha_bound(const Posteriors& post, const NetworkSpec& spec, int layer);

struct EStepTrace {
    std::vector<double> energies;  // after each iteration
    int iterations = 0;
};

/// Relax unclamped layers by gradient descent until the max abs change drops
/// below tol or max_iters is reached. Layers are updated in order l = 1..L
/// within each iteration.
LatentState e_step(LatentState state, const Posteriors& post,
                   const NetworkSpec& spec, const EStepConfig& cfg,
                   EStepTrace* trace = nullptr);

}  // namespace bpc

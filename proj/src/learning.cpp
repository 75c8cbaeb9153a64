#include "bpc/learning.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "bpc/errors.hpp"
#include "bpc/predict.hpp"

namespace bpc {

NaturalParams suff_stats(const LatentState& zstar, const NetworkSpec& spec, int layer) {
    if (layer < 1 || layer > zstar.num_layers())
        throw ShapeError("suff_stats: layer out of range");
    MatrixXd f = activate_aug(zstar.z[layer - 1], spec);
    const MatrixXd& z = zstar.z[layer];
    NaturalParams inc;
    inc.eta1 = f.transpose() * f;
    inc.eta2 = f.transpose() * z;
    inc.eta3 = z.transpose() * z;
    inc.eta4 = static_cast<double>(z.rows());
    return inc;
}

std::vector<NaturalParams> m_step_full(const std::vector<NaturalParams>& prior_eta,
                                       const LatentState& zstar,
                                       const NetworkSpec& spec) {
    const int L = zstar.num_layers();
    std::vector<NaturalParams> out;
    out.reserve(static_cast<std::size_t>(L));
    for (int l = 1; l <= L; ++l)
        out.push_back(prior_eta[static_cast<std::size_t>(l - 1)] +
                      suff_stats(zstar, spec, l));
    return out;
}

NaturalParams m_step_minibatch(const NaturalParams& eta,
                               const NaturalParams& batch_eta_star, double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw ConfigError("m_step_minibatch: kappa must be in (0, 1]");
    return (1.0 - kappa) * eta + kappa * batch_eta_star;
}

double kappa_schedule(int t, double eps) {
    if (t < 1) throw ConfigError("kappa_schedule: t must be >= 1");
    return std::pow(static_cast<double>(t), -eps);
}

std::vector<MatrixNormalWishart> make_priors(const NetworkSpec& spec,
                                             const PriorSpec& prior) {
    std::vector<MatrixNormalWishart> out;
    for (int l = 1; l <= spec.num_layers(); ++l) {
        const int d_y = spec.dims[l];
        const int d_x = spec.aug_dim(l);
        MatrixNormalWishart p;
        p.mean = MatrixXd::Zero(d_y, d_x);
        p.col_cov = prior.v_scale * MatrixXd::Identity(d_x, d_x);
        p.scale = prior.psi_scale * MatrixXd::Identity(d_y, d_y);
        p.dof = d_y + prior.nu_offset;
        p.validate();
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

MatrixXd uniform_fan_in_init(int d_y, int d_x_aug, int fan_in, Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    MatrixXd w(d_y, d_x_aug);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            w(i, j) = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

Posteriors init_posteriors(const NetworkSpec& spec,
                           const std::vector<MatrixNormalWishart>& priors, Rng& rng) {
    Posteriors post;
    for (int l = 1; l <= spec.num_layers(); ++l) {
        MatrixNormalWishart m = priors[static_cast<std::size_t>(l - 1)];
        m.mean = uniform_fan_in_init(spec.dims[l], spec.aug_dim(l), spec.dims[l - 1], rng);
        post.push_back(LayerPosterior::from_moments(m));
    }
    return post;
}

std::vector<MatrixXd> init_weights(const NetworkSpec& spec, Rng& rng) {
    std::vector<MatrixXd> w;
    for (int l = 1; l <= spec.num_layers(); ++l)
        w.push_back(uniform_fan_in_init(spec.dims[l], spec.aug_dim(l), spec.dims[l - 1], rng));
    return w;
}

MatrixXd weights_forward(const MatrixXd& x_batch, const std::vector<MatrixXd>& weights,
                         const NetworkSpec& spec) {
    MatrixXd z = x_batch;
    for (const auto& w : weights) z = activate_aug(z, spec) * w.transpose();
    return z;
}

namespace {

double eval_metric(const MatrixXd& y_pred, const Dataset& data) {
    if (data.task == Task::classification) return accuracy(y_pred, data.y);
    return rmse(data.norm.destandardize_y(y_pred), data.norm.destandardize_y(data.y));
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

BpcResult train_bpc(const TrainTestSplit& data, const NetworkSpec& spec,
                    const TrainConfig& cfg) {
    spec.validate();
    data.train.validate();
    Rng rng(cfg.seed);

    auto priors = make_priors(spec, cfg.prior);
    std::vector<NaturalParams> prior_eta;
    for (const auto& p : priors) prior_eta.push_back(natural_from_moment(p));
    Posteriors post = init_posteriors(spec, priors, rng);

    auto batches = make_batches(data.train, cfg.batch_size);
    const bool full_batch = batches.size() == 1;
    const int L = spec.num_layers();

    BpcResult result;
    int t_update = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto start = Clock::now();
        double energy_sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            ++t_update;
            const auto& batch = batches[b];
            try {
                LatentState state = forward_init(
                    spec, post, batch.x,
                    cfg.clamp == ClampMode::inputs_only
                        ? std::nullopt
                        : std::optional<MatrixXd>(batch.y));
                if (cfg.clamp == ClampMode::targets_only) state.clamped[0] = 0;
                LatentState zstar = e_step(std::move(state), post, spec, cfg.estep);
                energy_sum += energy(zstar, post, spec);

                for (int l = 1; l <= L; ++l) {
                    NaturalParams star =
                        prior_eta[static_cast<std::size_t>(l - 1)] + suff_stats(zstar, spec, l);
                    if (!full_batch) {
                        double kappa = kappa_schedule(t_update, cfg.kappa_exponent);
                        star = m_step_minibatch(post[static_cast<std::size_t>(l - 1)].eta,
                                                star, kappa);
                    }
                    post[static_cast<std::size_t>(l - 1)].set_natural(std::move(star));
                }
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " (epoch " +
                                      std::to_string(epoch) + ", batch " +
                                      std::to_string(b + 1) + ")");
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.energy = energy_sum / static_cast<double>(data.train.size());
        rec.train_metric = eval_metric(predict_deterministic(data.train.x, post, spec),
                                       data.train);
        rec.test_metric = data.test.size() > 0
                              ? eval_metric(predict_deterministic(data.test.x, post, spec),
                                            data.test)
                              : 0.0;
        rec.wall_seconds = seconds_since(start);
        result.log.records.push_back(rec);
    }
    result.posteriors = std::move(post);
    return result;
}

namespace {

struct AdamState {
    std::vector<MatrixXd> m, v;
    int t = 0;

    explicit AdamState(const std::vector<MatrixXd>& shapes) {
        for (const auto& w : shapes) {
            m.push_back(MatrixXd::Zero(w.rows(), w.cols()));
            v.push_back(MatrixXd::Zero(w.rows(), w.cols()));
        }
    }

    // One decoupled-decay step; decay = 0 gives plain adaptive moments.
    void step(std::vector<MatrixXd>& weights, const std::vector<MatrixXd>& grads,
              double lr, double decay) {
        ++t;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
            v[i] = b2 * v[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
            MatrixXd update =
                (m[i] / bc1).array() / ((v[i] / bc2).array().sqrt() + eps);
            weights[i] -= lr * update + lr * decay * weights[i];
        }
    }
};

MatrixXd pc_grad_z(const LatentState& state, const std::vector<MatrixXd>& weights,
                   const NetworkSpec& spec, int layer) {
    const int L = state.num_layers();
    const auto& w = weights[static_cast<std::size_t>(layer - 1)];
    MatrixXd grad =
        state.z[layer] - activate_aug(state.z[layer - 1], spec) * w.transpose();
    if (layer < L) {
        const auto& w_up = weights[static_cast<std::size_t>(layer)];
        MatrixXd resid_up =
            state.z[layer + 1] - activate_aug(state.z[layer], spec) * w_up.transpose();
        MatrixXd deriv = activate_deriv(state.z[layer], spec.activation);
        grad -= deriv.cwiseProduct((resid_up * w_up).leftCols(spec.dims[layer]));
    }
    return grad;
}

LatentState forward_init_weights(const MatrixXd& x, const MatrixXd& y,
                                 const std::vector<MatrixXd>& weights,
                                 const NetworkSpec& spec) {
    const int L = spec.num_layers();
    LatentState state;
    state.z.resize(static_cast<std::size_t>(L + 1));
    state.clamped.assign(static_cast<std::size_t>(L + 1), 0);
    state.z[0] = x;
    state.clamped[0] = 1;
    for (int l = 1; l <= L; ++l)
        state.z[l] = activate_aug(state.z[l - 1], spec) *
                     weights[static_cast<std::size_t>(l - 1)].transpose();
    state.z[L] = y;
    state.clamped[static_cast<std::size_t>(L)] = 1;
    return state;
}

}  // namespace

double pc_energy(const LatentState& state, const std::vector<MatrixXd>& weights,
                 const NetworkSpec& spec) {
    double total = 0.0;
    for (int l = 1; l <= state.num_layers(); ++l) {
        MatrixXd resid = state.z[l] - activate_aug(state.z[l - 1], spec) *
                                          weights[static_cast<std::size_t>(l - 1)].transpose();
        total += resid.squaredNorm();
    }
    return 0.5 * total;
}

void pc_relax_states(LatentState& state, const std::vector<MatrixXd>& weights,
                     const NetworkSpec& spec, const PcConfig& cfg,
                     std::vector<double>* energy_trace) {
    const int L = state.num_layers();
    std::vector<int> active;
    for (int l = 1; l <= L; ++l)
        if (!state.clamped[l]) active.push_back(l);
    if (active.empty()) return;
    std::vector<MatrixXd> velocity(static_cast<std::size_t>(L + 1));
    for (int l : active)
        velocity[static_cast<std::size_t>(l)] =
            MatrixXd::Zero(state.z[l].rows(), state.z[l].cols());
    for (int it = 0; it < cfg.state_iters; ++it) {
        for (int l : active) {
            MatrixXd g = pc_grad_z(state, weights, spec, l);
            auto& v = velocity[static_cast<std::size_t>(l)];
            v = cfg.state_momentum * v + g;
            state.z[l] -= cfg.state_lr * v;
            if (!state.z[l].allFinite())
                throw DivergenceError("pc state relaxation diverged at layer " +
                                      std::to_string(l));
        }
        if (energy_trace) energy_trace->push_back(pc_energy(state, weights, spec));
    }
}

BaselineResult train_pc(const TrainTestSplit& data, const NetworkSpec& spec,
                        const TrainConfig& cfg) {
    spec.validate();
    data.train.validate();
    Rng rng(cfg.seed);
    std::vector<MatrixXd> weights = init_weights(spec, rng);
    AdamState adam(weights);
    auto batches = make_batches(data.train, cfg.batch_size);
    const int L = spec.num_layers();

    BaselineResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto start = Clock::now();
        double energy_sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            try {
                LatentState state = forward_init_weights(batch.x, batch.y, weights, spec);
                pc_relax_states(state, weights, spec, cfg.pc);
                energy_sum += pc_energy(state, weights, spec);

                std::vector<MatrixXd> grads;
                grads.reserve(weights.size());
                for (int l = 1; l <= L; ++l) {
                    MatrixXd f = activate_aug(state.z[l - 1], spec);
                    MatrixXd resid =
                        state.z[l] - f * weights[static_cast<std::size_t>(l - 1)].transpose();
                    grads.push_back(-resid.transpose() * f);
                }
                adam.step(weights, grads, cfg.pc.weight_lr, cfg.pc.weight_decay);
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " (epoch " +
                                      std::to_string(epoch) + ", batch " +
                                      std::to_string(b + 1) + ")");
            }
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.energy = energy_sum / static_cast<double>(data.train.size());
        rec.train_metric =
            eval_metric(weights_forward(data.train.x, weights, spec), data.train);
        rec.test_metric = data.test.size() > 0
                              ? eval_metric(weights_forward(data.test.x, weights, spec),
                                            data.test)
                              : 0.0;
        rec.wall_seconds = seconds_since(start);
        result.log.records.push_back(rec);
    }
    result.weights = std::move(weights);
    return result;
}

BaselineResult train_bp(const TrainTestSplit& data, const NetworkSpec& spec,
                        const TrainConfig& cfg) {
    spec.validate();
    data.train.validate();
    Rng rng(cfg.seed);
    std::vector<MatrixXd> weights = init_weights(spec, rng);
    AdamState adam(weights);
    auto batches = make_batches(data.train, cfg.batch_size);
    const int L = spec.num_layers();

    BaselineResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto start = Clock::now();
        double loss_sum = 0.0;
        for (const auto& batch : batches) {
            // forward, keeping pre-activations
            std::vector<MatrixXd> pre(static_cast<std::size_t>(L + 1));
            std::vector<MatrixXd> act(static_cast<std::size_t>(L));
            pre[0] = batch.x;
            for (int l = 1; l <= L; ++l) {
                act[static_cast<std::size_t>(l - 1)] = activate_aug(pre[l - 1], spec);
                pre[l] = act[static_cast<std::size_t>(l - 1)] *
                         weights[static_cast<std::size_t>(l - 1)].transpose();
            }
            MatrixXd delta = 2.0 * (pre[L] - batch.y);
            loss_sum += (pre[L] - batch.y).squaredNorm();

            std::vector<MatrixXd> grads(static_cast<std::size_t>(L));
            for (int l = L; l >= 1; --l) {
                grads[static_cast<std::size_t>(l - 1)] =
                    delta.transpose() * act[static_cast<std::size_t>(l - 1)];
                if (l > 1) {
                    MatrixXd back = delta * weights[static_cast<std::size_t>(l - 1)];
                    delta = activate_deriv(pre[l - 1], spec.activation)
                                .cwiseProduct(back.leftCols(spec.dims[l - 1]));
                }
            }
            adam.step(weights, grads, cfg.bp.lr, 0.0);
            if (!weights[0].allFinite())
                throw DivergenceError("bp training diverged (epoch " +
                                      std::to_string(epoch) + ")");
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.energy = loss_sum / static_cast<double>(data.train.size());
        rec.train_metric =
            eval_metric(weights_forward(data.train.x, weights, spec), data.train);
        rec.test_metric = data.test.size() > 0
                              ? eval_metric(weights_forward(data.test.x, weights, spec),
                                            data.test)
                              : 0.0;
        rec.wall_seconds = seconds_since(start);
        result.log.records.push_back(rec);
    }
    result.weights = std::move(weights);
    return result;
}

}  // namespace bpc

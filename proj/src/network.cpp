#include "bpc/network.hpp"

#include <cmath>
#include <string>

#include "bpc/errors.hpp"

namespace bpc {

void NetworkSpec::validate() const {
    if (dims.size() < 2) throw ConfigError("network needs at least one weight layer");
    for (int d : dims)
        if (d < 1) throw ConfigError("layer sizes must be positive");
}

MatrixXd activate(const MatrixXd& z, Activation act) {
    if (act == Activation::identity) return z;
    return z.cwiseMax(0.0);
}

MatrixXd activate_deriv(const MatrixXd& z, Activation act) {
    if (act == Activation::identity) return MatrixXd::Ones(z.rows(), z.cols());
    return (z.array() > 0.0).cast<double>();
}

MatrixXd activate_aug(const MatrixXd& z, const NetworkSpec& spec) {
    MatrixXd f = activate(z, spec.activation);
    if (!spec.bias) return f;
    MatrixXd out(f.rows(), f.cols() + 1);
    out.leftCols(f.cols()) = f;
    out.col(f.cols()).setOnes();
    return out;
}

LayerPosterior LayerPosterior::from_natural(NaturalParams eta) {
    LayerPosterior p;
    p.moments = moment_from_natural(eta);
    p.eta = std::move(eta);
    return p;
}

LayerPosterior LayerPosterior::from_moments(const MatrixNormalWishart& m) {
    LayerPosterior p;
    p.eta = natural_from_moment(m);
    p.moments = m;
    return p;
}

void LayerPosterior::set_natural(NaturalParams new_eta) {
    moments = moment_from_natural(new_eta);
    eta = std::move(new_eta);
}

std::vector<MatrixXd> mean_forward(const NetworkSpec& spec, const Posteriors& post,
                                   const MatrixXd& x_batch) {
    const int L = spec.num_layers();
    if (x_batch.cols() != spec.dims[0]) throw ShapeError("x batch width != d_0");
    if (static_cast<int>(post.size()) != L)
        throw ShapeError("posterior count != number of weight layers");
    std::vector<MatrixXd> z(L + 1);
    z[0] = x_batch;
    for (int l = 1; l <= L; ++l)
        z[l] = activate_aug(z[l - 1], spec) * post[l - 1].moments.mean.transpose();
    return z;
}

LatentState forward_init(const NetworkSpec& spec, const Posteriors& post,
                         const MatrixXd& x_batch,
                         const std::optional<MatrixXd>& y_batch) {
    const int L = spec.num_layers();
    LatentState state;
    state.z = mean_forward(spec, post, x_batch);
    state.clamped.assign(L + 1, 0);
    state.clamped[0] = 1;
    if (y_batch) {
        if (y_batch->cols() != spec.dims[L]) throw ShapeError("y batch width != d_L");
        if (y_batch->rows() != x_batch.rows()) throw ShapeError("x/y batch sizes differ");
        state.z[L] = *y_batch;
        state.clamped[L] = 1;
    }
    return state;
}

double energy(const LatentState& state, const Posteriors& post,
              const NetworkSpec& spec) {
    const int L = state.num_layers();
    double total = 0.0;
    for (int l = 1; l <= L; ++l) {
        const auto& mnw = post[l - 1].moments;
        MatrixXd f = activate_aug(state.z[l - 1], spec);
        MatrixXd resid = state.z[l] - f * mnw.mean.transpose();
        MatrixXd precision = e_sigma_inv(mnw);
        total += (resid * precision).cwiseProduct(resid).sum();
        total += static_cast<double>(mnw.out_dim()) *
                 (f * mnw.col_cov).cwiseProduct(f).sum();
    }
    return 0.5 * total;
}

namespace {

// Gradient of the energy with respect to z_layer for 0 <= layer <= L; the
// own-prediction term is absent at layer 0, the top-down term at layer L.
MatrixXd grad_z_impl(const LatentState& state, const Posteriors& post,
                     const NetworkSpec& spec, int layer) {
    const int L = state.num_layers();
    MatrixXd grad;
    if (layer >= 1) {
        const auto& mnw = post[layer - 1].moments;
        MatrixXd f_below = activate_aug(state.z[layer - 1], spec);
        MatrixXd resid = state.z[layer] - f_below * mnw.mean.transpose();
        grad = resid * e_sigma_inv(mnw);  // rows: nu Psi (z - M f)
    } else {
        grad = MatrixXd::Zero(state.z[0].rows(), state.z[0].cols());
    }
    if (layer < L) {
        const auto& next = post[layer].moments;
        const int d_l = spec.dims[layer];
        MatrixXd f_here = activate_aug(state.z[layer], spec);
        MatrixXd resid_up = state.z[layer + 1] - f_here * next.mean.transpose();
        // rows: M^T (nu Psi) resid  -  d_y V f, truncated to the non-bias part
        MatrixXd back = resid_up * e_sigma_inv(next) * next.mean -
                        static_cast<double>(next.out_dim()) * (f_here * next.col_cov);
        MatrixXd deriv = activate_deriv(state.z[layer], spec.activation);
        grad -= deriv.cwiseProduct(back.leftCols(d_l));
    }
    return grad;
}

}  // namespace

MatrixXd grad_z(const LatentState& state, const Posteriors& post,
                const NetworkSpec& spec, int layer) {
    if (layer < 1 || layer > state.num_layers())
        throw ShapeError("grad_z: layer out of range");
    return grad_z_impl(state, post, spec, layer);
}

double alpha_bound(const Posteriors& post, const NetworkSpec& spec, int layer) {
    const int L = spec.num_layers();
    if (layer < 0 || layer > L) throw ShapeError("alpha_bound: layer out of range");
    const int d_l = spec.dims[layer];
    MatrixXd a = MatrixXd::Zero(d_l, d_l);
    if (layer >= 1) a += e_sigma_inv(post[layer - 1].moments);
    if (layer < L)
        a += e_wt_sigma_inv_w(post[layer].moments).topLeftCorner(d_l, d_l);
    double max_eig = power_iteration_max_eig(a);
    if (max_eig <= 0.0) return 1.0;
    return 1.0 / max_eig;
}

LatentState e_step(LatentState state, const Posteriors& post,
                   const NetworkSpec& spec, const EStepConfig& cfg,
                   EStepTrace* trace) {
    const int L = state.num_layers();
    if (cfg.max_iters < 1) throw ConfigError("e_step: max_iters must be >= 1");

    std::vector<int> active;
    for (int l = 0; l <= L; ++l)
        if (!state.clamped[l]) active.push_back(l);
    if (trace) *trace = {};
    if (active.empty()) return state;

    std::vector<double> step(L + 1, cfg.step_size);
    if (cfg.auto_step)
        for (int l : active) step[l] = 0.9 * alpha_bound(post, spec, l);

    // Adam state, allocated only when used.
    std::vector<MatrixXd> m(L + 1), v(L + 1);
    if (cfg.optimizer == StateOptimizer::adaptive_moment) {
        for (int l : active) {
            m[l] = MatrixXd::Zero(state.z[l].rows(), state.z[l].cols());
            v[l] = m[l];
        }
    }

    for (int it = 1; it <= cfg.max_iters; ++it) {
        double max_change = 0.0;
        for (int l : active) {
            MatrixXd g = grad_z_impl(state, post, spec, l);
            MatrixXd delta;
            if (cfg.optimizer == StateOptimizer::plain_gd) {
                delta = step[l] * g;
            } else {
                m[l] = cfg.beta1 * m[l] + (1.0 - cfg.beta1) * g;
                v[l] = cfg.beta2 * v[l].array().matrix() +
                       (1.0 - cfg.beta2) * g.cwiseProduct(g);
                double bc1 = 1.0 - std::pow(cfg.beta1, it);
                double bc2 = 1.0 - std::pow(cfg.beta2, it);
                delta = step[l] * (m[l] / bc1).array() /
                        ((v[l] / bc2).array().sqrt() + cfg.adam_eps);
            }
            state.z[l] -= delta;
            if (!state.z[l].allFinite())
                throw DivergenceError("e_step diverged at layer " + std::to_string(l));
            max_change = std::max(max_change, delta.cwiseAbs().maxCoeff());
        }
        if (trace) {
            trace->energies.push_back(energy(state, post, spec));
            trace->iterations = it;
        }
        if (max_change < cfg.tol) break;
    }
    return state;
}

}  // namespace bpc

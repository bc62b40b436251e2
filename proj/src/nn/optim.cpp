#include "rallypose/nn/optim.hpp"

#include <cmath>

#include "rallypose/error.hpp"

namespace rallypose::nn {

AdamState AdamState::for_parameters(std::span<Parameter* const> params) {
    AdamState s;
    for (const Parameter* p : params) {
        s.m.push_back(Tensor::zeros_like(p->value));
        s.v.push_back(Tensor::zeros_like(p->value));
    }
    return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state does not match the parameter list");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
            throw ShapeError("adam_step: shape mismatch for parameter " + p.name);
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

bool EarlyStopper::observe(int epoch, double loss) {
    if (!has_best_ || loss < best_loss_) {
        has_best_ = true;
        best_epoch_ = epoch;
        best_loss_ = loss;
        return true;
    }
    return false;
}

} // namespace rallypose::nn

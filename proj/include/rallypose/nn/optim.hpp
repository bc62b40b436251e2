#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rallypose/nn/tensor.hpp"

namespace rallypose::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t step = 0;

    static AdamState for_parameters(std::span<Parameter* const> params);
};

// One bias-corrected Adam update using each parameter's `grad`.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg = {});

// Tracks the lowest loss seen; asks to stop once `patience` epochs pass
// without a new minimum.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Returns true when `loss` is a new best.
    bool observe(int epoch, double loss);
    bool should_stop(int epoch) const { return has_best_ && epoch - best_epoch_ >= patience_; }

    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }

private:
    int patience_;
    bool has_best_ = false;
    int best_epoch_ = 0;
    double best_loss_ = 0.0;
};

} // namespace rallypose::nn

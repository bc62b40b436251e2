#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "rallypose/nn/tensor.hpp"

namespace rallypose::nn {

struct GradCheckOptions {
    double eps = 1e-6;
    // Coordinates probed per tensor; 0 probes every coordinate. Probed
    // coordinates are drawn with `seed`.
    std::size_t max_probes_per_tensor = 0;
    std::uint64_t seed = 0;
};

// Compares `analytic[k]` against central differences of `loss` with respect
// to `*inputs[k]`. `loss` must read the current contents of the inputs.
// Returns max |analytic - numeric| / max(1, |analytic|).
double grad_check(const std::function<double()>& loss, std::span<Tensor* const> inputs,
                  std::span<const Tensor> analytic, const GradCheckOptions& opts = {});

} // namespace rallypose::nn

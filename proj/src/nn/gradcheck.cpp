#include "rallypose/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rallypose/error.hpp"

namespace rallypose::nn {

double grad_check(const std::function<double()>& loss, std::span<Tensor* const> inputs,
                  std::span<const Tensor> analytic, const GradCheckOptions& opts) {
    if (inputs.size() != analytic.size()) {
        throw ShapeError("grad_check: one analytic gradient is needed per input");
    }
    std::mt19937_64 rng(opts.seed);
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Tensor& x = *inputs[k];
        if (analytic[k].shape() != x.shape()) {
            throw ShapeError("grad_check: analytic gradient shape mismatch");
        }
        std::vector<std::size_t> coords(x.size());
        std::iota(coords.begin(), coords.end(), 0);
        if (opts.max_probes_per_tensor > 0 && coords.size() > opts.max_probes_per_tensor) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(opts.max_probes_per_tensor);
        }
        for (std::size_t i : coords) {
            const double saved = x[i];
            x[i] = saved + opts.eps;
            const double up = loss();
            x[i] = saved - opts.eps;
            const double down = loss();
            x[i] = saved;
            const double numeric = (up - down) / (2.0 * opts.eps);
            const double a = analytic[k][i];
            worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
        }
    }
    return worst;
}

} // namespace rallypose::nn

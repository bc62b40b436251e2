#pragma once

// Forward/backward pairs for the layers used by the pose encoder and the shot
// classifier. Backward functions accumulate (+=) parameter gradients and
// return the gradient with respect to the layer input.

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "rallypose/nn/tensor.hpp"

namespace rallypose::nn {

// COCO-17 skeleton with self loops, symmetrically normalized:
// D^-1/2 (A + I) D^-1/2.
struct SkeletonGraph {
    Matrix adjacency;  // 0/1, no self loops
    Matrix normalized;

    static SkeletonGraph from_edges(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges);
    static const SkeletonGraph& coco();
    // Self loops only; normalizes to the identity.
    static SkeletonGraph isolated(std::size_t nodes);
};

extern const std::array<std::pair<std::size_t, std::size_t>, 18> kCocoEdges;

// x [..., in] * w [in, out] (+ b [out]).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b = nullptr);
Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor* db = nullptr);

// x [T, J, Cin], w [Cin, Cout]: y_t = G x_t w.
Tensor graph_conv(const Tensor& x, const Tensor& w, const Matrix& graph);
Tensor graph_conv_backward(const Tensor& x, const Tensor& w, const Matrix& graph, const Tensor& dy, Tensor& dw);

// x [T, J, C], kernel [k, C, C] with odd k; zero padding (k-1)/2 at both ends
// of the frame axis, applied independently per joint.
Tensor temporal_conv(const Tensor& x, const Tensor& kernel);
Tensor temporal_conv_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Tensor& dkernel);

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
    Tensor xhat;
    std::vector<double> rstd;
};

// Normalizes every row (last dimension).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, LayerNormCache* cache = nullptr);
Tensor layer_norm_backward(const LayerNormCache& cache, const Tensor& gamma, const Tensor& dy, Tensor& dgamma,
                           Tensor& dbeta);

Tensor relu(const Tensor& x);
// `x` is the ReLU input.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

Tensor softmax_rows(const Tensor& x);

struct AttentionCache {
    Tensor probs; // [T, T]
};

struct AttentionGrads {
    Tensor dq;
    Tensor dk;
    Tensor dv;
};

// softmax(q k^T / sqrt(d)) v for q, k, v of shape [T, d].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, AttentionCache* cache = nullptr);
AttentionGrads attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionCache& cache,
                                  const Tensor& dout);

struct LossAndGrad {
    double loss = 0.0;
    Tensor grad;
};

// Mean negative log-softmax of the true class; logits [N, 2], labels in {0,1}.
LossAndGrad cross_entropy(const Tensor& logits, std::span<const int> labels);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// x [T, J, C] -> [T, C] mean over J, and back.
Tensor mean_over_joints(const Tensor& x);
Tensor mean_over_joints_backward(const Tensor& dy, std::size_t joints);

// x [T, C] -> [C] mean over T, and back.
Tensor mean_over_rows(const Tensor& x);
Tensor mean_over_rows_backward(const Tensor& dy, std::size_t rows);

} // namespace rallypose::nn

#pragma once

// ST-GCN pose encoder and its contrastive (NT-Xent) pretraining.
//
// encode: four residual blocks
//     graph_conv -> layer_norm -> ReLU -> temporal_conv -> layer_norm (+ residual)
// followed by a joint average per frame and a linear projection to 64-d
// per-frame features; their temporal mean is the segment embedding.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rallypose/nn/layers.hpp"
#include "rallypose/nn/tensor.hpp"
#include "rallypose/pose.hpp"

namespace rallypose {

inline constexpr std::size_t kEmbeddingDim = 64;
inline constexpr std::size_t kBlocks = 4;

struct BackboneConfig {
    std::array<std::size_t, kBlocks + 1> channels{2, 16, 32, 64, 64};
    std::size_t temporal_kernel = 9;
    std::size_t embedding_dim = kEmbeddingDim;
    double temperature = 0.1;
    std::size_t batch_size = 32; // pairs per batch
    int patience = 15;
    int max_epochs = 500;
    double learning_rate = 1e-3;
    double noise_sigma = 0.05;
    int max_jitter = 2;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void validate() const;
    nlohmann::json architecture_json() const;
    nlohmann::json to_json() const;
};

class Backbone {
public:
    struct BlockParams {
        nn::Parameter graph_w;
        nn::Parameter ln1_gamma;
        nn::Parameter ln1_beta;
        nn::Parameter temporal_k;
        nn::Parameter ln2_gamma;
        nn::Parameter ln2_beta;
        std::optional<nn::Parameter> residual_w; // only when channel counts differ
    };

    struct BlockCache {
        nn::Tensor input;
        nn::Tensor ln1_in;
        nn::LayerNormCache ln1;
        nn::Tensor relu_in;
        nn::Tensor temporal_in;
        nn::LayerNormCache ln2;
    };

    struct Cache {
        std::vector<BlockCache> blocks;
        nn::Tensor joint_mean; // [T, C]
    };

    struct Output {
        nn::Tensor frame_features; // [T, 64]
        nn::Tensor embedding;      // [64]
    };

    Backbone() = default;
    explicit Backbone(const BackboneConfig& cfg);

    const BackboneConfig& config() const { return cfg_; }

    // input [T, 17, 2]
    Output encode(const nn::Tensor& input, Cache* cache = nullptr) const;

    // Accumulates parameter gradients into `grads` (a model of the same
    // architecture) given upstream gradients of either output. Returns the
    // gradient with respect to the input.
    nn::Tensor backward(const Cache& cache, const nn::Tensor* d_frame_features, const nn::Tensor* d_embedding,
                        Backbone& grads) const;

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    void zero_grad();
    // Same architecture, zero values, zero grads.
    Backbone zeros_like() const;

    std::vector<BlockParams>& blocks() { return blocks_; }
    nn::Parameter& projection_w() { return proj_w_; }
    nn::Parameter& projection_b() { return proj_b_; }

private:
    BackboneConfig cfg_;
    std::vector<BlockParams> blocks_;
    nn::Parameter proj_w_;
    nn::Parameter proj_b_;
};

nn::Tensor segment_tensor(std::span<const NormalizedPose> frames);

// Loss over 2N embeddings arranged as positive pairs (2k, 2k+1); each
// embedding is L2-normalized inside the loss.
struct NtXentResult {
    double loss = 0.0;
    std::vector<nn::Tensor> grads; // d loss / d raw embedding
};

NtXentResult nt_xent(std::span<const nn::Tensor> embeddings, double temperature);

struct AugmentConfig {
    int max_jitter = 2;
    double noise_sigma = 0.05;
};

// Two views of a segment: window start shifted by u in [-max_jitter,
// max_jitter] (re-sliced from `source` starting at `source_offset` when given,
// edge-padded otherwise) plus per-coordinate Gaussian noise.
std::pair<std::vector<NormalizedPose>, std::vector<NormalizedPose>> augment_pair(
    const PoseSegment& seg, const AugmentConfig& cfg, std::uint64_t seed,
    std::span<const NormalizedPose> source = {}, std::size_t source_offset = 0);

struct PretrainLogRow {
    int epoch = 0;
    double loss = 0.0;
    double best_loss = 0.0;
    double elapsed_seconds = 0.0;
};

struct PretrainResult {
    Backbone model; // parameters from the lowest-loss epoch
    int best_epoch = 0;
    int epochs_run = 0;
    std::vector<PretrainLogRow> log;
};

// Contrastive pretraining on one court side's segments.
PretrainResult pretrain(std::span<const PoseSegment> segments, const BackboneConfig& cfg);

struct SidePretrainResult {
    PretrainResult front;
    PretrainResult back;
};

// Splits by side and pretrains one model per side. Throws DataError when a
// side has fewer than two segments.
SidePretrainResult pretrain_by_side(std::span<const PoseSegment> segments, const BackboneConfig& cfg);

} // namespace rallypose

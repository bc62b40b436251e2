#pragma once

// Transformer-encoder shot classifier over per-frame backbone features, its
// supervised training, and the threshold sweep over scored frames.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rallypose/backbone.hpp"
#include "rallypose/eval.hpp"
#include "rallypose/nn/layers.hpp"
#include "rallypose/nn/tensor.hpp"
#include "rallypose/pose.hpp"

namespace rallypose {

struct ClassifierConfig {
    std::size_t layers = 2;
    std::size_t model_dim = kEmbeddingDim;
    std::size_t heads = 4;
    std::size_t ff_dim = 128;
    bool positional = true;  // sinusoidal encodings; off only for diagnostics
    bool zero_head = true;   // zero-initialized output head
    double train_fraction = 0.7;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32; // 0 = full batch
    int patience = 15;
    int max_epochs = 300;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void validate() const;
    nlohmann::json architecture_json() const;
    nlohmann::json to_json() const;
};

class Classifier {
public:
    struct LayerParams {
        nn::Parameter wq, bq, wk, bk, wv, bv, wo, bo;
        nn::Parameter ln1_gamma, ln1_beta;
        nn::Parameter w1, b1, w2, b2;
        nn::Parameter ln2_gamma, ln2_beta;
    };

    struct LayerCache {
        nn::Tensor input;
        nn::Tensor q, k, v;
        std::vector<nn::AttentionCache> heads;
        nn::Tensor attended; // concatenated head outputs
        nn::LayerNormCache ln1;
        nn::Tensor y1;
        nn::Tensor hidden_pre; // ReLU input
        nn::Tensor hidden;
        nn::LayerNormCache ln2;
    };

    struct Cache {
        std::vector<LayerCache> layers;
        nn::Tensor pooled; // [1, d]
    };

    Classifier() = default;
    explicit Classifier(const ClassifierConfig& cfg);

    const ClassifierConfig& config() const { return cfg_; }
    void set_positional(bool on) { cfg_.positional = on; }

    // features [T, d] -> logits [1, 2]
    nn::Tensor logits(const nn::Tensor& features, Cache* cache = nullptr) const;
    // Probability of the Shot class.
    double classify(const nn::Tensor& features) const;

    // Accumulates parameter gradients into `grads`; returns d features.
    nn::Tensor backward(const Cache& cache, const nn::Tensor& d_logits, Classifier& grads) const;

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
    void zero_grad();
    Classifier zeros_like() const;

    std::vector<LayerParams>& layer_params() { return layers_; }
    nn::Parameter& head_w() { return head_w_; }
    nn::Parameter& head_b() { return head_b_; }

private:
    ClassifierConfig cfg_;
    std::vector<LayerParams> layers_;
    nn::Parameter head_w_;
    nn::Parameter head_b_;
};

// Sinusoidal position table [T, d].
nn::Tensor positional_encoding(std::size_t frames, std::size_t dim);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Per-label shuffle, first round(fraction * n_label) indices of each label go
// to training. Both lists are returned in ascending order.
Split stratified_split(std::span<const Label> labels, double train_fraction, std::uint64_t seed);

struct ClassifierLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
};

struct FitResult {
    Classifier model; // lowest test-loss parameters; epoch 0 is the initial model
    int best_epoch = 0;
    int epochs_run = 0;
    std::vector<ClassifierLogRow> log;
};

// Trains on precomputed feature sequences. Early stopping watches test loss.
FitResult fit_classifier(std::span<const nn::Tensor> train_features, std::span<const Label> train_labels,
                         std::span<const nn::Tensor> test_features, std::span<const Label> test_labels,
                         const ClassifierConfig& cfg);

struct TrainResult {
    FitResult fit;
    Split split;
    Confusion test_confusion; // at threshold 0.5
    Metrics test_metrics;
    std::vector<double> test_confidences; // aligned with split.test
};

// Encodes the segments with the frozen backbone, splits, fits and scores the
// held-out part. Throws DataError for fewer than 10 segments or a label
// missing from the training split.
TrainResult train_classifier(std::span<const PoseSegment> segments, const Backbone& backbone,
                             const ClassifierConfig& cfg);

struct SideTrainResult {
    TrainResult front;
    TrainResult back;
};

SideTrainResult train_by_side(std::span<const PoseSegment> segments, const Backbone& front, const Backbone& back,
                              const ClassifierConfig& cfg);

struct ShotScore {
    std::int64_t frame = 0;
    std::int64_t player_id = 0;
    double confidence = 0.0;
    std::optional<Label> truth;
    friend bool operator==(const ShotScore&, const ShotScore&) = default;
};

std::string format_scores(std::span<const ShotScore> scores);
std::vector<ShotScore> parse_scores(std::string_view text, const std::string& source = "<scores>");

// Predict Shot iff confidence >= threshold; scores without truth are skipped.
Confusion confusion_at(std::span<const ShotScore> scores, double threshold);

struct SweepRow {
    double threshold = 0.0;
    Confusion confusion;
    Metrics metrics;
};

struct SweepReport {
    std::vector<SweepRow> rows; // thresholds 0.01 .. 0.99
    std::size_t optimal = 0;    // index into rows
};

// Optimal row: highest accuracy, then higher F1, then lower threshold. Throws
// DataError when no score carries a truth label.
SweepReport sweep_threshold(std::span<const ShotScore> scores);

std::string format_sweep_csv(const SweepReport& report);

// Keeps every score of the minority truth class and an equal-size seeded
// sample of the majority class, in the original order.
std::vector<ShotScore> balance_scores(std::span<const ShotScore> scores, std::uint64_t seed);

} // namespace rallypose

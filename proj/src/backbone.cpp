#include "rallypose/backbone.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "rallypose/error.hpp"
#include "rallypose/nn/optim.hpp"
#include "rallypose/parallel.hpp"
#include "rallypose/random.hpp"

namespace rallypose {

using nn::Parameter;
using nn::Tensor;

void BackboneConfig::validate() const {
    if (channels.front() != 2) {
        throw ConfigError("backbone: input channels must be 2 (x, y)");
    }
    if (std::any_of(channels.begin(), channels.end(), [](std::size_t c) { return c == 0; })) {
        throw ConfigError("backbone: channel counts must be positive");
    }
    if (temporal_kernel % 2 == 0) {
        throw ConfigError("backbone: temporal kernel length must be odd");
    }
    if (embedding_dim != kEmbeddingDim) {
        throw ConfigError("backbone: embedding dimension is fixed at 64");
    }
    if (!(temperature > 0.0)) {
        throw ConfigError("backbone: temperature must be positive");
    }
    if (batch_size < 2) {
        throw ConfigError("backbone: batch size must be at least 2 pairs");
    }
    if (patience < 1 || max_epochs < 1) {
        throw ConfigError("backbone: patience and max_epochs must be positive");
    }
    if (!(learning_rate > 0.0) || noise_sigma < 0.0 || max_jitter < 0) {
        throw ConfigError("backbone: invalid optimizer or augmentation settings");
    }
}

nlohmann::json BackboneConfig::architecture_json() const {
    return {{"model", "stgcn"},
            {"blocks", kBlocks},
            {"channels", channels},
            {"temporal_kernel", temporal_kernel},
            {"embedding_dim", embedding_dim},
            {"graph", "coco17-normalized"}};
}

nlohmann::json BackboneConfig::to_json() const {
    return {{"channels", channels},     {"temporal_kernel", temporal_kernel}, {"embedding_dim", embedding_dim},
            {"temperature", temperature}, {"batch_size", batch_size},         {"patience", patience},
            {"max_epochs", max_epochs}, {"learning_rate", learning_rate},     {"noise_sigma", noise_sigma},
            {"max_jitter", max_jitter}, {"seed", seed}};
}

namespace {

Tensor xavier(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor t(std::move(shape));
    for (double& v : t.values()) {
        v = dist(rng);
    }
    return t;
}

void add_into(Tensor& dst, const Tensor& src) { dst.rows() += src.rows(); }

} // namespace

Backbone::Backbone(const BackboneConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    auto rng = make_rng(cfg_.seed, {0x6261636b});
    const std::size_t k = cfg_.temporal_kernel;
    for (std::size_t b = 0; b < kBlocks; ++b) {
        const std::size_t cin = cfg_.channels[b];
        const std::size_t cout = cfg_.channels[b + 1];
        const std::string p = "block" + std::to_string(b) + ".";
        BlockParams bp;
        bp.graph_w = Parameter(p + "graph_w", xavier({cin, cout}, cin, cout, rng));
        bp.ln1_gamma = Parameter(p + "ln1_gamma", Tensor({cout}, 1.0));
        bp.ln1_beta = Parameter(p + "ln1_beta", Tensor({cout}));
        bp.temporal_k = Parameter(p + "temporal_k", xavier({k, cout, cout}, k * cout, k * cout, rng));
        bp.ln2_gamma = Parameter(p + "ln2_gamma", Tensor({cout}, 1.0));
        bp.ln2_beta = Parameter(p + "ln2_beta", Tensor({cout}));
        if (cin != cout) {
            bp.residual_w = Parameter(p + "residual_w", xavier({cin, cout}, cin, cout, rng));
        }
        blocks_.push_back(std::move(bp));
    }
    const std::size_t last = cfg_.channels.back();
    proj_w_ = Parameter("proj_w", xavier({last, cfg_.embedding_dim}, last, cfg_.embedding_dim, rng));
    proj_b_ = Parameter("proj_b", Tensor({cfg_.embedding_dim}));
}

std::vector<Parameter*> Backbone::parameters() {
    std::vector<Parameter*> out;
    for (auto& b : blocks_) {
        out.insert(out.end(), {&b.graph_w, &b.ln1_gamma, &b.ln1_beta, &b.temporal_k, &b.ln2_gamma, &b.ln2_beta});
        if (b.residual_w) {
            out.push_back(&*b.residual_w);
        }
    }
    out.push_back(&proj_w_);
    out.push_back(&proj_b_);
    return out;
}

std::vector<const Parameter*> Backbone::parameters() const {
    auto mut = const_cast<Backbone*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

void Backbone::zero_grad() {
    for (Parameter* p : parameters()) {
        p->zero_grad();
    }
}

Backbone Backbone::zeros_like() const {
    Backbone z = *this;
    for (Parameter* p : z.parameters()) {
        p->value.fill(0.0);
        p->grad.fill(0.0);
    }
    return z;
}

Backbone::Output Backbone::encode(const Tensor& input, Cache* cache) const {
    if (input.rank() != 3 || input.dim(1) != kNumJoints || input.dim(2) != cfg_.channels.front()) {
        throw ShapeError("encode: expected input [T,17,2], got " + nn::shape_string(input.shape()));
    }
    const nn::Matrix& graph = nn::SkeletonGraph::coco().normalized;
    if (cache) {
        cache->blocks.clear();
        cache->blocks.reserve(kBlocks);
    }
    Tensor h = input;
    for (const BlockParams& bp : blocks_) {
        BlockCache bc;
        Tensor g = nn::graph_conv(h, bp.graph_w.value, graph);
        Tensor a = nn::layer_norm(g, bp.ln1_gamma.value, bp.ln1_beta.value, cache ? &bc.ln1 : nullptr);
        Tensor r = nn::relu(a);
        Tensor c = nn::temporal_conv(r, bp.temporal_k.value);
        Tensor n = nn::layer_norm(c, bp.ln2_gamma.value, bp.ln2_beta.value, cache ? &bc.ln2 : nullptr);
        if (bp.residual_w) {
            n.rows() += nn::linear(h, bp.residual_w->value).rows();
        } else {
            n.rows() += h.rows();
        }
        if (cache) {
            bc.input = std::move(h);
            bc.relu_in = std::move(a);
            bc.temporal_in = std::move(r);
            cache->blocks.push_back(std::move(bc));
        }
        h = std::move(n);
    }
    Tensor pooled = nn::mean_over_joints(h);
    Output out;
    out.frame_features = nn::linear(pooled, proj_w_.value, &proj_b_.value);
    out.embedding = nn::mean_over_rows(out.frame_features);
    if (cache) {
        cache->joint_mean = std::move(pooled);
    }
    return out;
}

Tensor Backbone::backward(const Cache& cache, const Tensor* d_frame_features, const Tensor* d_embedding,
                          Backbone& grads) const {
    const std::size_t frames = cache.joint_mean.dim(0);
    Tensor df({frames, cfg_.embedding_dim});
    if (d_frame_features) {
        nn::expect_shape(*d_frame_features, df.shape(), "backbone backward frame features");
        df = *d_frame_features;
    }
    if (d_embedding) {
        nn::expect_shape(*d_embedding, {cfg_.embedding_dim}, "backbone backward embedding");
        add_into(df, nn::mean_over_rows_backward(*d_embedding, frames));
    }
    Tensor dpooled = nn::linear_backward(cache.joint_mean, proj_w_.value, df, grads.proj_w_.grad, &grads.proj_b_.grad);
    Tensor dh = nn::mean_over_joints_backward(dpooled, kNumJoints);

    const nn::Matrix& graph = nn::SkeletonGraph::coco().normalized;
    for (std::size_t b = kBlocks; b-- > 0;) {
        const BlockParams& bp = blocks_[b];
        BlockParams& gp = grads.blocks_[b];
        const BlockCache& bc = cache.blocks[b];

        Tensor dx;
        if (bp.residual_w) {
            dx = nn::linear_backward(bc.input, bp.residual_w->value, dh, gp.residual_w->grad);
        } else {
            dx = dh;
        }
        Tensor dc = nn::layer_norm_backward(bc.ln2, bp.ln2_gamma.value, dh, gp.ln2_gamma.grad, gp.ln2_beta.grad);
        Tensor dr = nn::temporal_conv_backward(bc.temporal_in, bp.temporal_k.value, dc, gp.temporal_k.grad);
        Tensor da = nn::relu_backward(bc.relu_in, dr);
        Tensor dg = nn::layer_norm_backward(bc.ln1, bp.ln1_gamma.value, da, gp.ln1_gamma.grad, gp.ln1_beta.grad);
        add_into(dx, nn::graph_conv_backward(bc.input, bp.graph_w.value, graph, dg, gp.graph_w.grad));
        dh = std::move(dx);
    }
    return dh;
}

Tensor segment_tensor(std::span<const NormalizedPose> frames) {
    Tensor t({frames.size(), kNumJoints, 2});
    for (std::size_t f = 0; f < frames.size(); ++f) {
        std::copy(frames[f].coords.begin(), frames[f].coords.end(), t.data() + f * kPoseDims);
    }
    return t;
}

NtXentResult nt_xent(std::span<const Tensor> embeddings, double temperature) {
    const std::size_t n2 = embeddings.size();
    if (n2 < 2 || n2 % 2 != 0) {
        throw ShapeError("nt_xent: needs an even number (>= 2) of embeddings");
    }
    const std::size_t dim = embeddings[0].size();
    nn::Matrix u(static_cast<Eigen::Index>(n2), static_cast<Eigen::Index>(dim));
    std::vector<double> norms(n2);
    for (std::size_t i = 0; i < n2; ++i) {
        if (embeddings[i].size() != dim) {
            throw ShapeError("nt_xent: embeddings differ in length");
        }
        const auto row = embeddings[i].rows().row(0);
        norms[i] = row.norm();
        if (!(norms[i] > 0.0)) {
            throw DegenerateEmbeddingError("nt_xent: embedding " + std::to_string(i) + " has zero norm");
        }
        u.row(static_cast<Eigen::Index>(i)) = row / norms[i];
    }
    const nn::Matrix sim = (u * u.transpose()) / temperature;

    // coef(i, j) = d loss / d sim(i, j) from anchor i's term.
    nn::Matrix coef = nn::Matrix::Zero(sim.rows(), sim.cols());
    NtXentResult out;
    const double inv = 1.0 / static_cast<double>(n2);
    for (std::size_t i = 0; i < n2; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto pos = static_cast<Eigen::Index>(i ^ 1U);
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < sim.cols(); ++j) {
            if (j != ii) {
                m = std::max(m, sim(ii, j));
            }
        }
        double denom = 0.0;
        for (Eigen::Index j = 0; j < sim.cols(); ++j) {
            if (j != ii) {
                denom += std::exp(sim(ii, j) - m);
            }
        }
        out.loss += (m + std::log(denom) - sim(ii, pos)) * inv;
        for (Eigen::Index j = 0; j < sim.cols(); ++j) {
            if (j != ii) {
                coef(ii, j) = std::exp(sim(ii, j) - m) / denom * inv;
            }
        }
        coef(ii, pos) -= inv;
    }
    const nn::Matrix du = ((coef + coef.transpose()) * u) / temperature;
    out.grads.reserve(n2);
    for (std::size_t i = 0; i < n2; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const Eigen::RowVectorXd ui = u.row(ii);
        const Eigen::RowVectorXd g = (du.row(ii) - ui * du.row(ii).dot(ui)) / norms[i];
        Tensor t({dim});
        t.rows().row(0) = g;
        out.grads.push_back(std::move(t));
    }
    return out;
}

std::pair<std::vector<NormalizedPose>, std::vector<NormalizedPose>> augment_pair(
    const PoseSegment& seg, const AugmentConfig& cfg, std::uint64_t seed, std::span<const NormalizedPose> source,
    std::size_t source_offset) {
    if (source.empty()) {
        source = seg.frames;
        source_offset = 0;
    }
    auto rng = make_rng(seed);
    std::uniform_int_distribution<int> shift(-cfg.max_jitter, cfg.max_jitter);
    auto make_view = [&]() {
        const int u = shift(rng);
        std::vector<NormalizedPose> view(seg.frames.size());
        for (std::size_t t = 0; t < view.size(); ++t) {
            long idx = static_cast<long>(source_offset + t) + u;
            idx = std::clamp<long>(idx, 0, static_cast<long>(source.size()) - 1);
            view[t] = source[static_cast<std::size_t>(idx)];
        }
        if (cfg.noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
            for (auto& f : view) {
                for (double& c : f.coords) {
                    c += noise(rng);
                }
            }
        }
        return view;
    };
    auto first = make_view();
    auto second = make_view();
    return {std::move(first), std::move(second)};
}

PretrainResult pretrain(std::span<const PoseSegment> segments, const BackboneConfig& cfg) {
    cfg.validate();
    if (segments.size() < 2) {
        throw DataError("pretrain: need at least two segments, got " + std::to_string(segments.size()));
    }
    PretrainResult result;
    Backbone model(cfg);
    auto params = model.parameters();
    auto adam = nn::AdamState::for_parameters(params);
    const nn::AdamConfig adam_cfg{cfg.learning_rate};
    const AugmentConfig aug{cfg.max_jitter, cfg.noise_sigma};
    nn::EarlyStopper stopper(cfg.patience);
    Backbone best = model;

    std::vector<std::size_t> order(segments.size());
    std::iota(order.begin(), order.end(), 0);
    const auto start = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto rng = make_rng(cfg.seed, {1, static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - b);
            if (count < 2) {
                continue;
            }
            const std::size_t views = 2 * count;
            std::vector<Backbone::Cache> caches(views);
            std::vector<Tensor> embeddings(views);
            parallel_for(count, cfg.jobs, [&](std::size_t i) {
                const std::size_t idx = order[b + i];
                auto [v1, v2] = augment_pair(segments[idx], aug,
                                             make_rng(cfg.seed, {2, static_cast<std::uint64_t>(epoch), idx})());
                embeddings[2 * i] = model.encode(segment_tensor(v1), &caches[2 * i]).embedding;
                embeddings[2 * i + 1] = model.encode(segment_tensor(v2), &caches[2 * i + 1]).embedding;
            });
            NtXentResult nt = nt_xent(embeddings, cfg.temperature);

            std::vector<Backbone> per_view(views);
            parallel_for(views, cfg.jobs, [&](std::size_t v) {
                per_view[v] = model.zeros_like();
                model.backward(caches[v], nullptr, &nt.grads[v], per_view[v]);
            });
            model.zero_grad();
            for (auto& g : per_view) {
                auto gp = g.parameters();
                for (std::size_t k = 0; k < params.size(); ++k) {
                    add_into(params[k]->grad, gp[k]->grad);
                }
            }
            nn::adam_step(params, adam, adam_cfg);
            loss_sum += nt.loss;
            ++batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(std::max(batches, 1));
        if (stopper.observe(epoch, epoch_loss)) {
            best = model;
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back({epoch, epoch_loss, stopper.best_loss(), elapsed});
        result.epochs_run = epoch;
        if (stopper.should_stop(epoch)) {
            break;
        }
    }
    best.zero_grad();
    result.model = std::move(best);
    result.best_epoch = stopper.best_epoch();
    return result;
}

SidePretrainResult pretrain_by_side(std::span<const PoseSegment> segments, const BackboneConfig& cfg) {
    std::vector<PoseSegment> front;
    std::vector<PoseSegment> back;
    for (const auto& s : segments) {
        (s.side == Side::Front ? front : back).push_back(s);
    }
    for (const auto* part : {&front, &back}) {
        if (part->size() < 2) {
            throw DataError(std::string("pretrain: the ") + (part == &front ? "front" : "back") +
                            "-court partition needs at least two segments");
        }
    }
    BackboneConfig back_cfg = cfg;
    back_cfg.seed = cfg.seed + 1;
    return {pretrain(front, cfg), pretrain(back, back_cfg)};
}

} // namespace rallypose

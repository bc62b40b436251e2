#include "rallypose/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "rallypose/error.hpp"
#include "rallypose/nn/optim.hpp"
#include "rallypose/parallel.hpp"
#include "rallypose/random.hpp"
#include "rallypose/textio.hpp"

namespace rallypose {

using nn::Parameter;
using nn::Tensor;

void ClassifierConfig::validate() const {
    if (layers != 2) {
        throw ConfigError("classifier: the encoder has exactly 2 layers");
    }
    if (model_dim != kEmbeddingDim) {
        throw ConfigError("classifier: model dimension must match the 64-d features");
    }
    if (heads == 0 || model_dim % heads != 0) {
        throw ConfigError("classifier: heads must divide the model dimension");
    }
    if (ff_dim == 0) {
        throw ConfigError("classifier: feed-forward width must be positive");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("classifier: train fraction must lie in (0, 1)");
    }
    if (!(learning_rate > 0.0) || patience < 1 || max_epochs < 1) {
        throw ConfigError("classifier: learning rate, patience and max_epochs must be positive");
    }
}

nlohmann::json ClassifierConfig::architecture_json() const {
    return {{"model", "transformer-encoder"}, {"layers", layers},     {"model_dim", model_dim},
            {"heads", heads},                 {"ff_dim", ff_dim},     {"positional", positional},
            {"pooling", "temporal-mean"},     {"classes", {"notshot", "shot"}}};
}

nlohmann::json ClassifierConfig::to_json() const {
    return {{"layers", layers},         {"model_dim", model_dim},
            {"heads", heads},           {"ff_dim", ff_dim},
            {"positional", positional}, {"zero_head", zero_head},
            {"train_fraction", train_fraction}, {"learning_rate", learning_rate},
            {"batch_size", batch_size}, {"patience", patience},
            {"max_epochs", max_epochs}, {"seed", seed}};
}

namespace {

Tensor xavier(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-a, a);
    Tensor t({in, out});
    for (double& v : t.values()) {
        v = dist(rng);
    }
    return t;
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t width) {
    Tensor out({x.dim(0), width});
    out.rows() = x.rows().middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(width));
    return out;
}

void put_cols(Tensor& dst, const Tensor& src, std::size_t start) {
    dst.rows().middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(src.dim(1))) = src.rows();
}

void add_into(Tensor& dst, const Tensor& src) { dst.rows() += src.rows(); }

} // namespace

Classifier::Classifier(const ClassifierConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    auto rng = make_rng(cfg_.seed, {0x636c6173});
    const std::size_t d = cfg_.model_dim;
    const std::size_t f = cfg_.ff_dim;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerParams lp{
            Parameter(p + "wq", xavier(d, d, rng)),       Parameter(p + "bq", Tensor({d})),
            Parameter(p + "wk", xavier(d, d, rng)),       Parameter(p + "bk", Tensor({d})),
            Parameter(p + "wv", xavier(d, d, rng)),       Parameter(p + "bv", Tensor({d})),
            Parameter(p + "wo", xavier(d, d, rng)),       Parameter(p + "bo", Tensor({d})),
            Parameter(p + "ln1_gamma", Tensor({d}, 1.0)), Parameter(p + "ln1_beta", Tensor({d})),
            Parameter(p + "w1", xavier(d, f, rng)),       Parameter(p + "b1", Tensor({f})),
            Parameter(p + "w2", xavier(f, d, rng)),       Parameter(p + "b2", Tensor({d})),
            Parameter(p + "ln2_gamma", Tensor({d}, 1.0)), Parameter(p + "ln2_beta", Tensor({d})),
        };
        layers_.push_back(std::move(lp));
    }
    head_w_ = Parameter("head_w", cfg_.zero_head ? Tensor({d, 2}) : xavier(d, 2, rng));
    head_b_ = Parameter("head_b", Tensor({2}));
}

std::vector<Parameter*> Classifier::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        out.insert(out.end(), {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo, &l.ln1_gamma, &l.ln1_beta,
                               &l.w1, &l.b1, &l.w2, &l.b2, &l.ln2_gamma, &l.ln2_beta});
    }
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
}

std::vector<const Parameter*> Classifier::parameters() const {
    auto mut = const_cast<Classifier*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

void Classifier::zero_grad() {
    for (Parameter* p : parameters()) {
        p->zero_grad();
    }
}

Classifier Classifier::zeros_like() const {
    Classifier z = *this;
    for (Parameter* p : z.parameters()) {
        p->value.fill(0.0);
        p->grad.fill(0.0);
    }
    return z;
}

Tensor positional_encoding(std::size_t frames, std::size_t dim) {
    Tensor pe({frames, dim});
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
            const double angle = static_cast<double>(t) * rate;
            pe.at(t, i) = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Tensor Classifier::logits(const Tensor& features, Cache* cache) const {
    const std::size_t d = cfg_.model_dim;
    if (features.rank() != 2 || features.dim(1) != d) {
        throw ShapeError("classify: expected features [T," + std::to_string(d) + "], got " +
                         nn::shape_string(features.shape()));
    }
    const std::size_t frames = features.dim(0);
    const std::size_t hd = d / cfg_.heads;
    Tensor x = features;
    if (cfg_.positional) {
        add_into(x, positional_encoding(frames, d));
    }
    if (cache) {
        cache->layers.assign(layers_.size(), {});
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerParams& p = layers_[l];
        LayerCache local;
        LayerCache& lc = cache ? cache->layers[l] : local;
        lc.q = nn::linear(x, p.wq.value, &p.bq.value);
        lc.k = nn::linear(x, p.wk.value, &p.bk.value);
        lc.v = nn::linear(x, p.wv.value, &p.bv.value);
        lc.heads.resize(cfg_.heads);
        lc.attended = Tensor({frames, d});
        for (std::size_t h = 0; h < cfg_.heads; ++h) {
            Tensor o = nn::attention(slice_cols(lc.q, h * hd, hd), slice_cols(lc.k, h * hd, hd),
                                     slice_cols(lc.v, h * hd, hd), &lc.heads[h]);
            put_cols(lc.attended, o, h * hd);
        }
        Tensor s1 = nn::linear(lc.attended, p.wo.value, &p.bo.value);
        add_into(s1, x);
        lc.y1 = nn::layer_norm(s1, p.ln1_gamma.value, p.ln1_beta.value, &lc.ln1);
        lc.hidden_pre = nn::linear(lc.y1, p.w1.value, &p.b1.value);
        lc.hidden = nn::relu(lc.hidden_pre);
        Tensor s2 = nn::linear(lc.hidden, p.w2.value, &p.b2.value);
        add_into(s2, lc.y1);
        Tensor next = nn::layer_norm(s2, p.ln2_gamma.value, p.ln2_beta.value, &lc.ln2);
        lc.input = std::move(x);
        x = std::move(next);
    }
    Tensor pooled = nn::mean_over_rows(x).reshaped({1, d});
    Tensor out = nn::linear(pooled, head_w_.value, &head_b_.value);
    if (cache) {
        cache->pooled = std::move(pooled);
    }
    return out;
}

double Classifier::classify(const Tensor& features) const {
    const Tensor z = logits(features);
    // Two-class softmax of the Shot logit.
    return 1.0 / (1.0 + std::exp(z[0] - z[1]));
}

Tensor Classifier::backward(const Cache& cache, const Tensor& d_logits, Classifier& grads) const {
    const std::size_t d = cfg_.model_dim;
    const std::size_t hd = d / cfg_.heads;
    nn::expect_shape(d_logits, {1, 2}, "classifier backward logits");
    Tensor dpooled = nn::linear_backward(cache.pooled, head_w_.value, d_logits, grads.head_w_.grad, &grads.head_b_.grad);
    const std::size_t frames = cache.layers.front().input.dim(0);
    Tensor dx = nn::mean_over_rows_backward(dpooled.reshaped({d}), frames);

    for (std::size_t l = layers_.size(); l-- > 0;) {
        const LayerParams& p = layers_[l];
        LayerParams& g = grads.layers_[l];
        const LayerCache& lc = cache.layers[l];

        Tensor ds2 = nn::layer_norm_backward(lc.ln2, p.ln2_gamma.value, dx, g.ln2_gamma.grad, g.ln2_beta.grad);
        Tensor dhidden = nn::linear_backward(lc.hidden, p.w2.value, ds2, g.w2.grad, &g.b2.grad);
        Tensor dpre = nn::relu_backward(lc.hidden_pre, dhidden);
        Tensor dy1 = nn::linear_backward(lc.y1, p.w1.value, dpre, g.w1.grad, &g.b1.grad);
        add_into(dy1, ds2);
        Tensor ds1 = nn::layer_norm_backward(lc.ln1, p.ln1_gamma.value, dy1, g.ln1_gamma.grad, g.ln1_beta.grad);
        Tensor dattended = nn::linear_backward(lc.attended, p.wo.value, ds1, g.wo.grad, &g.bo.grad);

        Tensor dq({frames, d});
        Tensor dk({frames, d});
        Tensor dv({frames, d});
        for (std::size_t h = 0; h < cfg_.heads; ++h) {
            auto hg = nn::attention_backward(slice_cols(lc.q, h * hd, hd), slice_cols(lc.k, h * hd, hd),
                                             slice_cols(lc.v, h * hd, hd), lc.heads[h],
                                             slice_cols(dattended, h * hd, hd));
            put_cols(dq, hg.dq, h * hd);
            put_cols(dk, hg.dk, h * hd);
            put_cols(dv, hg.dv, h * hd);
        }
        Tensor dinput = ds1;
        add_into(dinput, nn::linear_backward(lc.input, p.wq.value, dq, g.wq.grad, &g.bq.grad));
        add_into(dinput, nn::linear_backward(lc.input, p.wk.value, dk, g.wk.grad, &g.bk.grad));
        add_into(dinput, nn::linear_backward(lc.input, p.wv.value, dv, g.wv.grad, &g.bv.grad));
        dx = std::move(dinput);
    }
    return dx;
}

Split stratified_split(std::span<const Label> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("split: train fraction must lie in (0, 1)");
    }
    Split out;
    for (Label l : {Label::NotShot, Label::Shot}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == l) {
                idx.push_back(i);
            }
        }
        auto rng = make_rng(seed, {5, static_cast<std::uint64_t>(l)});
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

constexpr std::size_t kGradChunk = 8;

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

std::vector<int> label_ints(std::span<const Label> labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (Label l : labels) {
        out.push_back(static_cast<int>(l));
    }
    return out;
}

Tensor stack_logits(std::span<const Tensor> rows) {
    Tensor out({rows.size(), 2});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.at(i, 0) = rows[i][0];
        out.at(i, 1) = rows[i][1];
    }
    return out;
}

Evaluation evaluate(const Classifier& model, std::span<const Tensor> features, std::span<const Label> labels,
                    std::size_t jobs) {
    std::vector<Tensor> rows(features.size());
    parallel_for(features.size(), jobs, [&](std::size_t i) { rows[i] = model.logits(features[i]); });
    const auto ints = label_ints(labels);
    Evaluation e;
    e.loss = nn::cross_entropy(stack_logits(rows), ints).loss;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const bool shot = 1.0 / (1.0 + std::exp(rows[i][0] - rows[i][1])) >= 0.5;
        correct += (shot == (labels[i] == Label::Shot)) ? 1 : 0;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
    return e;
}

} // namespace

FitResult fit_classifier(std::span<const Tensor> train_features, std::span<const Label> train_labels,
                         std::span<const Tensor> test_features, std::span<const Label> test_labels,
                         const ClassifierConfig& cfg) {
    cfg.validate();
    if (train_features.size() != train_labels.size() || test_features.size() != test_labels.size()) {
        throw ShapeError("fit_classifier: features and labels differ in length");
    }
    if (train_features.empty() || test_features.empty()) {
        throw DataError("fit_classifier: training and test sets must be non-empty");
    }
    FitResult result;
    Classifier model(cfg);
    auto params = model.parameters();
    auto adam = nn::AdamState::for_parameters(params);
    const nn::AdamConfig adam_cfg{cfg.learning_rate};
    nn::EarlyStopper stopper(cfg.patience);

    const Evaluation initial = evaluate(model, test_features, test_labels, cfg.jobs);
    stopper.observe(0, initial.loss);
    Classifier best = model;
    result.log.push_back({0, evaluate(model, train_features, train_labels, cfg.jobs).loss, initial.loss,
                          initial.accuracy});

    const std::size_t n = train_features.size();
    const std::size_t batch = cfg.batch_size == 0 ? n : cfg.batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto all_labels = label_ints(train_labels);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (batch < n) {
            auto rng = make_rng(cfg.seed, {3, static_cast<std::uint64_t>(epoch)});
            std::shuffle(order.begin(), order.end(), rng);
        }
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < n; b += batch) {
            const std::size_t count = std::min(batch, n - b);
            std::vector<Classifier::Cache> caches(count);
            std::vector<Tensor> rows(count);
            std::vector<int> labels(count);
            parallel_for(count, cfg.jobs, [&](std::size_t i) {
                rows[i] = model.logits(train_features[order[b + i]], &caches[i]);
            });
            for (std::size_t i = 0; i < count; ++i) {
                labels[i] = all_labels[order[b + i]];
            }
            const auto ce = nn::cross_entropy(stack_logits(rows), labels);
            loss_sum += ce.loss * static_cast<double>(count);

            const std::size_t chunks = (count + kGradChunk - 1) / kGradChunk;
            std::vector<Classifier> slots(chunks);
            parallel_for(chunks, cfg.jobs, [&](std::size_t c) {
                slots[c] = model.zeros_like();
                for (std::size_t i = c * kGradChunk; i < std::min(count, (c + 1) * kGradChunk); ++i) {
                    Tensor dl({1, 2});
                    dl[0] = ce.grad.at(i, 0);
                    dl[1] = ce.grad.at(i, 1);
                    model.backward(caches[i], dl, slots[c]);
                }
            });
            model.zero_grad();
            for (auto& slot : slots) {
                auto sp = slot.parameters();
                for (std::size_t k = 0; k < params.size(); ++k) {
                    add_into(params[k]->grad, sp[k]->grad);
                }
            }
            nn::adam_step(params, adam, adam_cfg);
        }
        const Evaluation test = evaluate(model, test_features, test_labels, cfg.jobs);
        if (stopper.observe(epoch, test.loss)) {
            best = model;
        }
        result.log.push_back({epoch, loss_sum / static_cast<double>(n), test.loss, test.accuracy});
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

TrainResult train_classifier(std::span<const PoseSegment> segments, const Backbone& backbone,
                             const ClassifierConfig& cfg) {
    cfg.validate();
    if (segments.size() < 10) {
        throw DataError("train_classifier: need at least 10 segments, got " + std::to_string(segments.size()));
    }
    std::vector<Tensor> features(segments.size());
    parallel_for(segments.size(), cfg.jobs, [&](std::size_t i) {
        features[i] = backbone.encode(segment_tensor(segments[i].frames)).frame_features;
    });
    std::vector<Label> labels;
    labels.reserve(segments.size());
    for (const auto& s : segments) {
        labels.push_back(s.label);
    }

    TrainResult out;
    out.split = stratified_split(labels, cfg.train_fraction, cfg.seed);
    auto gather = [&](const std::vector<std::size_t>& idx, std::vector<Tensor>& f, std::vector<Label>& l) {
        for (std::size_t i : idx) {
            f.push_back(features[i]);
            l.push_back(labels[i]);
        }
    };
    std::vector<Tensor> train_f, test_f;
    std::vector<Label> train_l, test_l;
    gather(out.split.train, train_f, train_l);
    gather(out.split.test, test_f, test_l);
    for (Label l : {Label::NotShot, Label::Shot}) {
        if (std::find(train_l.begin(), train_l.end(), l) == train_l.end()) {
            throw DataError(std::string("train_classifier: no ") + to_string(l) + " segment in the training split");
        }
    }
    if (test_f.empty()) {
        throw DataError("train_classifier: the test split is empty");
    }
    out.fit = fit_classifier(train_f, train_l, test_f, test_l, cfg);
    out.test_confidences.resize(test_f.size());
    parallel_for(test_f.size(), cfg.jobs,
                 [&](std::size_t i) { out.test_confidences[i] = out.fit.model.classify(test_f[i]); });
    for (std::size_t i = 0; i < test_f.size(); ++i) {
        const bool predicted = out.test_confidences[i] >= 0.5;
        const bool truth = test_l[i] == Label::Shot;
        if (predicted && truth) {
            ++out.test_confusion.tp;
        } else if (predicted) {
            ++out.test_confusion.fp;
        } else if (truth) {
            ++out.test_confusion.fn;
        } else {
            ++out.test_confusion.tn;
        }
    }
    out.test_metrics = metrics(out.test_confusion);
    return out;
}

SideTrainResult train_by_side(std::span<const PoseSegment> segments, const Backbone& front, const Backbone& back,
                              const ClassifierConfig& cfg) {
    std::vector<PoseSegment> f;
    std::vector<PoseSegment> b;
    for (const auto& s : segments) {
        (s.side == Side::Front ? f : b).push_back(s);
    }
    ClassifierConfig back_cfg = cfg;
    back_cfg.seed = cfg.seed + 1;
    return {train_classifier(f, front, cfg), train_classifier(b, back, back_cfg)};
}

std::string format_scores(std::span<const ShotScore> scores) {
    std::string out;
    for (const auto& s : scores) {
        out += "{\"frame\":" + format_number(s.frame) + ",\"player_id\":" + format_number(s.player_id) +
               ",\"confidence\":" + format_number(s.confidence) + ",\"truth\":" +
               (s.truth ? std::string("\"") + to_string(*s.truth) + "\"" : std::string("null")) + "}\n";
    }
    return out;
}

std::vector<ShotScore> parse_scores(std::string_view text, const std::string& source) {
    using nlohmann::json;
    std::vector<ShotScore> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        try {
            json j = json::parse(lines[i]);
            ShotScore s;
            s.frame = j.at("frame").get<std::int64_t>();
            s.player_id = j.at("player_id").get<std::int64_t>();
            s.confidence = j.at("confidence").get<double>();
            if (!(s.confidence >= 0.0 && s.confidence <= 1.0)) {
                throw ValidationError("confidence", "must lie in [0, 1] (" + source + ":" + std::to_string(i + 1) + ")");
            }
            const auto& t = j.at("truth");
            if (!t.is_null()) {
                const auto name = t.get<std::string>();
                if (name != "shot" && name != "notshot") {
                    throw ValidationError("truth", "must be \"shot\", \"notshot\" or null (" + source + ":" +
                                                       std::to_string(i + 1) + ")");
                }
                s.truth = name == "shot" ? Label::Shot : Label::NotShot;
            }
            out.push_back(s);
        } catch (const json::exception& e) {
            throw ParseError(source, i + 1, e.what());
        }
    }
    return out;
}

Confusion confusion_at(std::span<const ShotScore> scores, double threshold) {
    Confusion c;
    for (const auto& s : scores) {
        if (!s.truth) {
            continue;
        }
        const bool predicted = s.confidence >= threshold;
        const bool truth = *s.truth == Label::Shot;
        if (predicted && truth) {
            ++c.tp;
        } else if (predicted) {
            ++c.fp;
        } else if (truth) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

SweepReport sweep_threshold(std::span<const ShotScore> scores) {
    if (std::none_of(scores.begin(), scores.end(), [](const ShotScore& s) { return s.truth.has_value(); })) {
        throw DataError("sweep: no scores with a truth label");
    }
    SweepReport report;
    for (int i = 1; i <= 99; ++i) {
        SweepRow row;
        row.threshold = static_cast<double>(i) / 100.0;
        row.confusion = confusion_at(scores, row.threshold);
        row.metrics = metrics(row.confusion);
        report.rows.push_back(row);
    }
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        const Metrics& cand = report.rows[i].metrics;
        const Metrics& best = report.rows[report.optimal].metrics;
        if (cand.accuracy > best.accuracy || (cand.accuracy == best.accuracy && cand.f1 > best.f1)) {
            report.optimal = i;
        }
    }
    return report;
}

std::string format_sweep_csv(const SweepReport& report) {
    std::string out = "threshold,accuracy,precision,recall,f1\n";
    for (const auto& r : report.rows) {
        char theta[16];
        std::snprintf(theta, sizeof theta, "%.2f", r.threshold);
        out += std::string(theta) + "," + format_number(r.metrics.accuracy) + "," +
               format_number(r.metrics.precision) + "," + format_number(r.metrics.recall) + "," +
               format_number(r.metrics.f1) + "\n";
    }
    return out;
}

std::vector<ShotScore> balance_scores(std::span<const ShotScore> scores, std::uint64_t seed) {
    std::vector<std::size_t> shot;
    std::vector<std::size_t> notshot;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].truth) {
            (*scores[i].truth == Label::Shot ? shot : notshot).push_back(i);
        }
    }
    auto& major = shot.size() > notshot.size() ? shot : notshot;
    const auto& minor = shot.size() > notshot.size() ? notshot : shot;
    auto rng = make_rng(seed, {4});
    std::shuffle(major.begin(), major.end(), rng);
    major.resize(minor.size());
    std::vector<std::size_t> keep(minor.begin(), minor.end());
    keep.insert(keep.end(), major.begin(), major.end());
    std::sort(keep.begin(), keep.end());
    std::vector<ShotScore> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) {
        out.push_back(scores[i]);
    }
    return out;
}

} // namespace rallypose

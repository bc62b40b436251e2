#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "rallypose/error.hpp"
#include "rallypose/hash.hpp"
#include "rallypose/nn/checkpoint.hpp"
#include "rallypose/nn/gradcheck.hpp"
#include "rallypose/nn/layers.hpp"
#include "rallypose/nn/optim.hpp"
#include "rallypose/random.hpp"
#include "support.hpp"

using namespace rallypose;
using namespace rallypose::nn;
using testutil::random_tensor;

namespace {

double dot(const Tensor& a, const Tensor& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

GradCheckOptions probes(std::uint64_t seed) {
    GradCheckOptions o;
    o.max_probes_per_tensor = 24;
    o.seed = seed;
    return o;
}

// Keeps every entry at least `margin` away from zero.
void push_off_zero(Tensor& t, double margin = 1e-2) {
    for (auto& v : t.values()) {
        if (std::abs(v) < margin) {
            v = v < 0 ? -margin : margin;
        }
    }
}

} // namespace

TEST(Tensor, ShapeChecks) {
    EXPECT_THROW(Tensor({2, 0}), ShapeError);
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.reshaped({3, 2}).dim(0), 3u);
    EXPECT_THROW(expect_shape(t, {3, 2}, "t"), ShapeError);
}

TEST(SkeletonGraph, AdjacencyProperties) {
    const auto& g = SkeletonGraph::coco();
    ASSERT_EQ(g.adjacency.rows(), 17);
    EXPECT_TRUE(g.adjacency.isApprox(g.adjacency.transpose(), 0.0));
    EXPECT_TRUE(g.normalized.isApprox(g.normalized.transpose(), 1e-15));
    // sqrt(degree) is the eigenvector for eigenvalue 1 of the normalized matrix.
    Eigen::VectorXd root_degree(17);
    for (Eigen::Index j = 0; j < 17; ++j) {
        root_degree(j) = std::sqrt(1.0 + g.adjacency.row(j).sum());
    }
    EXPECT_LT((g.normalized * root_degree - root_degree).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(g.normalized));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1.0 - 1e-12);
    EXPECT_NEAR(es.eigenvalues().maxCoeff(), 1.0, 1e-12);
}

TEST(GraphConv, IdentityGraphAndWeights) {
    auto rng = make_rng(61);
    const auto x = random_tensor({4, 17, 3}, rng);
    Tensor w({3, 3});
    for (std::size_t i = 0; i < 3; ++i) {
        w.at(i, i) = 1.0;
    }
    const auto y = graph_conv(x, w, SkeletonGraph::isolated(17).normalized);
    EXPECT_EQ(y, x);
}

TEST(GraphConv, OnesGiveNormalizedRowSums) {
    // Degrees counted straight from the edge list, self loop included.
    std::array<double, 17> degree{};
    degree.fill(1.0);
    for (auto [a, b] : kCocoEdges) {
        degree[a] += 1;
        degree[b] += 1;
    }
    const Tensor x({1, 17, 1}, 1.0);
    const Tensor w({1, 1}, 1.0);
    const auto y = graph_conv(x, w, SkeletonGraph::coco().normalized);
    for (std::size_t j = 0; j < 17; ++j) {
        double expected = 1.0 / degree[j];
        for (auto [a, b] : kCocoEdges) {
            if (a == j) {
                expected += 1.0 / std::sqrt(degree[j] * degree[b]);
            } else if (b == j) {
                expected += 1.0 / std::sqrt(degree[j] * degree[a]);
            }
        }
        EXPECT_NEAR(y.at(0, j, 0), expected, 1e-15) << "joint " << j;
    }
}

TEST(GraphConv, ShapeMismatch) {
    EXPECT_THROW(graph_conv(Tensor({2, 17, 3}), Tensor({4, 2}), SkeletonGraph::coco().normalized), ShapeError);
}

TEST(TemporalConv, PointwiseIdentity) {
    auto rng = make_rng(62);
    const auto x = random_tensor({6, 17, 2}, rng);
    Tensor k({1, 2, 2});
    k.at(0, 0, 0) = 1;
    k.at(0, 1, 1) = 1;
    EXPECT_EQ(temporal_conv(x, k), x);
}

TEST(TemporalConv, ConstantInputBoundaryPartialSums) {
    // Taps 1, 2, 4 read frames t-1, t, t+1; zero padding removes one tap at each end.
    const Tensor x({3, 17, 1}, 1.0);
    const Tensor k({3, 1, 1}, std::vector<double>{1, 2, 4});
    const auto y = temporal_conv(x, k);
    for (std::size_t j = 0; j < 17; ++j) {
        EXPECT_EQ(y.at(0, j, 0), 6.0);
        EXPECT_EQ(y.at(1, j, 0), 7.0);
        EXPECT_EQ(y.at(2, j, 0), 3.0);
    }
}

TEST(TemporalConv, EvenKernelIsConfigError) {
    EXPECT_THROW(temporal_conv(Tensor({3, 17, 1}), Tensor({2, 1, 1})), ConfigError);
}

TEST(Softmax, RowsSumToOne) {
    auto rng = make_rng(63);
    const auto p = softmax_rows(random_tensor({20, 9}, rng, 30.0));
    for (std::size_t r = 0; r < 20; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 9; ++c) {
            s += p.at(r, c);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Attention, SingleFrameReturnsValues) {
    auto rng = make_rng(64);
    const auto q = random_tensor({1, 8}, rng), k = random_tensor({1, 8}, rng), v = random_tensor({1, 8}, rng);
    EXPECT_EQ(attention(q, k, v), v);
}

TEST(Attention, ZeroLogitsAverageValues) {
    auto rng = make_rng(65);
    const Tensor q({5, 4});
    const auto k = random_tensor({5, 4}, rng), v = random_tensor({5, 4}, rng);
    const auto out = attention(q, k, v);
    for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0;
        for (std::size_t t = 0; t < 5; ++t) {
            mean += v.at(t, c) / 5;
        }
        for (std::size_t t = 0; t < 5; ++t) {
            EXPECT_NEAR(out.at(t, c), mean, 1e-15);
        }
    }
}

TEST(Attention, OutputIsConvexCombinationOfValues) {
    auto rng = make_rng(66);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = random_tensor({7, 6}, rng, 3), k = random_tensor({7, 6}, rng, 3), v = random_tensor({7, 6}, rng);
        const auto out = attention(q, k, v);
        for (std::size_t c = 0; c < 6; ++c) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t t = 0; t < 7; ++t) {
                lo = std::min(lo, v.at(t, c));
                hi = std::max(hi, v.at(t, c));
            }
            for (std::size_t t = 0; t < 7; ++t) {
                EXPECT_GE(out.at(t, c), lo - 1e-12);
                EXPECT_LE(out.at(t, c), hi + 1e-12);
            }
        }
    }
    EXPECT_THROW(attention(Tensor({3, 4}), Tensor({3, 5}), Tensor({3, 4})), ShapeError);
}

TEST(CrossEntropy, Examples) {
    const std::vector<int> zero{0};
    EXPECT_NEAR(cross_entropy(Tensor({1, 2}), zero).loss, std::log(2.0), 1e-15);
    EXPECT_NEAR(cross_entropy(Tensor({1, 2}, std::vector<double>{1000, 0}), zero).loss, 0.0, 1e-300);
    const std::vector<int> bad{2};
    EXPECT_THROW(cross_entropy(Tensor({1, 2}), bad), ValidationError);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHotOverN) {
    auto rng = make_rng(67);
    const auto logits = random_tensor({4, 2}, rng);
    const std::vector<int> labels{0, 1, 1, 0};
    const auto r = cross_entropy(logits, labels);
    const auto p = softmax_rows(logits);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double expected = (p.at(i, c) - (int(c) == labels[i] ? 1.0 : 0.0)) / 4.0;
            EXPECT_NEAR(r.grad.at(i, c), expected, 1e-15);
        }
    }
}

TEST(Cosine, ZeroVectorIsDegenerate) {
    const std::vector<double> a{1, 0}, z{0, 0};
    EXPECT_THROW(cosine_similarity(a, z), DegenerateEmbeddingError);
    const std::vector<double> b{1, 1};
    EXPECT_NEAR(cosine_similarity(a, b), std::sqrt(0.5), 1e-15);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    auto rng = make_rng(68);
    Parameter p("w", random_tensor({3, 3}, rng));
    const Tensor before = p.value;
    std::vector<Parameter*> ps{&p};
    auto state = AdamState::for_parameters(ps);
    for (int i = 0; i < 5; ++i) {
        adam_step(ps, state);
    }
    EXPECT_EQ(p.value, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Parameter p("w", Tensor({4}, std::vector<double>{1, -2, 3, 0.5}));
    p.grad = Tensor({4}, std::vector<double>{0.3, -7, 1e-3, 42});
    const Tensor before = p.value;
    std::vector<Parameter*> ps{&p};
    auto state = AdamState::for_parameters(ps);
    AdamConfig cfg;
    cfg.lr = 0.01;
    adam_step(ps, state, cfg);
    for (std::size_t i = 0; i < 4; ++i) {
        const double g = p.grad[i];
        EXPECT_NEAR(p.value[i] - before[i], -cfg.lr * g / (std::abs(g) + cfg.eps), 1e-15);
    }
}

TEST(Adam, Deterministic) {
    auto rng = make_rng(69);
    Parameter a("w", random_tensor({5}, rng));
    a.grad = random_tensor({5}, rng);
    Parameter b = a;
    std::vector<Parameter*> pa{&a}, pb{&b};
    auto sa = AdamState::for_parameters(pa);
    auto sb = sa;
    for (int i = 0; i < 3; ++i) {
        adam_step(pa, sa);
        adam_step(pb, sb);
    }
    EXPECT_EQ(a.value, b.value);
}

TEST(EarlyStopper, StoppingSemantics) {
    EarlyStopper falling(15);
    int epoch = 1;
    for (; epoch <= 100 && !falling.should_stop(epoch - 1); ++epoch) {
        falling.observe(epoch, 100.0 - epoch);
    }
    EXPECT_EQ(epoch - 1, 100);
    EXPECT_EQ(falling.best_epoch(), 100);

    EarlyStopper flat(15);
    int last = 0;
    for (int e = 1; e <= 100; ++e) {
        flat.observe(e, 1.0);
        last = e;
        if (flat.should_stop(e)) {
            break;
        }
    }
    EXPECT_EQ(last, 16);
    EXPECT_EQ(flat.best_epoch(), 1);
}

TEST(GradCheck, Polynomial) {
    Tensor w({1}, 3.0);
    Tensor* inputs[] = {&w};
    const Tensor analytic[] = {Tensor({1}, 6.0)};
    EXPECT_LT(grad_check([&] { return w[0] * w[0]; }, inputs, analytic), 1e-9);
}

TEST(GradCheck, LinearReluCrossEntropy) {
    auto rng = make_rng(70);
    const auto x = random_tensor({6, 5}, rng);
    auto w1 = random_tensor({5, 8}, rng, 0.5), b1 = random_tensor({8}, rng, 0.1);
    auto w2 = random_tensor({8, 2}, rng, 0.5);
    const std::vector<int> labels{0, 1, 1, 0, 1, 0};
    auto loss = [&] { return cross_entropy(linear(relu(linear(x, w1, &b1)), w2), labels).loss; };
    const auto h_pre = linear(x, w1, &b1);
    const auto h = relu(h_pre);
    const auto ce = cross_entropy(linear(h, w2), labels);
    Tensor dw1 = Tensor::zeros_like(w1), db1 = Tensor::zeros_like(b1), dw2 = Tensor::zeros_like(w2);
    const auto dh = linear_backward(h, w2, ce.grad, dw2);
    linear_backward(x, w1, relu_backward(h_pre, dh), dw1, &db1);
    Tensor* inputs[] = {&w1, &b1, &w2};
    const Tensor analytic[] = {dw1, db1, dw2};
    EXPECT_LT(grad_check(loss, inputs, analytic), 1e-5);
}

// Every layer: loss = <layer(x), R> so the upstream gradient is R.
TEST(LayerGradients, Linear) {
    auto rng = make_rng(71);
    auto x = random_tensor({5, 4}, rng), w = random_tensor({4, 3}, rng), b = random_tensor({3}, rng);
    const auto r = random_tensor({5, 3}, rng);
    Tensor dw = Tensor::zeros_like(w), db = Tensor::zeros_like(b);
    const auto dx = linear_backward(x, w, r, dw, &db);
    Tensor* inputs[] = {&x, &w, &b};
    const Tensor analytic[] = {dx, dw, db};
    EXPECT_LT(grad_check([&] { return dot(linear(x, w, &b), r); }, inputs, analytic, probes(1)), 1e-5);
}

TEST(LayerGradients, GraphConv) {
    auto rng = make_rng(72);
    const auto& g = SkeletonGraph::coco().normalized;
    auto x = random_tensor({3, 17, 4}, rng), w = random_tensor({4, 5}, rng);
    const auto r = random_tensor({3, 17, 5}, rng);
    Tensor dw = Tensor::zeros_like(w);
    const auto dx = graph_conv_backward(x, w, g, r, dw);
    Tensor* inputs[] = {&x, &w};
    const Tensor analytic[] = {dx, dw};
    EXPECT_LT(grad_check([&] { return dot(graph_conv(x, w, g), r); }, inputs, analytic, probes(2)), 1e-5);
}

TEST(LayerGradients, TemporalConv) {
    auto rng = make_rng(73);
    auto x = random_tensor({7, 17, 3}, rng), k = random_tensor({5, 3, 3}, rng);
    const auto r = random_tensor({7, 17, 3}, rng);
    Tensor dk = Tensor::zeros_like(k);
    const auto dx = temporal_conv_backward(x, k, r, dk);
    Tensor* inputs[] = {&x, &k};
    const Tensor analytic[] = {dx, dk};
    EXPECT_LT(grad_check([&] { return dot(temporal_conv(x, k), r); }, inputs, analytic, probes(3)), 1e-5);
}

TEST(LayerGradients, LayerNorm) {
    auto rng = make_rng(74);
    auto x = random_tensor({6, 8}, rng), gamma = random_tensor({8}, rng), beta = random_tensor({8}, rng);
    const auto r = random_tensor({6, 8}, rng);
    LayerNormCache cache;
    layer_norm(x, gamma, beta, &cache);
    Tensor dg = Tensor::zeros_like(gamma), db = Tensor::zeros_like(beta);
    const auto dx = layer_norm_backward(cache, gamma, r, dg, db);
    Tensor* inputs[] = {&x, &gamma, &beta};
    const Tensor analytic[] = {dx, dg, db};
    EXPECT_LT(grad_check([&] { return dot(layer_norm(x, gamma, beta), r); }, inputs, analytic, probes(4)), 1e-5);
}

TEST(LayerGradients, Relu) {
    auto rng = make_rng(75);
    auto x = random_tensor({5, 6}, rng);
    push_off_zero(x);
    const auto r = random_tensor({5, 6}, rng);
    Tensor* inputs[] = {&x};
    const Tensor analytic[] = {relu_backward(x, r)};
    EXPECT_LT(grad_check([&] { return dot(relu(x), r); }, inputs, analytic, probes(5)), 1e-5);
}

TEST(LayerGradients, Attention) {
    auto rng = make_rng(76);
    auto q = random_tensor({6, 4}, rng), k = random_tensor({6, 4}, rng), v = random_tensor({6, 4}, rng);
    const auto r = random_tensor({6, 4}, rng);
    AttentionCache cache;
    attention(q, k, v, &cache);
    const auto g = attention_backward(q, k, v, cache, r);
    Tensor* inputs[] = {&q, &k, &v};
    const Tensor analytic[] = {g.dq, g.dk, g.dv};
    EXPECT_LT(grad_check([&] { return dot(attention(q, k, v), r); }, inputs, analytic, probes(6)), 1e-5);
}

TEST(LayerGradients, CrossEntropy) {
    auto rng = make_rng(77);
    auto logits = random_tensor({5, 2}, rng, 2);
    const std::vector<int> labels{1, 0, 0, 1, 1};
    Tensor* inputs[] = {&logits};
    const Tensor analytic[] = {cross_entropy(logits, labels).grad};
    EXPECT_LT(grad_check([&] { return cross_entropy(logits, labels).loss; }, inputs, analytic, probes(7)), 1e-5);
}

TEST(LayerGradients, MeanPools) {
    auto rng = make_rng(78);
    auto x = random_tensor({4, 17, 3}, rng);
    const auto r = random_tensor({4, 3}, rng);
    Tensor* inputs[] = {&x};
    const Tensor analytic[] = {mean_over_joints_backward(r, 17)};
    EXPECT_LT(grad_check([&] { return dot(mean_over_joints(x), r); }, inputs, analytic), 1e-5);

    auto y = random_tensor({5, 3}, rng);
    const auto s = random_tensor({3}, rng);
    Tensor* inputs2[] = {&y};
    const Tensor analytic2[] = {mean_over_rows_backward(s, 5)};
    EXPECT_LT(grad_check([&] { return dot(mean_over_rows(y), s); }, inputs2, analytic2), 1e-5);
}

TEST(Forward, Deterministic) {
    auto rng = make_rng(79);
    const auto x = random_tensor({6, 17, 4}, rng), w = random_tensor({4, 4}, rng), k = random_tensor({3, 4, 4}, rng);
    const auto& g = SkeletonGraph::coco().normalized;
    EXPECT_EQ(temporal_conv(graph_conv(x, w, g), k), temporal_conv(graph_conv(x, w, g), k));
}

TEST(Checkpoint, RoundTripAndSidecar) {
    auto rng = make_rng(80);
    Parameter a("a", random_tensor({3, 4}, rng)), b("b.bias", random_tensor({7}, rng));
    const Parameter* ps[] = {&a, &b};
    testutil::TempDir dir("ckpt");
    const nlohmann::json arch{{"model", "test"}, {"width", 4}};
    const nlohmann::json training{{"lr", 0.01}, {"seed", 3}};
    save_checkpoint(dir / "m.ckpt", ps, arch, training);
    const auto ck = load_checkpoint(dir / "m.ckpt");
    ASSERT_EQ(ck.parameters.size(), 2u);
    EXPECT_EQ(ck.parameters[0].name, "a");
    EXPECT_EQ(ck.parameters[0].value, a.value);
    EXPECT_EQ(ck.parameters[1].value, b.value);
    EXPECT_EQ(ck.sidecar.at("architecture"), arch);
    EXPECT_TRUE(std::filesystem::exists(sidecar_path(dir / "m.ckpt")));

    Parameter a2("a", Tensor({3, 4})), b2("b.bias", Tensor({7}));
    Parameter* dst[] = {&a2, &b2};
    assign_parameters(dst, ck.parameters);
    EXPECT_EQ(a2.value, a.value);
    Parameter wrong("a", Tensor({4, 3}));
    Parameter* bad[] = {&wrong};
    EXPECT_THROW(assign_parameters(bad, ck.parameters), ShapeError);
}

TEST(Checkpoint, RejectsForeignBytes) {
    testutil::TempDir dir("ckpt_bad");
    {
        std::ofstream(dir / "x.ckpt", std::ios::binary) << "definitely not a checkpoint";
    }
    EXPECT_THROW(load_checkpoint(dir / "x.ckpt"), ParseError);
    auto rng = make_rng(81);
    Parameter a("a", random_tensor({2, 2}, rng));
    const Parameter* ps[] = {&a};
    auto bytes = encode_parameters(ps);
    bytes.pop_back();
    EXPECT_THROW(decode_parameters(bytes, "truncated"), ParseError);
}

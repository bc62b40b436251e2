#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/QR>

#include "rallypose/backbone.hpp"
#include "rallypose/error.hpp"
#include "rallypose/nn/gradcheck.hpp"
#include "rallypose/random.hpp"
#include "rallypose/sim.hpp"
#include "support.hpp"

using namespace rallypose;
using nn::Tensor;
using testutil::random_tensor;

namespace {

BackboneConfig narrow_config() {
    BackboneConfig cfg;
    cfg.channels = {2, 4, 6, 8, 8};
    cfg.temporal_kernel = 3;
    return cfg;
}

// Term-by-term NT-Xent straight from its definition.
double nt_xent_oracle(const std::vector<Tensor>& z, double tau) {
    const std::size_t n = z.size();
    auto cosine = [&](std::size_t a, std::size_t b) {
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t k = 0; k < z[a].size(); ++k) {
            ab += z[a][k] * z[b][k];
            aa += z[a][k] * z[a][k];
            bb += z[b][k] * z[b][k];
        }
        return ab / std::sqrt(aa * bb);
    };
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = i % 2 == 0 ? i + 1 : i - 1;
        double denom = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                denom += std::exp(cosine(i, j) / tau);
            }
        }
        total += -std::log(std::exp(cosine(i, p) / tau) / denom);
    }
    return total / static_cast<double>(n);
}

std::vector<Tensor> random_embeddings(std::size_t count, std::mt19937_64& rng, std::size_t dim = 64) {
    std::vector<Tensor> z;
    for (std::size_t i = 0; i < count; ++i) {
        z.push_back(random_tensor({dim}, rng));
    }
    return z;
}

std::vector<PoseSegment> small_dataset(std::size_t count, std::uint64_t seed, double amplitude = 1.0) {
    PoseDatasetConfig cfg;
    cfg.count = count;
    cfg.seed = seed;
    cfg.amplitude = amplitude;
    return generate_pose_dataset(cfg).segments;
}

double cosine(const Tensor& a, const Tensor& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    return ab / std::sqrt(aa * bb);
}

// End-to-end gradient of NT-Xent over encoded inputs w.r.t. every parameter.
double encode_ntxent_grad_error(Backbone& model, const std::vector<Tensor>& inputs, std::uint64_t seed) {
    const double tau = 0.5;
    auto loss = [&] {
        std::vector<Tensor> z;
        for (const auto& x : inputs) {
            z.push_back(model.encode(x).embedding);
        }
        return nt_xent(z, tau).loss;
    };
    std::vector<Backbone::Cache> caches(inputs.size());
    std::vector<Tensor> z;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        z.push_back(model.encode(inputs[i], &caches[i]).embedding);
    }
    const auto nt = nt_xent(z, tau);
    Backbone grads = model.zeros_like();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        model.backward(caches[i], nullptr, &nt.grads[i], grads);
    }
    std::vector<Tensor*> values;
    std::vector<Tensor> analytic;
    auto params = model.parameters();
    auto gparams = grads.parameters();
    for (std::size_t k = 0; k < params.size(); ++k) {
        values.push_back(&params[k]->value);
        analytic.push_back(gparams[k]->grad);
    }
    nn::GradCheckOptions opts;
    opts.max_probes_per_tensor = 20;
    opts.seed = seed;
    return nn::grad_check(loss, values, analytic, opts);
}

} // namespace

TEST(Encode, ShapesAndDeterminism) {
    Backbone model(BackboneConfig{});
    const auto segs = small_dataset(2, 91);
    const auto x = segment_tensor(segs[0].frames);
    const auto a = model.encode(x);
    const auto b = model.encode(x);
    EXPECT_EQ(a.frame_features.shape(), (std::vector<std::size_t>{kWindow, 64}));
    EXPECT_EQ(a.embedding.shape(), (std::vector<std::size_t>{64}));
    EXPECT_EQ(a.embedding, b.embedding);
    EXPECT_EQ(a.frame_features, b.frame_features);
}

TEST(Encode, ZeroInputGivesZeroEmbedding) {
    Backbone model(BackboneConfig{});
    const auto out = model.encode(Tensor({kWindow, kNumJoints, 2}));
    for (double v : out.embedding.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Encode, WrongShapeThrows) {
    Backbone model(BackboneConfig{});
    EXPECT_THROW(model.encode(Tensor({kWindow, 16, 2})), ShapeError);
}

TEST(Encode, LipschitzSanityBound) {
    Backbone model(BackboneConfig{});
    const auto segs = small_dataset(4, 92);
    auto rng = make_rng(93);
    for (const auto& seg : segs) {
        auto x = segment_tensor(seg.frames);
        const auto base = model.encode(x).embedding;
        std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
        for (int probe = 0; probe < 5; ++probe) {
            auto y = x;
            y[pick(rng)] += 1e-6;
            const auto moved = model.encode(y).embedding;
            double d = 0;
            for (std::size_t k = 0; k < 64; ++k) {
                d += std::pow(moved[k] - base[k], 2);
            }
            EXPECT_LT(std::sqrt(d), 1e-2);
        }
    }
}

TEST(Encode, NtXentGradientNarrowModel) {
    auto cfg = narrow_config();
    cfg.seed = 94;
    Backbone model(cfg);
    auto rng = make_rng(95);
    std::vector<Tensor> inputs;
    for (int i = 0; i < 4; ++i) {
        inputs.push_back(random_tensor({kWindow, kNumJoints, 2}, rng));
    }
    EXPECT_LT(encode_ntxent_grad_error(model, inputs, 96), 1e-4);
}

TEST(Encode, InputGradientMatchesFiniteDifferences) {
    auto cfg = narrow_config();
    Backbone model(cfg);
    auto rng = make_rng(97);
    auto x = random_tensor({kWindow, kNumJoints, 2}, rng);
    const auto r = random_tensor({kWindow, 64}, rng);
    auto loss = [&] {
        const auto f = model.encode(x).frame_features;
        double s = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            s += f[i] * r[i];
        }
        return s;
    };
    Backbone::Cache cache;
    model.encode(x, &cache);
    Backbone grads = model.zeros_like();
    const auto dx = model.backward(cache, &r, nullptr, grads);
    Tensor* inputs[] = {&x};
    const Tensor analytic[] = {dx};
    nn::GradCheckOptions opts;
    opts.max_probes_per_tensor = 40;
    opts.seed = 98;
    EXPECT_LT(nn::grad_check(loss, inputs, analytic, opts), 1e-4);
}

TEST(NtXent, SinglePairIsZero) {
    auto rng = make_rng(99);
    for (int i = 0; i < 50; ++i) {
        const auto z = random_embeddings(2, rng);
        EXPECT_EQ(nt_xent(z, 0.1).loss, 0.0);
    }
}

TEST(NtXent, IdenticalEmbeddingsGiveLogThree) {
    auto rng = make_rng(100);
    const auto one = random_tensor({64}, rng);
    const std::vector<Tensor> z(4, one);
    EXPECT_NEAR(nt_xent(z, 0.1).loss, std::log(3.0), 1e-9);
}

TEST(NtXent, MatchesBruteForce) {
    auto rng = make_rng(101);
    for (std::size_t n = 2; n <= 8; ++n) {
        for (double tau : {0.05, 0.1, 0.5, 1.0}) {
            const auto z = random_embeddings(2 * n, rng);
            EXPECT_NEAR(nt_xent(z, tau).loss, nt_xent_oracle(z, tau), 1e-9) << "N=" << n << " tau=" << tau;
        }
    }
}

TEST(NtXent, PairPermutationInvariant) {
    auto rng = make_rng(102);
    const auto z = random_embeddings(12, rng);
    const double base = nt_xent(z, 0.1).loss;
    std::vector<std::size_t> pairs{0, 1, 2, 3, 4, 5};
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        std::vector<Tensor> p;
        for (auto k : pairs) {
            const bool swap = rng() % 2;
            p.push_back(z[2 * k + (swap ? 1 : 0)]);
            p.push_back(z[2 * k + (swap ? 0 : 1)]);
        }
        EXPECT_NEAR(nt_xent(p, 0.1).loss, base, 1e-12);
    }
}

TEST(NtXent, RotationInvariant) {
    auto rng = make_rng(103);
    const auto z = random_embeddings(8, rng);
    Eigen::MatrixXd m(64, 64);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    std::vector<Tensor> rotated;
    for (const auto& e : z) {
        Eigen::VectorXd v = q * Eigen::Map<const Eigen::VectorXd>(e.data(), 64);
        rotated.push_back(Tensor({64}, std::vector<double>(v.data(), v.data() + 64)));
    }
    EXPECT_NEAR(nt_xent(rotated, 0.1).loss, nt_xent(z, 0.1).loss, 1e-9);
}

TEST(NtXent, GradientMatchesFiniteDifferences) {
    auto rng = make_rng(104);
    auto z = random_embeddings(6, rng, 8);
    const auto nt = nt_xent(z, 0.2);
    std::vector<Tensor*> inputs;
    for (auto& e : z) {
        inputs.push_back(&e);
    }
    EXPECT_LT(nn::grad_check([&] { return nt_xent(z, 0.2).loss; }, inputs, nt.grads), 1e-5);
}

TEST(NtXent, ZeroNormIsDegenerate) {
    std::vector<Tensor> z{Tensor({4}, 1.0), Tensor({4})};
    EXPECT_THROW(nt_xent(z, 0.1), DegenerateEmbeddingError);
}

TEST(Augment, DeterministicAndIdentity) {
    const auto segs = small_dataset(2, 105);
    const auto a = augment_pair(segs[0], {}, 7);
    const auto b = augment_pair(segs[0], {}, 7);
    EXPECT_EQ(a, b);
    const auto c = augment_pair(segs[0], {}, 8);
    EXPECT_NE(a, c);
    const auto id = augment_pair(segs[0], AugmentConfig{0, 0.0}, 9);
    EXPECT_EQ(id.first, segs[0].frames);
    EXPECT_EQ(id.second, segs[0].frames);
}

TEST(Augment, JitterResliceFromSource) {
    const auto segs = small_dataset(2, 106);
    // A longer source whose frame k is distinguishable.
    std::vector<NormalizedPose> source(25);
    for (std::size_t k = 0; k < source.size(); ++k) {
        source[k].coords[0] = static_cast<double>(k);
    }
    auto rng = make_rng(107);
    for (int trial = 0; trial < 50; ++trial) {
        const auto [v1, v2] = augment_pair(segs[0], AugmentConfig{2, 0.0}, rng(), source, 5);
        for (const auto* v : {&v1, &v2}) {
            const double shift = (*v)[0].coords[0] - 5.0;
            EXPECT_GE(shift, -2.0);
            EXPECT_LE(shift, 2.0);
            for (std::size_t t = 0; t < kWindow; ++t) {
                EXPECT_EQ((*v)[t].coords[0], 5.0 + shift + static_cast<double>(t));
            }
        }
    }
}

TEST(Augment, NoiseSigmaMonteCarlo) {
    const auto segs = small_dataset(2, 108);
    auto rng = make_rng(109);
    double ss = 0;
    std::size_t n = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const auto [v1, v2] = augment_pair(segs[0], AugmentConfig{0, 0.05}, rng());
        for (std::size_t t = 0; t < kWindow; ++t) {
            for (std::size_t c = 0; c < kPoseDims; ++c) {
                const double d = v1[t].coords[c] - segs[0].frames[t].coords[c];
                ss += d * d;
                ++n;
            }
        }
    }
    const double sigma = std::sqrt(ss / static_cast<double>(n));
    EXPECT_NEAR(sigma, 0.05, 0.01);
}

TEST(Pretrain, BitReproducibleAndJobIndependent) {
    const auto segs = small_dataset(6, 110);
    std::vector<PoseSegment> front;
    for (const auto& s : segs) {
        if (s.side == Side::Front) {
            front.push_back(s);
        }
    }
    auto cfg = narrow_config();
    cfg.max_epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 5;
    const auto a = pretrain(front, cfg);
    const auto b = pretrain(front, cfg);
    cfg.jobs = 4;
    const auto c = pretrain(front, cfg);
    ASSERT_EQ(a.log.size(), 3u);
    for (std::size_t k = 0; k < a.log.size(); ++k) {
        EXPECT_EQ(a.log[k].loss, b.log[k].loss);
        EXPECT_EQ(a.log[k].loss, c.log[k].loss);
    }
    auto pa = a.model.parameters();
    auto pc = c.model.parameters();
    for (std::size_t k = 0; k < pa.size(); ++k) {
        EXPECT_EQ(pa[k]->value, pc[k]->value) << pa[k]->name;
    }
}

TEST(Pretrain, BestEpochModelIsReturned) {
    const auto segs = small_dataset(6, 111);
    auto cfg = narrow_config();
    cfg.max_epochs = 6;
    cfg.batch_size = 3;
    const auto r = pretrain(segs, cfg);
    double best = r.log[0].loss;
    int best_epoch = 1;
    for (const auto& row : r.log) {
        if (row.loss < best) {
            best = row.loss;
            best_epoch = row.epoch;
        }
        EXPECT_EQ(row.best_loss, std::min(best, row.loss));
    }
    EXPECT_EQ(r.best_epoch, best_epoch);
}

TEST(Pretrain, SeparatesTwoClusters) {
    // Two clusters: the swing and idle poses of the front player.
    const auto segs = small_dataset(24, 112, 3.0);
    std::vector<PoseSegment> front;
    for (const auto& s : segs) {
        if (s.side == Side::Front) {
            front.push_back(s);
        }
    }
    auto cfg = narrow_config();
    cfg.max_epochs = 8;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    const auto r = pretrain(front, cfg);
    std::vector<Tensor> z;
    for (const auto& s : front) {
        z.push_back(r.model.encode(segment_tensor(s.frames)).embedding);
    }
    double intra = 0, inter = 0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            const double c = cosine(z[i], z[j]);
            if (front[i].label == front[j].label) {
                intra += c;
                ++n_intra;
            } else {
                inter += c;
                ++n_inter;
            }
        }
    }
    EXPECT_GT(intra / double(n_intra), inter / double(n_inter));
}

TEST(Pretrain, SideWithTooFewSegmentsIsDataError) {
    auto segs = small_dataset(4, 113);
    std::vector<PoseSegment> front_only;
    for (const auto& s : segs) {
        if (s.side == Side::Front) {
            front_only.push_back(s);
        }
    }
    auto cfg = narrow_config();
    cfg.max_epochs = 1;
    EXPECT_THROW(pretrain_by_side(front_only, cfg), DataError);
}

TEST(BackboneConfig, Validation) {
    BackboneConfig cfg;
    cfg.temperature = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.temporal_kernel = 4;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = {};
    cfg.embedding_dim = 32;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_NO_THROW(BackboneConfig{}.validate());
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rallypose/error.hpp"
#include "rallypose/nn/checkpoint.hpp"
#include "rallypose/pipeline.hpp"
#include "rallypose/random.hpp"
#include "rallypose/sim.hpp"
#include "support.hpp"

using namespace rallypose;

namespace {

// Random frozen backbones with classifiers trained on a separable simulator set.
class TrainedModels : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        PoseDatasetConfig pc;
        pc.count = 60;
        pc.seed = 151;
        const auto ds = generate_pose_dataset(pc);
        BackboneConfig bc;
        bc.seed = 152;
        Backbone front(bc);
        bc.seed = 153;
        Backbone back(bc);
        ClassifierConfig cc;
        cc.max_epochs = 30;
        cc.learning_rate = 3e-3;
        const auto trained = train_by_side(ds.segments, front, back, cc);
        models_ = new ModelBundle{front, back, trained.front.fit.model, trained.back.fit.model};
    }
    static void TearDownTestSuite() {
        delete models_;
        models_ = nullptr;
    }
    static ModelBundle* models_;
};

ModelBundle* TrainedModels::models_ = nullptr;

ModelBundle untrained_models(std::uint64_t seed) {
    BackboneConfig bc;
    bc.seed = seed;
    ClassifierConfig cc;
    cc.zero_head = false;
    cc.seed = seed + 1;
    return ModelBundle{Backbone(bc), Backbone(bc), Classifier(cc), Classifier(cc)};
}

PoseDataset single_swing(std::uint64_t seed) {
    PoseDatasetConfig pc;
    pc.count = 1;
    pc.spacing = 100;
    pc.seed = seed;
    return generate_pose_dataset(pc);
}

} // namespace

TEST(SelectShot, Examples) {
    const std::vector<PlayerConfidence> four{{0, 0.2}, {1, 0.9}, {2, 0.3}, {3, 0.1}};
    const auto e = select_shot(four, 0.86, 40);
    ASSERT_TRUE(e);
    EXPECT_EQ(*e, (ShotEvent{40, 1, 0.9}));
    const std::vector<PlayerConfidence> flat{{0, 0.5}, {1, 0.5}, {2, 0.5}, {3, 0.5}};
    EXPECT_FALSE(select_shot(flat, 0.86, 40));
    const std::vector<PlayerConfidence> tie{{0, 0.9}, {1, 0.9}, {2, 0.1}, {3, 0.1}};
    EXPECT_EQ(select_shot(tie, 0.5, 1)->player_id, 0);
    EXPECT_FALSE(select_shot(std::vector<PlayerConfidence>{}, 0.5, 1));
}

TEST(SelectShot, ArgmaxInvariantUnderIncreasingTransforms) {
    auto rng = make_rng(154);
    std::uniform_real_distribution<double> u(0, 1);
    const std::vector<std::function<double(double)>> transforms{
        [](double c) { return c * c; }, [](double c) { return std::sqrt(c); },
        [](double c) { return 1 / (1 + std::exp(-8 * (c - 0.5))); }, [](double c) { return 0.1 + 0.5 * c; }};
    for (int probe = 0; probe < 1000; ++probe) {
        std::vector<PlayerConfidence> p;
        for (std::int64_t id = 0; id < 4; ++id) {
            p.push_back({id, u(rng)});
        }
        const auto base = select_shot(p, 0.0, 0)->player_id;
        for (const auto& f : transforms) {
            auto q = p;
            for (auto& c : q) {
                c.confidence = f(c.confidence);
            }
            EXPECT_EQ(select_shot(q, 0.0, 0)->player_id, base);
        }
    }
}

TEST(SelectShot, RaisingThresholdNeverAddsEvents) {
    auto rng = make_rng(155);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<PlayerConfidence>> windows(500);
    for (auto& w : windows) {
        for (std::int64_t id = 0; id < 4; ++id) {
            w.push_back({id, u(rng)});
        }
    }
    std::size_t previous = windows.size() + 1;
    for (int i = 1; i < 100; ++i) {
        std::size_t events = 0;
        for (const auto& w : windows) {
            events += select_shot(w, i / 100.0, 0).has_value();
        }
        EXPECT_LE(events, previous);
        previous = events;
    }
}

TEST(Models, MissingSideIsConfigError) {
    ModelBundle empty;
    EXPECT_THROW(empty.backbone(Side::Front), ConfigError);
    EXPECT_THROW(empty.classifier(Side::Back), ConfigError);
    const auto ds = single_swing(156);
    PlayerWindow w{0, Side::Front, {}};
    for (std::size_t t = 0; t < kWindow; ++t) {
        w.frames.push_back(&ds.keypoints[2 * (93 + t)]);
    }
    EXPECT_THROW(score_player(w, empty, {}), ConfigError);
}

TEST(Models, CheckpointDirectoryRoundTrip) {
    const auto m = untrained_models(157);
    testutil::TempDir dir("models");
    nn::save_checkpoint(dir / "backbone_front.ckpt", m.front_backbone->parameters(),
                        m.front_backbone->config().architecture_json(), m.front_backbone->config().to_json());
    nn::save_checkpoint(dir / "classifier_front.ckpt", m.front_classifier->parameters(),
                        m.front_classifier->config().architecture_json(), m.front_classifier->config().to_json());
    const auto loaded = load_models(dir.path());
    EXPECT_TRUE(loaded.front_backbone && loaded.front_classifier);
    EXPECT_FALSE(loaded.back_backbone || loaded.back_classifier);
    const auto ds = single_swing(158);
    const auto x = segment_tensor(ds.segments[0].frames);
    EXPECT_EQ(loaded.front_classifier->classify(loaded.front_backbone->encode(x).frame_features),
              m.front_classifier->classify(m.front_backbone->encode(x).frame_features));
}

TEST(InferStream, EmptyStream) {
    const auto r = infer_stream({}, {}, ModelBundle{}, InferOptions{});
    EXPECT_TRUE(r.events.empty());
    EXPECT_TRUE(r.scores.empty());
}

TEST(InferStream, MisalignedTracksAreReported) {
    auto ds = single_swing(159);
    std::erase_if(ds.tracks, [](const TrackSnapshot& t) { return t.id == 1 && t.frame >= 50 && t.frame <= 52; });
    try {
        infer_stream(ds.tracks, ds.keypoints, untrained_models(160), InferOptions{});
        FAIL() << "expected an alignment error";
    } catch (const AlignmentError& e) {
        EXPECT_NE(std::string(e.what()).find("50, 51, 52"), std::string::npos) << e.what();
    }
}

TEST(InferStream, OptionValidation) {
    const auto ds = single_swing(161);
    InferOptions bad;
    bad.threshold = 1.0;
    EXPECT_THROW(infer_stream(ds.tracks, ds.keypoints, untrained_models(162), bad), ConfigError);
    bad = {};
    bad.stride = 0;
    EXPECT_THROW(infer_stream(ds.tracks, ds.keypoints, untrained_models(162), bad), ConfigError);
}

TEST(InferStream, HighThresholdOnUntrainedModelsIsNearlySilent) {
    for (std::uint64_t seed : {163, 164, 165}) {
        const auto ds = single_swing(seed);
        InferOptions opts;
        opts.threshold = 0.999;
        const auto r = infer_stream(ds.tracks, ds.keypoints, untrained_models(seed), opts);
        EXPECT_LE(double(r.events.size()), 0.01 * double(r.scores.size()));
    }
}

TEST(InferStream, SingleAndDoublesShareTheWindowPath) {
    const auto ds = single_swing(166);
    const auto models = untrained_models(167);
    auto window_for = [&](std::int64_t player, std::int64_t center) {
        PlayerWindow w{player, player == 0 ? Side::Front : Side::Back, {}};
        for (std::int64_t f = center - 7; f <= center + 7; ++f) {
            w.frames.push_back(&ds.keypoints[static_cast<std::size_t>(2 * f + player)]);
        }
        return w;
    };
    const std::vector<PlayerWindow> two{window_for(0, 60), window_for(1, 60)};
    std::vector<PlayerWindow> four{window_for(0, 60), window_for(1, 60), window_for(0, 120), window_for(1, 120)};
    four[2].player_id = 2;
    four[3].player_id = 3;
    const auto r2 = infer_window(two, 60, models, 0.5);
    const auto r4 = infer_window(four, 60, models, 0.5);
    ASSERT_EQ(r4.confidences.size(), 4u);
    EXPECT_EQ(r4.confidences[0].confidence, r2.confidences[0].confidence);
    EXPECT_EQ(r4.confidences[1].confidence, r2.confidences[1].confidence);
    EXPECT_EQ(r4.confidences[2].confidence, score_player(four[2], models, WindowOptions{.min_valid = 12}));
}

TEST(InferStream, MissingPoseFramesScoreZero) {
    const auto ds = single_swing(168);
    PlayerWindow w{0, Side::Front, std::vector<const KeypointFrame*>(kWindow, nullptr)};
    for (std::size_t t = 0; t < 11; ++t) {
        w.frames[t] = &ds.keypoints[2 * (50 + t)];
    }
    WindowOptions opts;
    opts.min_valid = kMinValidInferenceFrames;
    EXPECT_EQ(score_player(w, untrained_models(169), opts), 0.0);
}

TEST_F(TrainedModels, SingleSwingGivesOneSuppressedEvent) {
    const auto ds = single_swing(170);
    InferOptions opts;
    const auto raw = infer_stream(ds.tracks, ds.keypoints, *models_, opts, ds.annotations);
    ASSERT_FALSE(raw.events.empty());
    for (std::size_t i = 1; i < raw.events.size(); ++i) {
        EXPECT_EQ(raw.events[i].frame, raw.events[i - 1].frame + 1) << "events must form one run";
    }
    EXPECT_LE(raw.events.front().frame, 100);
    EXPECT_GE(raw.events.back().frame, 100);
    for (const auto& e : raw.events) {
        EXPECT_EQ(e.player_id, 0);
        EXPECT_GE(e.confidence, 0.5);
    }

    opts.suppress = true;
    const auto kept = infer_stream(ds.tracks, ds.keypoints, *models_, opts);
    ASSERT_EQ(kept.events.size(), 1u);
    EXPECT_LE(std::abs(kept.events[0].frame - 100), 3);
    EXPECT_EQ(kept.events[0].player_id, 0);
}

TEST_F(TrainedModels, ScoreLogCarriesTruth) {
    const auto ds = single_swing(171);
    const auto r = infer_stream(ds.tracks, ds.keypoints, *models_, InferOptions{}, ds.annotations);
    ASSERT_EQ(r.scores.size(), 201u - 14u);
    std::size_t shots = 0;
    for (const auto& s : r.scores) {
        ASSERT_TRUE(s.truth);
        shots += *s.truth == Label::Shot;
        if (s.frame == 100) {
            EXPECT_EQ(*s.truth, Label::Shot);
        }
    }
    EXPECT_EQ(shots, 1u);
}

TEST_F(TrainedModels, EventCountMonotoneInThreshold) {
    PoseDatasetConfig pc;
    pc.count = 4;
    pc.spacing = 40;
    pc.seed = 172;
    const auto ds = generate_pose_dataset(pc);
    std::size_t previous = SIZE_MAX;
    for (double theta : {0.05, 0.2, 0.5, 0.8, 0.95, 0.99}) {
        InferOptions opts;
        opts.threshold = theta;
        const auto n = infer_stream(ds.tracks, ds.keypoints, *models_, opts).events.size();
        EXPECT_LE(n, previous) << "theta " << theta;
        previous = n;
    }
}

TEST_F(TrainedModels, DeterministicAcrossJobs) {
    const auto ds = single_swing(173);
    InferOptions opts;
    const auto a = infer_stream(ds.tracks, ds.keypoints, *models_, opts, ds.annotations);
    opts.jobs = 4;
    const auto b = infer_stream(ds.tracks, ds.keypoints, *models_, opts, ds.annotations);
    EXPECT_EQ(a.events, b.events);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(format_events(a.events), format_events(b.events));
    EXPECT_EQ(parse_events(format_events(a.events)), a.events);
}

TEST(Suppression, KeepsLocalMaxima) {
    const std::vector<ShotEvent> e{{10, 0, 0.6}, {12, 0, 0.9}, {14, 1, 0.7}, {30, 1, 0.55}, {33, 1, 0.55}};
    const auto kept = suppress_events(e);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].frame, 12);
    EXPECT_EQ(kept[1].frame, 30);
}

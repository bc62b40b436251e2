#include "rallypose/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "rallypose/error.hpp"
#include "rallypose/nn/checkpoint.hpp"
#include "rallypose/parallel.hpp"
#include "rallypose/textio.hpp"

namespace rallypose {

const Backbone& ModelBundle::backbone(Side side) const {
    const auto& m = side == Side::Front ? front_backbone : back_backbone;
    if (!m) {
        throw ConfigError(std::string("no backbone checkpoint for the ") + to_string(side) + " court");
    }
    return *m;
}

const Classifier& ModelBundle::classifier(Side side) const {
    const auto& m = side == Side::Front ? front_classifier : back_classifier;
    if (!m) {
        throw ConfigError(std::string("no classifier checkpoint for the ") + to_string(side) + " court");
    }
    return *m;
}

namespace {

const nlohmann::json& architecture_of(const nn::Checkpoint& ckpt, const std::filesystem::path& path) {
    if (!ckpt.sidecar.is_object() || !ckpt.sidecar.contains("architecture")) {
        throw ConfigError("checkpoint " + path.string() + " has no architecture sidecar");
    }
    return ckpt.sidecar.at("architecture");
}

} // namespace

Backbone backbone_from_checkpoint(const std::filesystem::path& path) {
    const auto ckpt = nn::load_checkpoint(path);
    const auto& arch = architecture_of(ckpt, path);
    BackboneConfig cfg;
    try {
        if (arch.at("model").get<std::string>() != "stgcn") {
            throw ConfigError("checkpoint " + path.string() + " is not a backbone");
        }
        const auto channels = arch.at("channels").get<std::vector<std::size_t>>();
        if (channels.size() != cfg.channels.size()) {
            throw ConfigError("checkpoint " + path.string() + " has an unexpected channel plan");
        }
        std::copy(channels.begin(), channels.end(), cfg.channels.begin());
        cfg.temporal_kernel = arch.at("temporal_kernel").get<std::size_t>();
        cfg.embedding_dim = arch.at("embedding_dim").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("checkpoint " + path.string() + ": bad architecture record: " + e.what());
    }
    Backbone model(cfg);
    nn::assign_parameters(model.parameters(), ckpt.parameters);
    return model;
}

Classifier classifier_from_checkpoint(const std::filesystem::path& path) {
    const auto ckpt = nn::load_checkpoint(path);
    const auto& arch = architecture_of(ckpt, path);
    ClassifierConfig cfg;
    try {
        if (arch.at("model").get<std::string>() != "transformer-encoder") {
            throw ConfigError("checkpoint " + path.string() + " is not a classifier");
        }
        cfg.layers = arch.at("layers").get<std::size_t>();
        cfg.model_dim = arch.at("model_dim").get<std::size_t>();
        cfg.heads = arch.at("heads").get<std::size_t>();
        cfg.ff_dim = arch.at("ff_dim").get<std::size_t>();
        cfg.positional = arch.at("positional").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("checkpoint " + path.string() + ": bad architecture record: " + e.what());
    }
    Classifier model(cfg);
    nn::assign_parameters(model.parameters(), ckpt.parameters);
    return model;
}

ModelBundle load_models(const std::filesystem::path& dir) {
    ModelBundle m;
    auto present = [&](const char* name) { return std::filesystem::exists(dir / name); };
    if (present("backbone_front.ckpt")) {
        m.front_backbone = backbone_from_checkpoint(dir / "backbone_front.ckpt");
    }
    if (present("backbone_back.ckpt")) {
        m.back_backbone = backbone_from_checkpoint(dir / "backbone_back.ckpt");
    }
    if (present("classifier_front.ckpt")) {
        m.front_classifier = classifier_from_checkpoint(dir / "classifier_front.ckpt");
    }
    if (present("classifier_back.ckpt")) {
        m.back_classifier = classifier_from_checkpoint(dir / "classifier_back.ckpt");
    }
    return m;
}

std::optional<ShotEvent> select_shot(std::span<const PlayerConfidence> players, double threshold,
                                     std::int64_t frame) {
    const PlayerConfidence* best = nullptr;
    for (const auto& p : players) {
        if (!best || p.confidence > best->confidence ||
            (p.confidence == best->confidence && p.player_id < best->player_id)) {
            best = &p;
        }
    }
    if (!best || best->confidence < threshold) {
        return std::nullopt;
    }
    return ShotEvent{frame, best->player_id, best->confidence};
}

double score_player(const PlayerWindow& window, const ModelBundle& models, const WindowOptions& opts) {
    const Backbone& backbone = models.backbone(window.side);
    const Classifier& classifier = models.classifier(window.side);
    if (window.frames.size() != kWindow) {
        throw ShapeError("score_player: window needs " + std::to_string(kWindow) + " frame slots");
    }
    const auto frames = assemble_window(window.frames, opts);
    if (!frames) {
        return 0.0;
    }
    return classifier.classify(backbone.encode(segment_tensor(*frames)).frame_features);
}

WindowResult infer_window(std::span<const PlayerWindow> players, std::int64_t center_frame,
                          const ModelBundle& models, double threshold) {
    WindowOptions opts;
    opts.min_valid = kMinValidInferenceFrames;
    WindowResult out;
    for (const auto& p : players) {
        out.confidences.push_back({p.player_id, score_player(p, models, opts)});
    }
    out.event = select_shot(out.confidences, threshold, center_frame);
    return out;
}

InferResult infer_stream(std::span<const TrackSnapshot> tracks, std::span<const KeypointFrame> keypoints,
                         const ModelBundle& models, const InferOptions& opts,
                         std::span<const ShotAnnotation> annotations) {
    if (opts.stride == 0) {
        throw ConfigError("infer: stride must be at least 1");
    }
    if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) {
        throw ConfigError("infer: threshold must lie in (0, 1)");
    }
    InferResult result;
    if (keypoints.empty()) {
        return result;
    }

    std::map<std::pair<std::int64_t, std::int64_t>, Side> track_side; // (player, frame)
    for (const auto& t : tracks) {
        track_side[{t.id, t.frame}] = t.side;
    }
    std::map<std::int64_t, std::map<std::int64_t, const KeypointFrame*>> by_player;
    std::set<std::int64_t> offending;
    std::int64_t first = keypoints.front().frame;
    std::int64_t last = keypoints.front().frame;
    for (const auto& kp : keypoints) {
        if (!track_side.count({kp.player_id, kp.frame})) {
            offending.insert(kp.frame);
        }
        by_player[kp.player_id][kp.frame] = &kp;
        first = std::min(first, kp.frame);
        last = std::max(last, kp.frame);
    }
    if (!offending.empty()) {
        std::string list;
        std::size_t shown = 0;
        for (auto f : offending) {
            if (shown++ == 20) {
                list += ", ...";
                break;
            }
            list += (list.empty() ? "" : ", ") + std::to_string(f);
        }
        throw AlignmentError("keypoint records without a matching track in " + std::to_string(offending.size()) +
                             " frame(s): " + list);
    }
    std::set<std::int64_t> shot_frames;
    for (const auto& a : annotations) {
        shot_frames.insert(a.frame);
    }

    std::vector<std::int64_t> centers;
    for (std::int64_t c = first + kHalfWindow; c + static_cast<std::int64_t>(kHalfWindow) <= last;
         c += static_cast<std::int64_t>(opts.stride)) {
        centers.push_back(c);
    }
    std::vector<WindowResult> windows(centers.size());
    parallel_for(centers.size(), opts.jobs, [&](std::size_t i) {
        const std::int64_t c = centers[i];
        std::vector<PlayerWindow> players;
        for (const auto& [pid, frames] : by_player) {
            auto lo = frames.lower_bound(c - static_cast<std::int64_t>(kHalfWindow));
            if (lo == frames.end() || lo->first > c + static_cast<std::int64_t>(kHalfWindow)) {
                continue;
            }
            PlayerWindow w;
            w.player_id = pid;
            w.frames.assign(kWindow, nullptr);
            std::optional<std::pair<std::int64_t, Side>> nearest; // (distance to c, side)
            for (auto it = lo; it != frames.end() && it->first <= c + static_cast<std::int64_t>(kHalfWindow); ++it) {
                w.frames[static_cast<std::size_t>(it->first - c + static_cast<std::int64_t>(kHalfWindow))] =
                    it->second;
                const std::int64_t dist = std::abs(it->first - c);
                if (!nearest || dist < nearest->first) {
                    nearest = {dist, track_side.at({pid, it->first})};
                }
            }
            auto at_center = track_side.find({pid, c});
            w.side = at_center != track_side.end() ? at_center->second : nearest->second;
            players.push_back(std::move(w));
        }
        windows[i] = infer_window(players, c, models, opts.threshold);
    });

    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& w = windows[i];
        if (w.confidences.empty()) {
            continue;
        }
        const auto best = select_shot(w.confidences, 0.0, centers[i]);
        ShotScore s{centers[i], best->player_id, best->confidence, std::nullopt};
        if (!annotations.empty()) {
            s.truth = shot_frames.count(centers[i]) ? Label::Shot : Label::NotShot;
        }
        result.scores.push_back(s);
        if (w.event) {
            result.events.push_back(*w.event);
        }
    }
    if (opts.suppress) {
        result.events = suppress_events(result.events);
    }
    return result;
}

std::vector<ShotEvent> suppress_events(std::span<const ShotEvent> events) {
    std::vector<ShotEvent> out;
    for (const auto& e : events) {
        const bool beaten = std::any_of(events.begin(), events.end(), [&](const ShotEvent& o) {
            if (&o == &e || std::abs(o.frame - e.frame) > kSuppressionRadius) {
                return false;
            }
            return o.confidence > e.confidence || (o.confidence == e.confidence && o.frame < e.frame);
        });
        if (!beaten) {
            out.push_back(e);
        }
    }
    return out;
}

std::string format_events(std::span<const ShotEvent> events) {
    std::string out;
    for (const auto& e : events) {
        out += "{\"frame\":" + format_number(e.frame) + ",\"player_id\":" + format_number(e.player_id) +
               ",\"confidence\":" + format_number(e.confidence) + "}\n";
    }
    return out;
}

std::vector<ShotEvent> parse_events(std::string_view text, const std::string& source) {
    using nlohmann::json;
    std::vector<ShotEvent> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        try {
            json j = json::parse(lines[i]);
            out.push_back({j.at("frame").get<std::int64_t>(), j.at("player_id").get<std::int64_t>(),
                           j.at("confidence").get<double>()});
        } catch (const json::exception& e) {
            throw ParseError(source, i + 1, e.what());
        }
    }
    return out;
}

} // namespace rallypose

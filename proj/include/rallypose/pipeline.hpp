#pragma once

// Sliding-window shot inference over tracked keypoint streams.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rallypose/backbone.hpp"
#include "rallypose/classifier.hpp"
#include "rallypose/ingest.hpp"
#include "rallypose/pose.hpp"
#include "rallypose/tracker.hpp"

namespace rallypose {

// Backbone/classifier pair per court side; either side may be absent until
// a window needs it.
struct ModelBundle {
    std::optional<Backbone> front_backbone;
    std::optional<Backbone> back_backbone;
    std::optional<Classifier> front_classifier;
    std::optional<Classifier> back_classifier;

    // Throw ConfigError when the side's model is missing.
    const Backbone& backbone(Side side) const;
    const Classifier& classifier(Side side) const;
};

// Reads backbone_{front,back}.ckpt and classifier_{front,back}.ckpt from `dir`,
// skipping files that do not exist.
ModelBundle load_models(const std::filesystem::path& dir);

Backbone backbone_from_checkpoint(const std::filesystem::path& path);
Classifier classifier_from_checkpoint(const std::filesystem::path& path);

struct ShotEvent {
    std::int64_t frame = 0;
    std::int64_t player_id = 0;
    double confidence = 0.0;
    friend bool operator==(const ShotEvent&, const ShotEvent&) = default;
};

struct PlayerConfidence {
    std::int64_t player_id = 0;
    double confidence = 0.0;
};

// Highest confidence wins, ties to the lower player id; no event when the
// maximum is below the threshold.
std::optional<ShotEvent> select_shot(std::span<const PlayerConfidence> players, double threshold,
                                     std::int64_t frame);

inline constexpr std::size_t kMinValidInferenceFrames = 12;

struct PlayerWindow {
    std::int64_t player_id = 0;
    Side side = Side::Front;
    std::vector<const KeypointFrame*> frames; // kWindow entries, nullptr when absent
};

struct WindowResult {
    std::vector<PlayerConfidence> confidences; // one per player, input order
    std::optional<ShotEvent> event;
};

// Players without enough valid pose frames score 0.
double score_player(const PlayerWindow& window, const ModelBundle& models, const WindowOptions& opts);

WindowResult infer_window(std::span<const PlayerWindow> players, std::int64_t center_frame,
                          const ModelBundle& models, double threshold);

struct InferOptions {
    double threshold = 0.5;
    std::size_t stride = 1;
    bool suppress = false;
    std::size_t jobs = 1;
};

struct InferResult {
    std::vector<ShotEvent> events;
    std::vector<ShotScore> scores; // best player per scored center frame
};

// Throws AlignmentError naming the frames where a keypoint record has no
// track snapshot with the same (frame, player_id). `annotations`, when
// non-empty, supplies the score truth labels.
InferResult infer_stream(std::span<const TrackSnapshot> tracks, std::span<const KeypointFrame> keypoints,
                         const ModelBundle& models, const InferOptions& opts,
                         std::span<const ShotAnnotation> annotations = {});

inline constexpr std::int64_t kSuppressionRadius = 5;

// Drops every event with a stronger one (higher confidence, or equal
// confidence at an earlier frame) within +-kSuppressionRadius frames.
std::vector<ShotEvent> suppress_events(std::span<const ShotEvent> events);

std::string format_events(std::span<const ShotEvent> events);
std::vector<ShotEvent> parse_events(std::string_view text, const std::string& source = "<events>");

} // namespace rallypose

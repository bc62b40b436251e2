#pragma once

// Seeded synthetic data: multi-agent court trajectories with detection
// dropout, parametric swing/idle pose streams, and missing-frame trials.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rallypose/court.hpp"
#include "rallypose/eval.hpp"
#include "rallypose/geometry.hpp"
#include "rallypose/ingest.hpp"
#include "rallypose/pose.hpp"
#include "rallypose/tracker.hpp"

namespace rallypose {

struct Waypoint {
    std::int64_t frame = 0;
    Point2 position;
};

// Linear between waypoints (constant velocity per leg), held before the first
// and after the last.
struct AgentPath {
    std::vector<Waypoint> waypoints;
};

// Detections of `agent` are dropped for frames [start, start + duration).
// The agent drifts by `reappear_offset` relative to its path while hidden and
// keeps that offset afterwards.
struct Occlusion {
    std::size_t agent = 0;
    std::int64_t start = 0;
    std::int64_t duration = 1;
    Point2 reappear_offset;
};

struct RallyScenario {
    int width = 1280;
    int height = 720;
    std::int64_t frames = 100;
    std::vector<AgentPath> agents;
    std::vector<Occlusion> occlusions;
    double noise_sigma = 0.0;
    double box_width = 60.0;
    double box_height = 150.0;
    std::uint64_t seed = 0;

    // Throws ScenarioError.
    void validate() const;
};

// Noiseless bottom-center of an agent, occlusion drift included.
Point2 agent_position(const RallyScenario& scenario, std::size_t agent, std::int64_t frame);

struct RallyOutput {
    std::vector<Detection> detections; // frame-major, agent order within a frame
    std::vector<TruthRecord> truth;    // one per detection
    CornerBoxSet corners;
};

RallyOutput generate_rally(const RallyScenario& scenario);

// Corner boxes of a broadcast-view court quadrilateral scaled to the frame.
CornerBoxSet default_corners(int width = 1280, int height = 720);

struct RandomRallyOptions {
    std::size_t agents = 4;
    std::int64_t frames = 200;
    double noise_sigma = 0.5;
    double min_speed = 2.0;
    double max_speed = 12.0;
    std::size_t occlusions = 0;
    std::int64_t max_occlusion = 15;
    double max_offset = 120.0;
};

// Agents wander inside separate court quadrants.
RallyScenario random_rally(std::uint64_t seed, const RandomRallyOptions& opts = {});

// `count` four-agent scenarios with one occlusion each (at most 15 hidden
// frames). Every scenario keeps agents at least 200 px apart and at least
// 10 px inside the court, and its reappearance lies within 150 px of the
// constant-velocity extrapolation; candidates violating this are redrawn.
std::vector<RallyScenario> occlusion_suite(std::size_t count, std::uint64_t seed);

struct PoseDatasetConfig {
    std::size_t count = 100;      // annotated swings = segments per class
    double amplitude = 1.0;       // swing size, normalized units
    double jitter = 0.05;         // per-joint idle noise, normalized units
    std::int64_t spacing = 20;    // frames between consecutive swings
    int width = 1280;
    int height = 720;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct PoseDataset {
    std::vector<KeypointFrame> keypoints; // raw pixels, players 0 (front) and 1 (back)
    std::vector<ShotAnnotation> annotations;
    std::vector<TrackSnapshot> tracks;
    std::map<std::int64_t, Side> sides;
    CornerBoxSet corners;
    std::vector<PoseSegment> segments;
};

PoseDataset generate_pose_dataset(const PoseDatasetConfig& cfg);

// center_frame,player_id,label,side
std::string format_labels_csv(std::span<const PoseSegment> segments);

// Straight track sampled every frame with Gaussian position noise.
std::vector<Point2> linear_track(Point2 start, Point2 velocity, std::size_t frames, double noise_sigma,
                                 std::uint64_t seed);

// Missing-frame trials over one run of consecutive per-frame positions. Each
// trial uses a predecessor frame, a last-seen frame s, a gap of g hidden
// frames and the reappearance at s + g + 1, so a trial spans 17 frames for
// g = 14; every start position of such a span is used. Throws DataError for
// runs shorter than 17.
GapTrials gap_scenarios(std::span<const Point2> run);

inline constexpr std::size_t kGapTrialSpan = kMaxGap + 3;

// Gap trials over every run of consecutive live frames per track id.
GapTrials gap_trials_from_tracks(std::span<const TrackSnapshot> tracks);

} // namespace rallypose

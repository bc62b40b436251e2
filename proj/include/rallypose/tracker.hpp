#pragma once

// ID-preserving player tracker.
//
// Detections are filtered to the court ROI and greedily associated with the
// active tracks. A track that loses its detection becomes a Ghost whose
// position is extrapolated at constant velocity,
//
//     S(t_s + t) = S(t_s) + [S(t_s) - S(t_s - 1)] * t,
//
// and a later unmatched detection within `reassign_radius` of the prediction
// inherits the ghost's id. New ids are minted only while the roster (active
// plus ghost identities) has a vacancy.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rallypose/court.hpp"
#include "rallypose/geometry.hpp"
#include "rallypose/ingest.hpp"

namespace rallypose {

struct TrackerConfig {
    double reassign_radius = 200.0;
    int max_missing = 15;
    double assoc_gate = 150.0;
    int roster_size = 4;
    bool reassign = true; // disabling is a diagnostic mode

    void validate() const;
};

struct Track {
    std::int64_t id = 0;
    Point2 center;
    BBox bbox;
    Point2 velocity; // pixels/frame; zero until two observations
    std::int64_t last_seen = 0;
    int observations = 0;
    Side side = Side::Front;
};

struct Ghost {
    std::int64_t id = 0;
    Point2 anchor;
    Point2 velocity;
    std::int64_t t_s = 0;
    int frames_missing = 1;
    BBox bbox; // bbox at t_s
    Side side = Side::Front;
    int observations = 0;
};

// anchor + velocity * t. Requires t >= 1.
Point2 predict(const Ghost& ghost, std::int64_t t);

struct Association {
    std::vector<std::pair<std::size_t, std::size_t>> pairs; // (track index, detection index)
    std::vector<std::size_t> unmatched_detections;
    std::vector<std::size_t> unmatched_tracks;
};

// Greedy globally-nearest pairing on bottom-center distance. Pairs farther
// than `gate` stay unmatched. Ties: lower distance, then lower track id, then
// detection order.
Association associate(std::span<const Track> tracks, std::span<const Detection> detections, double gate);

// Nearest ghost whose prediction at `now` lies within `radius` of the
// detection's bottom-center (ties to the lower id). The chosen ghost is
// removed from `ghosts`.
std::optional<Ghost> try_reassign(std::vector<Ghost>& ghosts, const Detection& detection, double radius,
                                  std::int64_t now);

struct TrackSnapshot {
    std::int64_t frame = 0;
    std::int64_t id = 0;
    BBox bbox;
    Point2 center;
    Side side = Side::Front;
    bool ghost = false;
    friend bool operator==(const TrackSnapshot&, const TrackSnapshot&) = default;
};

struct TrackerStats {
    std::int64_t minted = 0;
    std::int64_t reassigned = 0;
    std::int64_t expired = 0;
    std::int64_t dropped = 0;
};

class Tracker {
public:
    Tracker(CourtROI roi, TrackerConfig cfg);

    // Advances to `frame` (strictly increasing) and returns the snapshot of
    // every active track and ghost, sorted by id.
    std::vector<TrackSnapshot> step(std::int64_t frame, std::span<const Detection> detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const std::vector<Ghost>& ghosts() const { return ghosts_; }
    const TrackerStats& stats() const { return stats_; }
    const TrackerConfig& config() const { return cfg_; }

private:
    CourtROI roi_;
    TrackerConfig cfg_;
    std::vector<Track> tracks_;
    std::vector<Ghost> ghosts_;
    std::int64_t next_id_ = 0;
    std::optional<std::int64_t> last_frame_;
    TrackerStats stats_;
};

// Runs the tracker over a whole detection stream (grouped by frame, frames
// visited in increasing order). Frames without detections between the first
// and last detection frame are still stepped so ghosts age correctly.
std::vector<TrackSnapshot> track_stream(std::span<const Detection> detections, const CourtROI& roi,
                                        const TrackerConfig& cfg, TrackerStats* stats = nullptr);

std::string format_tracks(std::span<const TrackSnapshot> snapshots);
std::vector<TrackSnapshot> parse_tracks(std::string_view text, const std::string& source = "<tracks>");

} // namespace rallypose

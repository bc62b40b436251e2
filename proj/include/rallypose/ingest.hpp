#pragma once

// Interchange formats for upstream detector, pose-estimator and annotation
// outputs. Every reader validates the record invariants; no record that
// violates them is returned.
//
//   detections.jsonl  {"frame":int,"bbox":[x1,y1,x2,y2],"score":f}
//   keypoints.jsonl   {"frame":int,"player_id":int,"kp":[[x,y,v] x 17]}
//   annotations.csv   rally_id,frame,player_id
//   corners.json      {"width":int,"height":int,"boxes":[[x1,y1,x2,y2] x 4]}
//
// The format_* writers are canonical: format(parse(x)) == x for any file
// they produced.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rallypose/geometry.hpp"

namespace rallypose {

inline constexpr std::size_t kNumJoints = 17;

enum Joint : std::size_t {
    kNose = 0,
    kLeftEye,
    kRightEye,
    kLeftEar,
    kRightEar,
    kLeftShoulder,
    kRightShoulder,
    kLeftElbow,
    kRightElbow,
    kLeftWrist,
    kRightWrist,
    kLeftHip,
    kRightHip,
    kLeftKnee,
    kRightKnee,
    kLeftAnkle,
    kRightAnkle,
};

struct Detection {
    std::int64_t frame = 0;
    BBox bbox;
    double score = 0.0;
    friend bool operator==(const Detection&, const Detection&) = default;
};

// Keypoint coordinates are stored on a 1/1024 px grid. On it, width - x is
// exact for integer widths, so mirroring a record twice restores it bit for bit.
inline constexpr double kCoordinateGrid = 1024.0;
double snap_coordinate(double v);

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double visibility = 0.0;
    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointFrame {
    std::int64_t frame = 0;
    std::int64_t player_id = 0;
    std::array<Keypoint, kNumJoints> keypoints{};
    friend bool operator==(const KeypointFrame&, const KeypointFrame&) = default;
};

struct ShotAnnotation {
    std::int64_t frame = 0;
    std::int64_t player_id = 0;
    std::int64_t rally_id = 0;
    friend bool operator==(const ShotAnnotation&, const ShotAnnotation&) = default;
};

struct CornerBoxSet {
    int width = 0;
    int height = 0;
    std::array<BBox, 4> boxes{};
    friend bool operator==(const CornerBoxSet&, const CornerBoxSet&) = default;
};

std::vector<Detection> parse_detections(std::string_view text, const std::string& source = "<detections>");
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::string format_detections(std::span<const Detection> detections);

// Coordinates are snapped to the grid.
std::vector<KeypointFrame> parse_keypoints(std::string_view text, const std::string& source = "<keypoints>");
std::vector<KeypointFrame> read_keypoints(const std::filesystem::path& path);
std::string format_keypoints(std::span<const KeypointFrame> frames);

// Returned sorted by (frame, player_id); duplicate (frame, player_id) pairs
// are rejected.
std::vector<ShotAnnotation> parse_annotations(std::string_view text, const std::string& source = "<annotations>");
std::vector<ShotAnnotation> read_annotations(const std::filesystem::path& path);
std::string format_annotations(std::span<const ShotAnnotation> annotations);

CornerBoxSet parse_corners(std::string_view text, const std::string& source = "<corners>");
CornerBoxSet read_corners(const std::filesystem::path& path);
std::string format_corners(const CornerBoxSet& corners);

} // namespace rallypose

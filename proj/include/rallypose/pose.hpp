#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rallypose/geometry.hpp"
#include "rallypose/ingest.hpp"

namespace rallypose {

inline constexpr std::size_t kWindow = 15;
inline constexpr std::size_t kHalfWindow = kWindow / 2;
inline constexpr std::size_t kPoseDims = 2 * kNumJoints;
inline constexpr double kDefaultVisibilityFloor = 0.3;

// Hip-relative, per-axis standardized coordinates laid out joint-major:
// (x0, y0, x1, y1, ...).
struct NormalizedPose {
    std::array<double, kPoseDims> coords{};

    double x(std::size_t joint) const { return coords[2 * joint]; }
    double y(std::size_t joint) const { return coords[2 * joint + 1]; }
    friend bool operator==(const NormalizedPose&, const NormalizedPose&) = default;
};

enum class Label : std::uint8_t { NotShot = 0, Shot = 1 };

inline const char* to_string(Label l) { return l == Label::Shot ? "shot" : "notshot"; }

struct PoseSegment {
    std::vector<NormalizedPose> frames; // kWindow entries
    Label label = Label::NotShot;
    std::int64_t player_id = 0;
    Side side = Side::Front;
    std::int64_t center_frame = 0; // frames[kHalfWindow]
    friend bool operator==(const PoseSegment&, const PoseSegment&) = default;
};

struct NormalizeOptions {
    double visibility_floor = kDefaultVisibilityFloor;
    double min_sigma = 1e-6;
};

// Subtracts the hip midpoint (a single visible hip when the other is below the
// visibility floor) and standardizes each axis over the 17 joints. Throws
// DegeneratePoseError when both hips are missing or either axis has
// sigma <= min_sigma.
NormalizedPose normalize(const KeypointFrame& kp, const NormalizeOptions& opts = {});

// x -> frame_width - x with left/right joint indices swapped. An exact
// involution for grid coordinates and integer widths.
KeypointFrame flip_horizontal(const KeypointFrame& kp, double frame_width);

struct WindowOptions {
    NormalizeOptions norm;
    int max_interp_gap = 3;  // longest joint dropout that is filled linearly
    std::size_t min_valid = kWindow;
};

// Turns up to kWindow raw records (nullptr = no record for that frame) into
// normalized frames. Joint dropouts of at most max_interp_gap frames with
// visible neighbours on both sides are filled linearly in pixel space. A frame
// is valid when every joint is then present and normalize succeeds. Returns
// nullopt when fewer than min_valid frames are valid; otherwise invalid frames
// are filled from the nearest valid frames (linearly between them, copied at
// the ends).
std::optional<std::vector<NormalizedPose>> assemble_window(std::span<const KeypointFrame* const> records,
                                                           const WindowOptions& opts = {});

struct ExtractOptions {
    WindowOptions window;
    bool include_flipped = false; // adds horizontally mirrored copies
    double frame_width = 0.0;     // required when include_flipped
    std::size_t jobs = 1;
};

// For each annotation (frame f, player p): a Shot segment for p and a NotShot
// segment for the opponent, both over frames [f-7, f+7]. Segments whose window
// leaves the player's stream or fails assemble_window are dropped. Output is
// sorted by (center_frame, player_id). Requires exactly two players in the
// keypoint stream.
std::vector<PoseSegment> extract_segments(std::span<const KeypointFrame> keypoints,
                                          std::span<const ShotAnnotation> annotations,
                                          const std::map<std::int64_t, Side>& sides,
                                          const ExtractOptions& opts = {});

// segments.bin: "RPSEGBIN", u32 version, u64 count, u32 T, u32 joints,
// u32 dims, u32 label count then (u32 len, name) per label, followed by count
// metadata records (i64 center_frame, i64 player_id, u8 label, u8 side) and
// count*T*joints*dims little-endian doubles.
void write_segments(const std::filesystem::path& path, std::span<const PoseSegment> segments);
std::vector<PoseSegment> read_segments(const std::filesystem::path& path);
std::string format_segment_index(std::span<const PoseSegment> segments);

} // namespace rallypose

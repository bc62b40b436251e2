#include "rallypose/pose.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <utility>

#include "rallypose/error.hpp"
#include "rallypose/parallel.hpp"

namespace rallypose {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

NormalizedPose normalize(const KeypointFrame& kp, const NormalizeOptions& opts) {
    const Keypoint& lh = kp.keypoints[kLeftHip];
    const Keypoint& rh = kp.keypoints[kRightHip];
    const bool has_l = lh.visibility >= opts.visibility_floor;
    const bool has_r = rh.visibility >= opts.visibility_floor;
    Point2 hip;
    if (has_l && has_r) {
        hip = {(lh.x + rh.x) / 2.0, (lh.y + rh.y) / 2.0};
    } else if (has_l) {
        hip = {lh.x, lh.y};
    } else if (has_r) {
        hip = {rh.x, rh.y};
    } else {
        throw DegeneratePoseError("both hips missing in frame " + std::to_string(kp.frame));
    }

    std::array<double, kPoseDims> rel{};
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        rel[2 * j] = kp.keypoints[j].x - hip.x;
        rel[2 * j + 1] = kp.keypoints[j].y - hip.y;
    }
    NormalizedPose out;
    for (std::size_t axis = 0; axis < 2; ++axis) {
        double mean = 0.0;
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            mean += rel[2 * j + axis];
        }
        mean /= static_cast<double>(kNumJoints);
        double var = 0.0;
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            const double d = rel[2 * j + axis] - mean;
            var += d * d;
        }
        const double sigma = std::sqrt(var / static_cast<double>(kNumJoints));
        if (!(sigma > opts.min_sigma)) {
            throw DegeneratePoseError("pose has no spread along the " + std::string(axis == 0 ? "x" : "y") +
                                      " axis in frame " + std::to_string(kp.frame));
        }
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            out.coords[2 * j + axis] = (rel[2 * j + axis] - mean) / sigma;
        }
    }
    return out;
}

KeypointFrame flip_horizontal(const KeypointFrame& kp, double frame_width) {
    if (!(frame_width > 0.0)) {
        throw PreconditionError("flip_horizontal: frame width must be positive");
    }
    static constexpr std::array<std::size_t, kNumJoints> kMirror{0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15};
    KeypointFrame out = kp;
    for (std::size_t j = 0; j < kNumJoints; ++j) {
        const Keypoint& src = kp.keypoints[kMirror[j]];
        out.keypoints[j] = {frame_width - src.x, src.y, src.visibility};
    }
    return out;
}

std::optional<std::vector<NormalizedPose>> assemble_window(std::span<const KeypointFrame* const> records,
                                                           const WindowOptions& opts) {
    const std::size_t n = records.size();
    const double floor = opts.norm.visibility_floor;

    std::vector<KeypointFrame> filled(n);
    std::vector<std::array<bool, kNumJoints>> present(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (records[t]) {
            filled[t] = *records[t];
        }
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            present[t][j] = records[t] != nullptr && filled[t].keypoints[j].visibility >= floor;
        }
    }

    for (std::size_t j = 0; j < kNumJoints; ++j) {
        std::size_t t = 0;
        while (t < n) {
            if (present[t][j]) {
                ++t;
                continue;
            }
            std::size_t end = t;
            while (end < n && !present[end][j]) {
                ++end;
            }
            const std::size_t run = end - t;
            if (t > 0 && end < n && run <= static_cast<std::size_t>(opts.max_interp_gap)) {
                const Keypoint& a = filled[t - 1].keypoints[j];
                const Keypoint& b = filled[end].keypoints[j];
                const double span = static_cast<double>(run + 1);
                for (std::size_t k = t; k < end; ++k) {
                    const double w = static_cast<double>(k - t + 1) / span;
                    filled[k].keypoints[j] = {a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w, floor};
                    present[k][j] = true;
                }
            }
            t = end;
        }
    }

    std::vector<std::optional<NormalizedPose>> frames(n);
    std::size_t valid = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (!std::all_of(present[t].begin(), present[t].end(), [](bool b) { return b; })) {
            continue;
        }
        try {
            frames[t] = normalize(filled[t], opts.norm);
            ++valid;
        } catch (const DegeneratePoseError&) {
        }
    }
    if (valid < opts.min_valid || valid == 0) {
        return std::nullopt;
    }

    std::vector<NormalizedPose> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (frames[t]) {
            out[t] = *frames[t];
            continue;
        }
        std::optional<std::size_t> prev;
        std::optional<std::size_t> next;
        for (std::size_t k = t; k-- > 0;) {
            if (frames[k]) {
                prev = k;
                break;
            }
        }
        for (std::size_t k = t + 1; k < n; ++k) {
            if (frames[k]) {
                next = k;
                break;
            }
        }
        if (prev && next) {
            const double w = static_cast<double>(t - *prev) / static_cast<double>(*next - *prev);
            for (std::size_t c = 0; c < kPoseDims; ++c) {
                const double a = frames[*prev]->coords[c];
                const double b = frames[*next]->coords[c];
                out[t].coords[c] = a + (b - a) * w;
            }
        } else {
            out[t] = prev ? *frames[*prev] : *frames[*next];
        }
    }
    return out;
}

namespace {

struct PlayerStream {
    std::int64_t first = 0;
    std::int64_t last = 0;
    std::map<std::int64_t, const KeypointFrame*> by_frame;
};

std::optional<PoseSegment> make_segment(const PlayerStream& stream, std::int64_t center, std::int64_t player,
                                        Label label, Side side, const WindowOptions& opts) {
    const std::int64_t start = center - static_cast<std::int64_t>(kHalfWindow);
    const std::int64_t stop = center + static_cast<std::int64_t>(kHalfWindow);
    if (start < stream.first || stop > stream.last) {
        return std::nullopt;
    }
    std::array<const KeypointFrame*, kWindow> records{};
    for (std::size_t t = 0; t < kWindow; ++t) {
        auto it = stream.by_frame.find(start + static_cast<std::int64_t>(t));
        records[t] = it == stream.by_frame.end() ? nullptr : it->second;
    }
    WindowOptions strict = opts;
    strict.min_valid = kWindow;
    auto frames = assemble_window(records, strict);
    if (!frames) {
        return std::nullopt;
    }
    PoseSegment seg;
    seg.frames = std::move(*frames);
    seg.label = label;
    seg.player_id = player;
    seg.side = side;
    seg.center_frame = center;
    return seg;
}

} // namespace

std::vector<PoseSegment> extract_segments(std::span<const KeypointFrame> keypoints,
                                          std::span<const ShotAnnotation> annotations,
                                          const std::map<std::int64_t, Side>& sides, const ExtractOptions& opts) {
    if (opts.include_flipped && !(opts.frame_width > 0.0)) {
        throw ConfigError("extract: flip augmentation needs a positive frame width");
    }

    std::map<std::int64_t, PlayerStream> streams;
    std::vector<KeypointFrame> flipped_storage;
    for (const auto& kf : keypoints) {
        auto [it, inserted] = streams.try_emplace(kf.player_id);
        PlayerStream& s = it->second;
        if (inserted) {
            s.first = s.last = kf.frame;
        }
        s.first = std::min(s.first, kf.frame);
        s.last = std::max(s.last, kf.frame);
        s.by_frame[kf.frame] = &kf;
    }
    if (annotations.empty()) {
        return {};
    }
    if (streams.size() != 2) {
        throw DataError("segment extraction expects singles data with exactly two players, found " +
                        std::to_string(streams.size()));
    }

    std::map<std::int64_t, PlayerStream> flipped_streams;
    if (opts.include_flipped) {
        flipped_storage.reserve(keypoints.size());
        for (const auto& kf : keypoints) {
            flipped_storage.push_back(flip_horizontal(kf, opts.frame_width));
        }
        for (const auto& kf : flipped_storage) {
            auto [it, inserted] = flipped_streams.try_emplace(kf.player_id, streams.at(kf.player_id));
            if (inserted) {
                it->second.by_frame.clear();
            }
            it->second.by_frame[kf.frame] = &kf;
        }
    }

    for (const auto& a : annotations) {
        if (!streams.contains(a.player_id)) {
            throw ReferenceError("annotation at frame " + std::to_string(a.frame) + " references unknown player " +
                                 std::to_string(a.player_id));
        }
    }
    auto side_for = [&](std::int64_t player) {
        auto it = sides.find(player);
        if (it == sides.end()) {
            throw ReferenceError("no court side known for player " + std::to_string(player));
        }
        return it->second;
    };

    std::vector<std::vector<PoseSegment>> per_annotation(annotations.size());
    parallel_for(annotations.size(), opts.jobs, [&](std::size_t i) {
        const ShotAnnotation& a = annotations[i];
        std::int64_t opponent = -1;
        for (const auto& [pid, _] : streams) {
            if (pid != a.player_id) {
                opponent = pid;
            }
        }
        const std::array<std::pair<std::int64_t, Label>, 2> roles{std::pair{a.player_id, Label::Shot},
                                                                  std::pair{opponent, Label::NotShot}};
        auto& out = per_annotation[i];
        for (const auto& [pid, label] : roles) {
            if (auto seg = make_segment(streams.at(pid), a.frame, pid, label, side_for(pid), opts.window)) {
                out.push_back(std::move(*seg));
            }
        }
        if (opts.include_flipped) {
            for (const auto& [pid, label] : roles) {
                if (auto seg = make_segment(flipped_streams.at(pid), a.frame, pid, label, side_for(pid), opts.window)) {
                    out.push_back(std::move(*seg));
                }
            }
        }
    });

    std::vector<PoseSegment> out;
    for (auto& v : per_annotation) {
        for (auto& s : v) {
            out.push_back(std::move(s));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const PoseSegment& x, const PoseSegment& y) {
        return std::pair(x.center_frame, x.player_id) < std::pair(y.center_frame, y.player_id);
    });
    return out;
}

namespace {

constexpr char kSegMagic[8] = {'R', 'P', 'S', 'E', 'G', 'B', 'I', 'N'};
constexpr std::uint32_t kSegVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    buf.append(bytes, sizeof(T));
}

class Reader {
public:
    Reader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > data_.size()) {
            throw ParseError(source_, 0, "truncated binary container at byte " + std::to_string(pos_));
        }
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::string bytes(std::size_t n) {
        if (pos_ + n > data_.size()) {
            throw ParseError(source_, 0, "truncated binary container at byte " + std::to_string(pos_));
        }
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == data_.size(); }

private:
    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

} // namespace

void write_segments(const std::filesystem::path& path, std::span<const PoseSegment> segments) {
    std::string buf(kSegMagic, sizeof(kSegMagic));
    put<std::uint32_t>(buf, kSegVersion);
    put<std::uint64_t>(buf, segments.size());
    put<std::uint32_t>(buf, kWindow);
    put<std::uint32_t>(buf, kNumJoints);
    put<std::uint32_t>(buf, 2);
    put<std::uint32_t>(buf, 2);
    for (Label l : {Label::NotShot, Label::Shot}) {
        const std::string name = to_string(l);
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(name.size()));
        buf += name;
    }
    for (const auto& s : segments) {
        if (s.frames.size() != kWindow) {
            throw ShapeError("write_segments: segment does not hold 15 frames");
        }
        put<std::int64_t>(buf, s.center_frame);
        put<std::int64_t>(buf, s.player_id);
        put<std::uint8_t>(buf, static_cast<std::uint8_t>(s.label));
        put<std::uint8_t>(buf, s.side == Side::Front ? 0 : 1);
    }
    for (const auto& s : segments) {
        for (const auto& f : s.frames) {
            for (double v : f.coords) {
                put<double>(buf, v);
            }
        }
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

std::vector<PoseSegment> read_segments(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path.string());
    if (r.bytes(sizeof(kSegMagic)) != std::string(kSegMagic, sizeof(kSegMagic))) {
        throw ParseError(path.string(), 0, "not a segment container");
    }
    if (r.get<std::uint32_t>() != kSegVersion) {
        throw ParseError(path.string(), 0, "unsupported segment container version");
    }
    const auto count = r.get<std::uint64_t>();
    if (r.get<std::uint32_t>() != kWindow || r.get<std::uint32_t>() != kNumJoints || r.get<std::uint32_t>() != 2) {
        throw ParseError(path.string(), 0, "segment geometry does not match 15x17x2");
    }
    const auto labels = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < labels; ++i) {
        r.bytes(r.get<std::uint32_t>());
    }
    std::vector<PoseSegment> out(count);
    for (auto& s : out) {
        s.center_frame = r.get<std::int64_t>();
        s.player_id = r.get<std::int64_t>();
        const auto label = r.get<std::uint8_t>();
        const auto side = r.get<std::uint8_t>();
        if (label > 1 || side > 1) {
            throw ParseError(path.string(), 0, "bad label or side code");
        }
        s.label = static_cast<Label>(label);
        s.side = side == 0 ? Side::Front : Side::Back;
    }
    for (auto& s : out) {
        s.frames.resize(kWindow);
        for (auto& f : s.frames) {
            for (double& v : f.coords) {
                v = r.get<double>();
            }
        }
    }
    if (!r.done()) {
        throw ParseError(path.string(), 0, "trailing bytes after segment data");
    }
    return out;
}

std::string format_segment_index(std::span<const PoseSegment> segments) {
    std::string out = "center_frame,player_id,label,side\n";
    for (const auto& s : segments) {
        out += std::to_string(s.center_frame) + "," + std::to_string(s.player_id) + "," + to_string(s.label) + "," +
               to_string(s.side) + "\n";
    }
    return out;
}

} // namespace rallypose

#include "rallypose/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "rallypose/error.hpp"
#include "rallypose/textio.hpp"

namespace rallypose {

using nlohmann::json;

namespace {

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

json parse_json_line(std::string_view line, const std::string& source, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
}

const json& require_key(const json& obj, const char* key, const std::string& source, std::size_t lineno) {
    if (!obj.is_object()) {
        throw ParseError(source, lineno, "expected a JSON object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(source, lineno, std::string("missing key \"") + key + "\"");
    }
    return *it;
}

std::int64_t require_int(const json& v, const char* key, const std::string& source, std::size_t lineno) {
    if (!v.is_number_integer()) {
        throw ParseError(source, lineno, std::string("\"") + key + "\" must be an integer");
    }
    return v.get<std::int64_t>();
}

double require_number(const json& v, const char* what, const std::string& source, std::size_t lineno) {
    if (!v.is_number()) {
        throw ParseError(source, lineno, std::string(what) + " must be a number");
    }
    double d = v.get<double>();
    if (!std::isfinite(d)) {
        throw ParseError(source, lineno, std::string(what) + " must be finite");
    }
    return d;
}

std::string at_line(const std::string& source, std::size_t lineno) {
    return " (" + source + ":" + std::to_string(lineno) + ")";
}

BBox parse_box(const json& v, const char* what, const std::string& source, std::size_t lineno) {
    if (!v.is_array() || v.size() != 4) {
        throw ParseError(source, lineno, std::string(what) + " must be an array of 4 numbers");
    }
    return {require_number(v[0], what, source, lineno), require_number(v[1], what, source, lineno),
            require_number(v[2], what, source, lineno), require_number(v[3], what, source, lineno)};
}

std::string format_box(const BBox& b) {
    const std::array<double, 4> v{b.x1, b.y1, b.x2, b.y2};
    return format_array(v);
}

std::int64_t parse_csv_int(std::string_view field, const char* name, const std::string& source, std::size_t lineno) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(source, lineno, std::string(name) + " is not an integer: '" + std::string(field) + "'");
    }
    return value;
}

} // namespace

std::vector<Detection> parse_detections(std::string_view text, const std::string& source) {
    std::vector<Detection> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) {
            continue;
        }
        json obj = parse_json_line(lines[i], source, lineno);
        Detection d;
        d.frame = require_int(require_key(obj, "frame", source, lineno), "frame", source, lineno);
        d.bbox = parse_box(require_key(obj, "bbox", source, lineno), "bbox", source, lineno);
        d.score = require_number(require_key(obj, "score", source, lineno), "score", source, lineno);

        if (d.frame < 0) {
            throw ValidationError("frame", "must be >= 0" + at_line(source, lineno));
        }
        if (!(d.bbox.x1 < d.bbox.x2) || !(d.bbox.y1 < d.bbox.y2)) {
            throw ValidationError("bbox", "requires x1 < x2 and y1 < y2" + at_line(source, lineno));
        }
        if (d.score < 0.0 || d.score > 1.0) {
            throw ValidationError("score", "must lie in [0,1]" + at_line(source, lineno));
        }
        if (!out.empty() && d.frame < out.back().frame) {
            throw ValidationError("frame", "frame indices must be non-decreasing" + at_line(source, lineno));
        }
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> read_detections(const std::filesystem::path& path) {
    return parse_detections(read_text_file(path), path.string());
}

std::string format_detections(std::span<const Detection> detections) {
    std::string out;
    for (const auto& d : detections) {
        out += "{\"frame\":" + format_number(d.frame) + ",\"bbox\":" + format_box(d.bbox) +
               ",\"score\":" + format_number(d.score) + "}\n";
    }
    return out;
}

double snap_coordinate(double v) { return std::round(v * kCoordinateGrid) / kCoordinateGrid; }

std::vector<KeypointFrame> parse_keypoints(std::string_view text, const std::string& source) {
    std::vector<KeypointFrame> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) {
            continue;
        }
        json obj = parse_json_line(lines[i], source, lineno);
        KeypointFrame kf;
        kf.frame = require_int(require_key(obj, "frame", source, lineno), "frame", source, lineno);
        kf.player_id = require_int(require_key(obj, "player_id", source, lineno), "player_id", source, lineno);
        const json& kp = require_key(obj, "kp", source, lineno);
        if (!kp.is_array()) {
            throw ParseError(source, lineno, "\"kp\" must be an array");
        }
        if (kp.size() != kNumJoints) {
            throw ValidationError("kp", "expected 17 keypoints, got " + std::to_string(kp.size()) +
                                            at_line(source, lineno));
        }
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            const json& triple = kp[j];
            if (!triple.is_array() || triple.size() != 3) {
                throw ParseError(source, lineno, "keypoint " + std::to_string(j) + " must be [x,y,v]");
            }
            Keypoint& k = kf.keypoints[j];
            k.x = snap_coordinate(require_number(triple[0], "keypoint x", source, lineno));
            k.y = snap_coordinate(require_number(triple[1], "keypoint y", source, lineno));
            k.visibility = require_number(triple[2], "keypoint visibility", source, lineno);
            if (k.visibility < 0.0 || k.visibility > 1.0) {
                throw ValidationError("kp", "visibility of joint " + std::to_string(j) + " must lie in [0,1]" +
                                                at_line(source, lineno));
            }
        }
        if (kf.frame < 0) {
            throw ValidationError("frame", "must be >= 0" + at_line(source, lineno));
        }
        if (kf.player_id < 0) {
            throw ValidationError("player_id", "must be >= 0" + at_line(source, lineno));
        }
        out.push_back(kf);
    }
    return out;
}

std::vector<KeypointFrame> read_keypoints(const std::filesystem::path& path) {
    return parse_keypoints(read_text_file(path), path.string());
}

std::string format_keypoints(std::span<const KeypointFrame> frames) {
    std::string out;
    for (const auto& kf : frames) {
        out += "{\"frame\":" + format_number(kf.frame) + ",\"player_id\":" + format_number(kf.player_id) + ",\"kp\":[";
        for (std::size_t j = 0; j < kNumJoints; ++j) {
            if (j > 0) {
                out += ',';
            }
            const auto& k = kf.keypoints[j];
            const std::array<double, 3> v{k.x, k.y, k.visibility};
            out += format_array(v);
        }
        out += "]}\n";
    }
    return out;
}

std::vector<ShotAnnotation> parse_annotations(std::string_view text, const std::string& source) {
    std::vector<ShotAnnotation> out;
    auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && is_blank(lines[first])) {
        ++first;
    }
    if (first < lines.size() && lines[first].find_first_not_of("-0123456789, ") != std::string_view::npos) {
        std::string header(lines[first]);
        header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
        if (header != "rally_id,frame,player_id") {
            throw ParseError(source, first + 1, "expected header 'rally_id,frame,player_id'");
        }
        ++first;
    }
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (std::size_t i = first; i < lines.size(); ++i) {
        const std::size_t lineno = i + 1;
        if (is_blank(lines[i])) {
            continue;
        }
        std::string_view line = lines[i];
        std::array<std::string_view, 3> fields;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            if (count == fields.size()) {
                throw ParseError(source, lineno, "expected 3 comma-separated fields");
            }
            fields[count++] = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (count != 3) {
            throw ParseError(source, lineno, "expected 3 comma-separated fields");
        }
        ShotAnnotation a;
        a.rally_id = parse_csv_int(fields[0], "rally_id", source, lineno);
        a.frame = parse_csv_int(fields[1], "frame", source, lineno);
        a.player_id = parse_csv_int(fields[2], "player_id", source, lineno);
        if (a.frame < 0) {
            throw ValidationError("frame", "must be >= 0" + at_line(source, lineno));
        }
        if (a.player_id < 0) {
            throw ValidationError("player_id", "must be >= 0" + at_line(source, lineno));
        }
        if (!seen.emplace(a.frame, a.player_id).second) {
            throw ValidationError("annotation", "duplicate (frame " + std::to_string(a.frame) + ", player " +
                                                    std::to_string(a.player_id) + ")" + at_line(source, lineno));
        }
        out.push_back(a);
    }
    std::stable_sort(out.begin(), out.end(), [](const ShotAnnotation& x, const ShotAnnotation& y) {
        return std::pair(x.frame, x.player_id) < std::pair(y.frame, y.player_id);
    });
    return out;
}

std::vector<ShotAnnotation> read_annotations(const std::filesystem::path& path) {
    return parse_annotations(read_text_file(path), path.string());
}

std::string format_annotations(std::span<const ShotAnnotation> annotations) {
    std::string out = "rally_id,frame,player_id\n";
    for (const auto& a : annotations) {
        out += std::to_string(a.rally_id) + "," + std::to_string(a.frame) + "," + std::to_string(a.player_id) + "\n";
    }
    return out;
}

CornerBoxSet parse_corners(std::string_view text, const std::string& source) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source, 1, std::string("malformed JSON: ") + e.what());
    }
    CornerBoxSet c;
    const std::int64_t width = require_int(require_key(obj, "width", source, 1), "width", source, 1);
    const std::int64_t height = require_int(require_key(obj, "height", source, 1), "height", source, 1);
    if (width <= 0 || height <= 0 || width > 1'000'000 || height > 1'000'000) {
        throw ValidationError("width/height", "frame dimensions must be positive");
    }
    c.width = static_cast<int>(width);
    c.height = static_cast<int>(height);
    const json& boxes = require_key(obj, "boxes", source, 1);
    if (!boxes.is_array() || boxes.size() != 4) {
        throw ValidationError("boxes", "expected exactly four corner boxes");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        BBox b = parse_box(boxes[i], "corner box", source, 1);
        if (b.x1 > b.x2 || b.y1 > b.y2) {
            throw ValidationError("boxes", "corner box " + std::to_string(i) + " has x1 > x2 or y1 > y2");
        }
        if (b.x1 < 0 || b.y1 < 0 || b.x2 > c.width || b.y2 > c.height) {
            throw ValidationError("boxes", "corner box " + std::to_string(i) + " lies outside the frame");
        }
        c.boxes[i] = b;
    }
    return c;
}

CornerBoxSet read_corners(const std::filesystem::path& path) {
    return parse_corners(read_text_file(path), path.string());
}

std::string format_corners(const CornerBoxSet& corners) {
    std::string out = "{\"width\":" + std::to_string(corners.width) + ",\"height\":" + std::to_string(corners.height) +
                      ",\"boxes\":[";
    for (std::size_t i = 0; i < 4; ++i) {
        if (i > 0) {
            out += ',';
        }
        out += format_box(corners.boxes[i]);
    }
    out += "]}\n";
    return out;
}

} // namespace rallypose

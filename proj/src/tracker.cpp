#include "rallypose/tracker.hpp"

#include <algorithm>
#include <tuple>

#include <json.hpp>

#include "rallypose/error.hpp"
#include "rallypose/textio.hpp"

namespace rallypose {

void TrackerConfig::validate() const {
    if (!(reassign_radius > 0.0) || max_missing <= 0 || !(assoc_gate > 0.0)) {
        throw ConfigError("tracker: reassign_radius, max_missing and assoc_gate must be strictly positive");
    }
    if (roster_size != 2 && roster_size != 4) {
        throw ConfigError("tracker: roster_size must be 2 or 4");
    }
}

Point2 predict(const Ghost& ghost, std::int64_t t) {
    if (t < 1) {
        throw PreconditionError("predict: elapsed frames must be >= 1");
    }
    return ghost.anchor + ghost.velocity * static_cast<double>(t);
}

Association associate(std::span<const Track> tracks, std::span<const Detection> detections, double gate) {
    struct Candidate {
        double dist;
        std::int64_t track_id;
        std::size_t det;
        std::size_t track;
    };
    std::vector<Candidate> candidates;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        for (std::size_t d = 0; d < detections.size(); ++d) {
            const double dist = distance(tracks[t].center, detections[d].bbox.bottom_center());
            if (dist <= gate) {
                candidates.push_back({dist, tracks[t].id, d, t});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.dist, a.track_id, a.det) < std::tie(b.dist, b.track_id, b.det);
    });

    Association out;
    std::vector<bool> track_used(tracks.size(), false);
    std::vector<bool> det_used(detections.size(), false);
    for (const auto& c : candidates) {
        if (track_used[c.track] || det_used[c.det]) {
            continue;
        }
        track_used[c.track] = true;
        det_used[c.det] = true;
        out.pairs.emplace_back(c.track, c.det);
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        if (!track_used[t]) {
            out.unmatched_tracks.push_back(t);
        }
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (!det_used[d]) {
            out.unmatched_detections.push_back(d);
        }
    }
    return out;
}

std::optional<Ghost> try_reassign(std::vector<Ghost>& ghosts, const Detection& detection, double radius,
                                  std::int64_t now) {
    const Point2 c = detection.bbox.bottom_center();
    std::optional<std::size_t> best;
    double best_dist = 0.0;
    for (std::size_t i = 0; i < ghosts.size(); ++i) {
        const Ghost& g = ghosts[i];
        const double d = distance(predict(g, now - g.t_s), c);
        if (d > radius) {
            continue;
        }
        if (!best || d < best_dist || (d == best_dist && g.id < ghosts[*best].id)) {
            best = i;
            best_dist = d;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    Ghost g = ghosts[*best];
    ghosts.erase(ghosts.begin() + static_cast<std::ptrdiff_t>(*best));
    return g;
}

Tracker::Tracker(CourtROI roi, TrackerConfig cfg) : roi_(roi), cfg_(cfg) { cfg_.validate(); }

std::vector<TrackSnapshot> Tracker::step(std::int64_t frame, std::span<const Detection> detections) {
    if (last_frame_ && frame <= *last_frame_) {
        throw SequencingError("tracker: frame " + std::to_string(frame) + " does not follow frame " +
                              std::to_string(*last_frame_));
    }
    last_frame_ = frame;

    std::vector<Detection> on_court;
    for (const auto& d : detections) {
        if (contains(roi_, d.bbox.bottom_center())) {
            on_court.push_back(d);
        }
    }

    const Association assoc = associate(tracks_, on_court, cfg_.assoc_gate);

    for (const auto& [ti, di] : assoc.pairs) {
        Track& t = tracks_[ti];
        const Point2 c = on_court[di].bbox.bottom_center();
        t.velocity = (c - t.center) * (1.0 / static_cast<double>(frame - t.last_seen));
        t.center = c;
        t.bbox = on_court[di].bbox;
        t.last_seen = frame;
        ++t.observations;
    }

    std::vector<Track> kept;
    kept.reserve(tracks_.size());
    {
        std::vector<bool> lost(tracks_.size(), false);
        for (std::size_t ti : assoc.unmatched_tracks) {
            lost[ti] = true;
        }
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            const Track& t = tracks_[i];
            if (!lost[i]) {
                kept.push_back(t);
                continue;
            }
            Ghost g;
            g.id = t.id;
            g.anchor = t.center;
            g.velocity = t.velocity;
            g.t_s = t.last_seen;
            g.frames_missing = static_cast<int>(frame - t.last_seen);
            g.bbox = t.bbox;
            g.side = t.side;
            g.observations = t.observations;
            ghosts_.push_back(g);
        }
    }
    tracks_ = std::move(kept);

    for (std::size_t di : assoc.unmatched_detections) {
        const Detection& d = on_court[di];
        const Point2 c = d.bbox.bottom_center();
        if (cfg_.reassign) {
            if (auto g = try_reassign(ghosts_, d, cfg_.reassign_radius, frame)) {
                Track t;
                t.id = g->id;
                t.center = c;
                t.bbox = d.bbox;
                t.velocity = (c - g->anchor) * (1.0 / static_cast<double>(frame - g->t_s));
                t.last_seen = frame;
                t.observations = g->observations + 1;
                tracks_.push_back(t);
                ++stats_.reassigned;
                continue;
            }
        }
        if (tracks_.size() + ghosts_.size() < static_cast<std::size_t>(cfg_.roster_size)) {
            Track t;
            t.id = next_id_++;
            t.center = c;
            t.bbox = d.bbox;
            t.last_seen = frame;
            t.observations = 1;
            tracks_.push_back(t);
            ++stats_.minted;
        } else {
            ++stats_.dropped;
        }
    }

    std::vector<Ghost> alive;
    for (Ghost& g : ghosts_) {
        g.frames_missing = static_cast<int>(frame - g.t_s);
        if (g.frames_missing > cfg_.max_missing) {
            ++stats_.expired;
        } else {
            alive.push_back(g);
        }
    }
    ghosts_ = std::move(alive);

    std::vector<TrackSnapshot> snapshot;
    for (Track& t : tracks_) {
        t.side = side_of(roi_, t.center);
        snapshot.push_back({frame, t.id, t.bbox, t.center, t.side, false});
    }
    for (Ghost& g : ghosts_) {
        const Point2 p = predict(g, frame - g.t_s);
        if (contains(roi_, p)) {
            g.side = side_of(roi_, p);
        }
        snapshot.push_back({frame, g.id, g.bbox.shifted(p - g.anchor), p, g.side, true});
    }
    std::sort(snapshot.begin(), snapshot.end(),
              [](const TrackSnapshot& a, const TrackSnapshot& b) { return a.id < b.id; });
    std::sort(tracks_.begin(), tracks_.end(), [](const Track& a, const Track& b) { return a.id < b.id; });
    std::sort(ghosts_.begin(), ghosts_.end(), [](const Ghost& a, const Ghost& b) { return a.id < b.id; });
    return snapshot;
}

std::vector<TrackSnapshot> track_stream(std::span<const Detection> detections, const CourtROI& roi,
                                        const TrackerConfig& cfg, TrackerStats* stats) {
    std::vector<TrackSnapshot> out;
    if (detections.empty()) {
        if (stats) {
            *stats = {};
        }
        return out;
    }
    std::vector<Detection> sorted(detections.begin(), detections.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    Tracker tracker(roi, cfg);
    std::size_t i = 0;
    for (std::int64_t f = sorted.front().frame; f <= sorted.back().frame; ++f) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j].frame == f) {
            ++j;
        }
        auto snap = tracker.step(f, std::span<const Detection>(sorted.data() + i, j - i));
        out.insert(out.end(), snap.begin(), snap.end());
        i = j;
    }
    if (stats) {
        *stats = tracker.stats();
    }
    return out;
}

std::string format_tracks(std::span<const TrackSnapshot> snapshots) {
    std::string out;
    for (const auto& s : snapshots) {
        const std::array<double, 4> box{s.bbox.x1, s.bbox.y1, s.bbox.x2, s.bbox.y2};
        const std::array<double, 2> center{s.center.x, s.center.y};
        out += "{\"frame\":" + format_number(s.frame) + ",\"id\":" + format_number(s.id) +
               ",\"bbox\":" + format_array(box) + ",\"center\":" + format_array(center) + ",\"side\":\"" +
               to_string(s.side) + "\",\"ghost\":" + (s.ghost ? "true" : "false") + "}\n";
    }
    return out;
}

std::vector<TrackSnapshot> parse_tracks(std::string_view text, const std::string& source) {
    using nlohmann::json;
    std::vector<TrackSnapshot> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            json j = json::parse(lines[i]);
            TrackSnapshot s;
            s.frame = j.at("frame").get<std::int64_t>();
            s.id = j.at("id").get<std::int64_t>();
            const auto& b = j.at("bbox");
            const auto& c = j.at("center");
            if (b.size() != 4 || c.size() != 2) {
                throw ParseError(source, i + 1, "bbox needs 4 values and center 2");
            }
            s.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
            s.center = {c[0].get<double>(), c[1].get<double>()};
            const std::string side = j.at("side").get<std::string>();
            if (side != "front" && side != "back") {
                throw ValidationError("side", "must be \"front\" or \"back\" (" + source + ":" + std::to_string(i + 1) + ")");
            }
            s.side = side == "front" ? Side::Front : Side::Back;
            s.ghost = j.at("ghost").get<bool>();
            out.push_back(s);
        } catch (const json::exception& e) {
            throw ParseError(source, i + 1, e.what());
        }
    }
    return out;
}

} // namespace rallypose

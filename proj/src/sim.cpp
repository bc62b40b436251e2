#include "rallypose/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rallypose/error.hpp"
#include "rallypose/random.hpp"

namespace rallypose {

void RallyScenario::validate() const {
    if (width <= 0 || height <= 0) {
        throw ScenarioError("scenario: frame size must be positive");
    }
    if (frames < 1) {
        throw ScenarioError("scenario: frame count must be at least 1");
    }
    if (agents.size() != 2 && agents.size() != 4) {
        throw ScenarioError("scenario: needs 2 or 4 agents, got " + std::to_string(agents.size()));
    }
    for (std::size_t a = 0; a < agents.size(); ++a) {
        const auto& w = agents[a].waypoints;
        if (w.empty()) {
            throw ScenarioError("scenario: agent " + std::to_string(a) + " has no waypoints");
        }
        for (std::size_t i = 1; i < w.size(); ++i) {
            if (w[i].frame <= w[i - 1].frame) {
                throw ScenarioError("scenario: waypoint frames of agent " + std::to_string(a) +
                                    " must increase strictly");
            }
        }
    }
    if (!(noise_sigma >= 0.0) || !(box_width > 0.0) || !(box_height > 0.0)) {
        throw ScenarioError("scenario: noise must be non-negative and boxes non-empty");
    }
    for (std::size_t i = 0; i < occlusions.size(); ++i) {
        const auto& o = occlusions[i];
        if (o.agent >= agents.size()) {
            throw ScenarioError("scenario: occlusion " + std::to_string(i) + " names an unknown agent");
        }
        if (o.duration < 1) {
            throw ScenarioError("scenario: occlusion duration must be at least 1");
        }
        if (o.start < 0 || o.start + o.duration > frames) {
            throw ScenarioError("scenario: occlusion " + std::to_string(i) + " leaves the frame range");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const auto& p = occlusions[j];
            if (p.agent == o.agent && o.start < p.start + p.duration && p.start < o.start + o.duration) {
                throw ScenarioError("scenario: occlusions " + std::to_string(j) + " and " + std::to_string(i) +
                                    " overlap on agent " + std::to_string(o.agent));
            }
        }
    }
}

Point2 agent_position(const RallyScenario& scenario, std::size_t agent, std::int64_t frame) {
    const auto& w = scenario.agents.at(agent).waypoints;
    Point2 p;
    if (frame <= w.front().frame) {
        p = w.front().position;
    } else if (frame >= w.back().frame) {
        p = w.back().position;
    } else {
        auto hi = std::upper_bound(w.begin(), w.end(), frame,
                                   [](std::int64_t f, const Waypoint& wp) { return f < wp.frame; });
        auto lo = hi - 1;
        const double u = static_cast<double>(frame - lo->frame) / static_cast<double>(hi->frame - lo->frame);
        p = lo->position + (hi->position - lo->position) * u;
    }
    for (const auto& o : scenario.occlusions) {
        if (o.agent != agent || frame < o.start) {
            continue;
        }
        const double u = std::min(1.0, static_cast<double>(frame - o.start + 1) / static_cast<double>(o.duration + 1));
        p = p + o.reappear_offset * u;
    }
    return p;
}

RallyOutput generate_rally(const RallyScenario& scenario) {
    scenario.validate();
    RallyOutput out;
    out.corners = default_corners(scenario.width, scenario.height);
    auto rng = make_rng(scenario.seed, {7});
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::int64_t f = 0; f < scenario.frames; ++f) {
        for (std::size_t a = 0; a < scenario.agents.size(); ++a) {
            const bool hidden = std::any_of(scenario.occlusions.begin(), scenario.occlusions.end(), [&](const auto& o) {
                return o.agent == a && f >= o.start && f < o.start + o.duration;
            });
            if (hidden) {
                continue;
            }
            Point2 p = agent_position(scenario, a, f);
            if (scenario.noise_sigma > 0.0) {
                const double dx = noise(rng) * scenario.noise_sigma;
                const double dy = noise(rng) * scenario.noise_sigma;
                p = p + Point2{dx, dy};
            }
            const BBox box{p.x - scenario.box_width / 2.0, p.y - scenario.box_height, p.x + scenario.box_width / 2.0,
                           p.y};
            out.detections.push_back({f, box, 0.9});
            out.truth.push_back({f, static_cast<std::int64_t>(a), box.bottom_center()});
        }
    }
    return out;
}

CornerBoxSet default_corners(int width, int height) {
    const double sx = width / 1280.0;
    const double sy = height / 720.0;
    const double s = 24.0 * std::min(sx, sy);
    const Point2 tl{240 * sx, 160 * sy};
    const Point2 tr{1040 * sx, 160 * sy};
    const Point2 br{1180 * sx, 680 * sy};
    const Point2 bl{100 * sx, 680 * sy};
    CornerBoxSet c;
    c.width = width;
    c.height = height;
    c.boxes = {BBox{tl.x, tl.y, tl.x + s, tl.y + s}, BBox{tr.x - s, tr.y, tr.x, tr.y + s},
               BBox{br.x - s, br.y - s, br.x, br.y}, BBox{bl.x, bl.y - s, bl.x + s, bl.y}};
    return c;
}

namespace {

struct Box {
    double x0, y0, x1, y1;
};

// front-left, back-right, front-right, back-left at 1280x720.
constexpr std::array<Box, 4> kQuadrants{{
    {260, 550, 500, 660},
    {780, 190, 980, 300},
    {780, 550, 1020, 660},
    {300, 190, 500, 300},
}};

Point2 uniform_in(const Box& b, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(b.x0, b.x1);
    std::uniform_real_distribution<double> uy(b.y0, b.y1);
    const double x = ux(rng);
    return {x, uy(rng)};
}

} // namespace

RallyScenario random_rally(std::uint64_t seed, const RandomRallyOptions& opts) {
    if (opts.agents != 2 && opts.agents != 4) {
        throw ScenarioError("random rally: needs 2 or 4 agents");
    }
    if (!(opts.min_speed > 0.0) || opts.max_speed < opts.min_speed) {
        throw ScenarioError("random rally: invalid speed range");
    }
    RallyScenario s;
    s.frames = opts.frames;
    s.noise_sigma = opts.noise_sigma;
    s.seed = seed;
    auto rng = make_rng(seed, {8});
    std::uniform_real_distribution<double> speed(opts.min_speed, opts.max_speed);
    for (std::size_t a = 0; a < opts.agents; ++a) {
        AgentPath path;
        std::int64_t f = 0;
        Point2 p = uniform_in(kQuadrants[a], rng);
        path.waypoints.push_back({0, p});
        while (f < opts.frames) {
            const Point2 q = uniform_in(kQuadrants[a], rng);
            const double v = speed(rng);
            const auto legs = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(distance(p, q) / v)));
            f += legs;
            path.waypoints.push_back({f, q});
            p = q;
        }
        s.agents.push_back(std::move(path));
    }
    std::uniform_int_distribution<std::size_t> agent(0, opts.agents - 1);
    std::uniform_int_distribution<std::int64_t> duration(1, opts.max_occlusion);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> magnitude(0.0, opts.max_offset);
    for (std::size_t i = 0; i < opts.occlusions; ++i) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Occlusion o;
            o.agent = agent(rng);
            o.duration = duration(rng);
            const std::int64_t latest = opts.frames - o.duration - 40;
            if (latest < 30) {
                throw ScenarioError("random rally: too few frames for an occlusion");
            }
            o.start = std::uniform_int_distribution<std::int64_t>(30, latest)(rng);
            const double th = angle(rng);
            const double m = magnitude(rng);
            o.reappear_offset = {m * std::cos(th), m * std::sin(th)};
            const bool clash = std::any_of(s.occlusions.begin(), s.occlusions.end(), [&](const Occlusion& p) {
                return p.agent == o.agent && o.start < p.start + p.duration + 20 && p.start < o.start + o.duration + 20;
            });
            if (!clash) {
                s.occlusions.push_back(o);
                break;
            }
        }
    }
    s.validate();
    return s;
}

namespace {

constexpr double kSuiteCourtMargin = 10.0;

} // namespace

std::vector<RallyScenario> occlusion_suite(std::size_t count, std::uint64_t seed) {
    const CourtROI roi = build_roi(default_corners());
    RandomRallyOptions opts;
    opts.occlusions = 1;
    std::vector<RallyScenario> out;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == 1000) {
                throw ScenarioError("occlusion suite: no admissible scenario found");
            }
            RallyScenario s = random_rally(seed ^ (i << 20) ^ (attempt << 40), opts);
            const Occlusion& o = s.occlusions.front();
            const Point2 last = agent_position(s, o.agent, o.start - 1);
            const Point2 prev = agent_position(s, o.agent, o.start - 2);
            const Point2 predicted = last + (last - prev) * static_cast<double>(o.duration + 1);
            if (distance(predicted, agent_position(s, o.agent, o.start + o.duration)) > 150.0) {
                continue;
            }
            bool ok = true;
            for (std::int64_t f = 0; f < s.frames && ok; ++f) {
                for (std::size_t a = 0; a < s.agents.size() && ok; ++a) {
                    const Point2 pa = agent_position(s, a, f);
                    // A square of half-side kSuiteCourtMargin inside the convex court
                    // keeps noisy detections from crossing its edge.
                    for (double dx : {-kSuiteCourtMargin, kSuiteCourtMargin}) {
                        for (double dy : {-kSuiteCourtMargin, kSuiteCourtMargin}) {
                            ok = ok && contains(roi, pa + Point2{dx, dy});
                        }
                    }
                    for (std::size_t b = a + 1; b < s.agents.size() && ok; ++b) {
                        ok = distance(pa, agent_position(s, b, f)) >= 200.0;
                    }
                }
            }
            if (ok) {
                out.push_back(std::move(s));
                break;
            }
        }
    }
    return out;
}

namespace {

// Standing pose, feet at the origin, unit height, y pointing down.
constexpr std::array<Point2, kNumJoints> kTemplate{{
    {0.00, -0.90},  {0.03, -0.93},  {-0.03, -0.93}, {0.06, -0.91},  {-0.06, -0.91}, {0.12, -0.80},
    {-0.12, -0.80}, {0.16, -0.62},  {-0.16, -0.62}, {0.17, -0.46},  {-0.17, -0.46}, {0.08, -0.50},
    {-0.08, -0.50}, {0.09, -0.27},  {-0.09, -0.27}, {0.10, -0.02},  {-0.10, -0.02},
}};

std::pair<double, double> template_sigma() {
    double mx = 0.0, my = 0.0;
    for (const auto& p : kTemplate) {
        mx += p.x;
        my += p.y;
    }
    mx /= kNumJoints;
    my /= kNumJoints;
    double vx = 0.0, vy = 0.0;
    for (const auto& p : kTemplate) {
        vx += (p.x - mx) * (p.x - mx);
        vy += (p.y - my) * (p.y - my);
    }
    return {std::sqrt(vx / kNumJoints), std::sqrt(vy / kNumJoints)};
}

} // namespace

PoseDataset generate_pose_dataset(const PoseDatasetConfig& cfg) {
    if (cfg.count < 1) {
        throw DataError("pose dataset: count must be at least 1");
    }
    if (cfg.spacing < static_cast<std::int64_t>(kWindow) + 1 || cfg.amplitude < 0.0 || cfg.jitter < 0.0) {
        throw ConfigError("pose dataset: spacing must exceed the window and amplitudes be non-negative");
    }
    PoseDataset out;
    out.corners = default_corners(cfg.width, cfg.height);
    const double sx = cfg.width / 1280.0;
    const double sy = cfg.height / 720.0;
    struct Player {
        Point2 anchor;
        double height;
        Side side;
    };
    const std::array<Player, 2> players{{{{640 * sx, 620 * sy}, 160 * sy, Side::Front},
                                         {{640 * sx, 260 * sy}, 100 * sy, Side::Back}}};
    out.sides = {{0, Side::Front}, {1, Side::Back}};

    const auto [tsx, tsy] = template_sigma();
    const std::int64_t total = cfg.spacing * static_cast<std::int64_t>(cfg.count + 1) + 1;
    for (std::size_t k = 0; k < cfg.count; ++k) {
        out.annotations.push_back({cfg.spacing * static_cast<std::int64_t>(k + 1), static_cast<std::int64_t>(k % 2), 0});
    }
    auto rng = make_rng(cfg.seed, {11});
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const std::array<double, 2> phases{phase(rng), phase(rng)};

    for (std::int64_t f = 0; f < total; ++f) {
        for (std::int64_t pid = 0; pid < 2; ++pid) {
            const Player& pl = players[static_cast<std::size_t>(pid)];
            const double shuffle = 20.0 * sx * std::sin(2.0 * std::numbers::pi * static_cast<double>(f) / 97.0 +
                                                        phases[static_cast<std::size_t>(pid)]);
            const Point2 anchor{pl.anchor.x + shuffle, pl.anchor.y};
            // Swing envelope: 1 at the contact frame, 0 from 8 frames away.
            double swing = 0.0;
            for (const auto& a : out.annotations) {
                const auto dt = static_cast<double>(f - a.frame);
                if (a.player_id == pid && std::abs(dt) < 8.0) {
                    swing = 0.5 * (1.0 + std::cos(std::numbers::pi * dt / 8.0));
                }
            }
            const double ux = pl.height * tsx;
            const double uy = pl.height * tsy;
            KeypointFrame kp;
            kp.frame = f;
            kp.player_id = pid;
            for (std::size_t j = 0; j < kNumJoints; ++j) {
                Point2 p = anchor + kTemplate[j] * pl.height;
                if (j == kRightWrist) {
                    p = p + Point2{0.5 * cfg.amplitude * ux * swing, -cfg.amplitude * uy * swing};
                } else if (j == kRightElbow) {
                    p = p + Point2{0.25 * cfg.amplitude * ux * swing, -0.5 * cfg.amplitude * uy * swing};
                }
                const double nx = noise(rng);
                const double ny = noise(rng);
                p = p + Point2{nx * cfg.jitter * ux, ny * cfg.jitter * uy};
                kp.keypoints[j] = {snap_coordinate(p.x), snap_coordinate(p.y), 0.9};
            }
            out.keypoints.push_back(kp);

            double x1 = kp.keypoints[0].x, x2 = x1, y1 = kp.keypoints[0].y, y2 = y1;
            for (const auto& k : kp.keypoints) {
                x1 = std::min(x1, k.x);
                x2 = std::max(x2, k.x);
                y1 = std::min(y1, k.y);
                y2 = std::max(y2, k.y);
            }
            const BBox box{x1, y1, x2, y2};
            out.tracks.push_back({f, pid, box, box.bottom_center(), pl.side, false});
        }
    }
    ExtractOptions ex;
    ex.jobs = cfg.jobs;
    out.segments = extract_segments(out.keypoints, out.annotations, out.sides, ex);
    return out;
}

std::string format_labels_csv(std::span<const PoseSegment> segments) { return format_segment_index(segments); }

std::vector<Point2> linear_track(Point2 start, Point2 velocity, std::size_t frames, double noise_sigma,
                                 std::uint64_t seed) {
    auto rng = make_rng(seed, {12});
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Point2> out;
    out.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        Point2 p = start + velocity * static_cast<double>(f);
        if (noise_sigma > 0.0) {
            const double dx = noise(rng) * noise_sigma;
            const double dy = noise(rng) * noise_sigma;
            p = p + Point2{dx, dy};
        }
        out.push_back(p);
    }
    return out;
}

GapTrials gap_scenarios(std::span<const Point2> run) {
    if (run.size() < kGapTrialSpan) {
        throw DataError("gap trials: need " + std::to_string(kGapTrialSpan) + " consecutive positions, got " +
                        std::to_string(run.size()));
    }
    GapTrials trials;
    for (std::size_t s = 1; s + kMaxGap + 1 < run.size(); ++s) {
        const Point2 velocity = run[s] - run[s - 1];
        for (int g = 1; g <= kMaxGap; ++g) {
            const Point2 predicted = run[s] + velocity * static_cast<double>(g + 1);
            trials[static_cast<std::size_t>(g - 1)].push_back(distance(predicted, run[s + static_cast<std::size_t>(g) + 1]));
        }
    }
    return trials;
}

GapTrials gap_trials_from_tracks(std::span<const TrackSnapshot> tracks) {
    std::map<std::int64_t, std::map<std::int64_t, Point2>> by_id;
    for (const auto& t : tracks) {
        if (!t.ghost) {
            by_id[t.id][t.frame] = t.center;
        }
    }
    GapTrials all;
    bool any = false;
    for (const auto& [id, frames] : by_id) {
        std::vector<Point2> run;
        std::int64_t prev = 0;
        auto flush = [&]() {
            if (run.size() >= kGapTrialSpan) {
                const auto t = gap_scenarios(run);
                for (std::size_t g = 0; g < t.size(); ++g) {
                    all[g].insert(all[g].end(), t[g].begin(), t[g].end());
                }
                any = true;
            }
            run.clear();
        };
        for (const auto& [f, c] : frames) {
            if (!run.empty() && f != prev + 1) {
                flush();
            }
            run.push_back(c);
            prev = f;
        }
        flush();
    }
    if (!any) {
        throw DataError("gap trials: no track has " + std::to_string(kGapTrialSpan) + " consecutive live frames");
    }
    return all;
}

} // namespace rallypose

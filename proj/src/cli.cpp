#include "rallypose/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "rallypose/backbone.hpp"
#include "rallypose/classifier.hpp"
#include "rallypose/court.hpp"
#include "rallypose/error.hpp"
#include "rallypose/eval.hpp"
#include "rallypose/hash.hpp"
#include "rallypose/ingest.hpp"
#include "rallypose/nn/checkpoint.hpp"
#include "rallypose/pipeline.hpp"
#include "rallypose/pose.hpp"
#include "rallypose/sim.hpp"
#include "rallypose/textio.hpp"
#include "rallypose/tracker.hpp"

namespace rallypose {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Global {
    bool deterministic = false;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
};

// Collects what a run read and wrote for run_manifest.json.
class Run {
public:
    Run(std::string command, const Global& g, const CLI::App& sub, fs::path out)
        : command_(std::move(command)), global_(g), sub_(sub), out_(std::move(out)) {
        fs::create_directories(out_);
    }

    fs::path input(const std::string& path) {
        if (!fs::is_regular_file(path)) {
            throw InputError("input file not found: " + path);
        }
        inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}});
        return path;
    }

    void write(const std::string& name, std::string_view content) {
        write_text_file(out_ / name, content);
        outputs_.push_back(name);
    }

    fs::path output_path(const std::string& name) {
        outputs_.push_back(name);
        return out_ / name;
    }

    const fs::path& out() const { return out_; }

    void finish() {
        ojson m;
        m["command"] = command_;
        m["version"] = kVersion;
        m["seed"] = global_.seed;
        m["deterministic"] = global_.deterministic;
        ojson cfg = ojson::object();
        for (const CLI::Option* opt : sub_.get_options()) {
            const auto& names = opt->get_lnames();
            if (names.empty() || names.front() == "help") {
                continue;
            }
            if (opt->get_expected_max() == 0) {
                cfg[names.front()] = opt->count() > 0;
            } else if (opt->count() > 0) {
                std::string v;
                for (const auto& r : opt->results()) {
                    v += (v.empty() ? "" : " ") + r;
                }
                cfg[names.front()] = v;
            } else {
                cfg[names.front()] = opt->get_default_str();
            }
        }
        m["config"] = cfg;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        if (!global_.deterministic) {
            const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            char buf[32];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
            m["timestamp"] = buf;
        }
        write_text_file(out_ / "run_manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    Global global_;
    const CLI::App& sub_;
    fs::path out_;
    ojson inputs_ = ojson::array();
    std::vector<std::string> outputs_;
};

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

std::map<std::int64_t, Side> majority_sides(std::span<const TrackSnapshot> tracks) {
    std::map<std::int64_t, std::pair<int, int>> votes; // front, back
    for (const auto& t : tracks) {
        if (t.ghost) {
            continue;
        }
        auto& v = votes[t.id];
        (t.side == Side::Front ? v.first : v.second) += 1;
    }
    std::map<std::int64_t, Side> out;
    for (const auto& [id, v] : votes) {
        out[id] = v.second > v.first ? Side::Back : Side::Front;
    }
    return out;
}

std::string format_pretrain_log(std::span<const PretrainLogRow> rows, bool deterministic) {
    std::string out = "epoch,loss,best_loss,elapsed\n";
    for (const auto& r : rows) {
        out += std::to_string(r.epoch) + "," + format_number(r.loss) + "," + format_number(r.best_loss) + "," +
               format_number(deterministic ? 0.0 : r.elapsed_seconds) + "\n";
    }
    return out;
}

std::string format_train_log(std::span<const ClassifierLogRow> rows) {
    std::string out = "epoch,train_loss,test_loss,test_accuracy\n";
    for (const auto& r : rows) {
        out += std::to_string(r.epoch) + "," + format_number(r.train_loss) + "," + format_number(r.test_loss) + "," +
               format_number(r.test_accuracy) + "\n";
    }
    return out;
}

ojson metrics_json(const Confusion& c) {
    const Metrics m = metrics(c);
    return {{"tp", c.tp},           {"fp", c.fp},             {"tn", c.tn},         {"fn", c.fn},
            {"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

// ---- subcommand option sets ----

struct SimulateOpts {
    std::string out;
    std::string kind = "rally";
    std::size_t agents = 4;
    std::int64_t frames = 300;
    double noise = 0.5;
    std::size_t occlusions = 2;
    std::size_t count = 100;
    double amplitude = 1.0;
    double jitter = 0.05;
};

struct TrackOpts {
    std::string out, detections, corners;
    TrackerConfig cfg;
    bool no_reassign = false;
};

struct ExtractOpts {
    std::string out, keypoints, annotations, tracks, corners;
    bool flip = false;
};

struct PretrainOpts {
    std::string out, segments;
    BackboneConfig cfg;
};

struct TrainOpts {
    std::string out, segments, models;
    ClassifierConfig cfg;
    bool no_positional = false;
};

struct InferOpts {
    std::string out, keypoints, tracks, models, annotations;
    InferOptions cfg;
};

struct SweepOpts {
    std::string out, scores;
    bool balance = false;
};

struct GapsOpts {
    std::string out, tracks;
};

struct ScoreOpts {
    std::string out, tracks, truth, scores;
    double threshold = 0.5;
};

void run_simulate(const SimulateOpts& o, const Global& g, const CLI::App& sub) {
    Run run("simulate", g, sub, o.out);
    if (o.kind == "rally") {
        RandomRallyOptions ro;
        ro.agents = o.agents;
        ro.frames = o.frames;
        ro.noise_sigma = o.noise;
        ro.occlusions = o.occlusions;
        const auto scenario = random_rally(g.seed, ro);
        const auto result = generate_rally(scenario);
        run.write("detections.jsonl", format_detections(result.detections));
        run.write("truth.jsonl", format_truth(result.truth));
        run.write("corners.json", format_corners(result.corners));
        std::cout << "simulated " << result.detections.size() << " detections\n";
    } else if (o.kind == "pose") {
        PoseDatasetConfig pc;
        pc.count = o.count;
        pc.amplitude = o.amplitude;
        pc.jitter = o.jitter;
        pc.seed = g.seed;
        pc.jobs = g.jobs;
        const auto ds = generate_pose_dataset(pc);
        run.write("keypoints.jsonl", format_keypoints(ds.keypoints));
        run.write("annotations.csv", format_annotations(ds.annotations));
        run.write("tracks.jsonl", format_tracks(ds.tracks));
        run.write("corners.json", format_corners(ds.corners));
        run.write("labels.csv", format_labels_csv(ds.segments));
        write_segments(run.output_path("segments.bin"), ds.segments);
        std::cout << "simulated " << ds.segments.size() << " pose segments\n";
    } else {
        throw ValidationError("kind", "must be rally or pose");
    }
    run.finish();
}

void run_track(const TrackOpts& o, const Global& g, const CLI::App& sub) {
    Run run("track", g, sub, o.out);
    const auto detections = read_detections(run.input(o.detections));
    const auto corners = read_corners(run.input(o.corners));
    TrackerConfig cfg = o.cfg;
    cfg.reassign = !o.no_reassign;
    TrackerStats stats;
    const auto snapshots = track_stream(detections, build_roi(corners), cfg, &stats);
    run.write("tracks.jsonl", format_tracks(snapshots));
    run.write("track_stats.json", dump({{"minted", stats.minted},
                                        {"reassigned", stats.reassigned},
                                        {"expired", stats.expired},
                                        {"dropped", stats.dropped}}));
    std::cout << "tracked " << snapshots.size() << " snapshots, " << stats.reassigned << " reassignments\n";
    run.finish();
}

void run_extract(const ExtractOpts& o, const Global& g, const CLI::App& sub) {
    Run run("extract", g, sub, o.out);
    const auto keypoints = read_keypoints(run.input(o.keypoints));
    const auto annotations = read_annotations(run.input(o.annotations));
    const auto tracks = parse_tracks(read_text_file(run.input(o.tracks)), o.tracks);
    ExtractOptions ex;
    ex.jobs = g.jobs;
    ex.include_flipped = o.flip;
    if (o.flip) {
        if (o.corners.empty()) {
            throw ValidationError("corners", "--flip needs --corners for the frame width");
        }
        ex.frame_width = read_corners(run.input(o.corners)).width;
    }
    const auto segments = extract_segments(keypoints, annotations, majority_sides(tracks), ex);
    write_segments(run.output_path("segments.bin"), segments);
    run.write("segments.index.csv", format_segment_index(segments));
    std::cout << "extracted " << segments.size() << " segments\n";
    run.finish();
}

void run_pretrain(const PretrainOpts& o, const Global& g, const CLI::App& sub) {
    Run run("pretrain", g, sub, o.out);
    const auto segments = read_segments(run.input(o.segments));
    BackboneConfig cfg = o.cfg;
    cfg.seed = g.seed;
    cfg.jobs = g.jobs;
    const auto result = pretrain_by_side(segments, cfg);
    for (const auto& [name, r] : {std::pair<std::string, const PretrainResult*>{"front", &result.front},
                                  std::pair<std::string, const PretrainResult*>{"back", &result.back}}) {
        auto training = r->model.config().to_json();
        training["best_epoch"] = r->best_epoch;
        nn::save_checkpoint(run.output_path("backbone_" + name + ".ckpt"), r->model.parameters(),
                            r->model.config().architecture_json(), training);
        run.output_path("backbone_" + name + ".ckpt.json");
        run.write("pretrain_" + name + ".csv", format_pretrain_log(r->log, g.deterministic));
        std::cout << name << ": best epoch " << r->best_epoch << " of " << r->epochs_run << "\n";
    }
    run.finish();
}

void run_train(const TrainOpts& o, const Global& g, const CLI::App& sub) {
    Run run("train", g, sub, o.out);
    const auto segments = read_segments(run.input(o.segments));
    const fs::path models = o.models.empty() ? fs::path(o.out) : fs::path(o.models);
    const Backbone front = backbone_from_checkpoint(run.input((models / "backbone_front.ckpt").string()));
    const Backbone back = backbone_from_checkpoint(run.input((models / "backbone_back.ckpt").string()));
    ClassifierConfig cfg = o.cfg;
    cfg.seed = g.seed;
    cfg.jobs = g.jobs;
    cfg.positional = !o.no_positional;
    const auto result = train_by_side(segments, front, back, cfg);
    ojson report = ojson::object();
    for (const auto& [name, r] : {std::pair<std::string, const TrainResult*>{"front", &result.front},
                                  std::pair<std::string, const TrainResult*>{"back", &result.back}}) {
        auto training = r->fit.model.config().to_json();
        training["best_epoch"] = r->fit.best_epoch;
        nn::save_checkpoint(run.output_path("classifier_" + name + ".ckpt"), r->fit.model.parameters(),
                            r->fit.model.config().architecture_json(), training);
        run.output_path("classifier_" + name + ".ckpt.json");
        run.write("train_" + name + ".csv", format_train_log(r->fit.log));
        report[name] = {{"train_segments", r->split.train.size()},
                        {"test_segments", r->split.test.size()},
                        {"best_epoch", r->fit.best_epoch},
                        {"epochs_run", r->fit.epochs_run},
                        {"test", metrics_json(r->test_confusion)}};
        std::cout << name << ": test accuracy " << format_number(r->test_metrics.accuracy) << "\n";
    }
    run.write("train_report.json", dump(report));
    run.finish();
}

void run_infer(const InferOpts& o, const Global& g, const CLI::App& sub) {
    Run run("infer", g, sub, o.out);
    const auto keypoints = read_keypoints(run.input(o.keypoints));
    const auto tracks = parse_tracks(read_text_file(run.input(o.tracks)), o.tracks);
    std::vector<ShotAnnotation> annotations;
    if (!o.annotations.empty()) {
        annotations = read_annotations(run.input(o.annotations));
    }
    for (const char* name : {"backbone_front.ckpt", "backbone_back.ckpt", "classifier_front.ckpt",
                             "classifier_back.ckpt"}) {
        if (fs::exists(fs::path(o.models) / name)) {
            run.input((fs::path(o.models) / name).string());
        }
    }
    const ModelBundle models = load_models(o.models);
    InferOptions cfg = o.cfg;
    cfg.jobs = g.jobs;
    const auto result = infer_stream(tracks, keypoints, models, cfg, annotations);
    run.write("events.jsonl", format_events(result.events));
    run.write("scores.jsonl", format_scores(result.scores));
    std::cout << result.events.size() << " events over " << result.scores.size() << " scored frames\n";
    run.finish();
}

void run_sweep(const SweepOpts& o, const Global& g, const CLI::App& sub) {
    Run run("sweep", g, sub, o.out);
    auto scores = parse_scores(read_text_file(run.input(o.scores)), o.scores);
    if (o.balance) {
        scores = balance_scores(scores, g.seed);
    }
    const auto report = sweep_threshold(scores);
    run.write("sweep.csv", format_sweep_csv(report));
    const auto& best = report.rows[report.optimal];
    char theta[16];
    std::snprintf(theta, sizeof theta, "%.2f", best.threshold);
    ojson summary = {{"optimal_threshold", theta}, {"scores", scores.size()}};
    summary["metrics"] = metrics_json(best.confusion);
    run.write("sweep.json", dump(summary));
    std::cout << "optimal threshold " << theta << " accuracy " << format_number(best.metrics.accuracy) << "\n";
    run.finish();
}

void run_gaps(const GapsOpts& o, const Global& g, const CLI::App& sub) {
    Run run("gaps", g, sub, o.out);
    const auto tracks = parse_tracks(read_text_file(run.input(o.tracks)), o.tracks);
    const auto report = gap_report(gap_trials_from_tracks(tracks));
    run.write("gap_summary.csv", format_gap_summary_csv(report));
    run.write("gap_histogram.csv", format_gap_histogram_csv(report));
    std::cout << "gap 14 p90 " << format_number(report.rows.back().p90) << " px\n";
    run.finish();
}

void run_score(const ScoreOpts& o, const Global& g, const CLI::App& sub) {
    if (o.truth.empty() != o.tracks.empty()) {
        throw ValidationError("truth", "--tracks and --truth must be given together");
    }
    if (o.truth.empty() && o.scores.empty()) {
        throw ValidationError("score", "nothing to score: give --tracks with --truth, or --scores");
    }
    Run run("score", g, sub, o.out);
    if (!o.truth.empty()) {
        const auto tracks = parse_tracks(read_text_file(run.input(o.tracks)), o.tracks);
        const auto truth = parse_truth(read_text_file(run.input(o.truth)), o.truth);
        const auto report = id_switches(tracks, truth);
        run.write("id_switches.json", format_id_switch_report(report));
        std::cout << report.switches << " id switches, " << report.misses << " misses\n";
    }
    if (!o.scores.empty()) {
        if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
            throw ValidationError("threshold", "must lie in (0, 1)");
        }
        const auto scores = parse_scores(read_text_file(run.input(o.scores)), o.scores);
        const auto c = confusion_at(scores, o.threshold);
        if (c.total() == 0) {
            throw DataError("score: no scores carry a truth label");
        }
        run.write("metrics.json", dump(metrics_json(c)));
        std::cout << "accuracy " << format_number(metrics(c).accuracy) << "\n";
    }
    run.finish();
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Skeleton-based badminton shot detection toolkit", "rallypose"};
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Global g;
    std::string default_config;
    if (const char* env = std::getenv(kConfigEnv)) {
        default_config = env;
    }
    app.set_config("--config", default_config,
                   "Key-value (INI/TOML) config file; command-line flags take precedence. Default from $" +
                       std::string(kConfigEnv));
    app.add_flag("--deterministic", g.deterministic, "Omit timestamps and wall-clock columns from outputs");
    app.add_option("--jobs", g.jobs, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Random seed");

    SimulateOpts sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate synthetic rally detections or pose datasets");
    s_sim->add_option("--out", sim.out, "Output directory")->required();
    s_sim->add_option("--kind", sim.kind, "rally | pose")->check(CLI::IsMember({"rally", "pose"}));
    s_sim->add_option("--agents", sim.agents, "Players on court (2 or 4), rally only");
    s_sim->add_option("--frames", sim.frames, "Frame count, rally only");
    s_sim->add_option("--noise", sim.noise, "Detection center noise sigma in px, rally only");
    s_sim->add_option("--occlusions", sim.occlusions, "Random occlusions, rally only");
    s_sim->add_option("--count", sim.count, "Annotated swings, pose only");
    s_sim->add_option("--amplitude", sim.amplitude, "Swing amplitude in normalized units, pose only");
    s_sim->add_option("--jitter", sim.jitter, "Idle joint jitter in normalized units, pose only");

    TrackOpts trk;
    auto* s_trk = app.add_subcommand("track", "Track players across frames with ghost-based re-identification");
    s_trk->add_option("--out", trk.out, "Output directory")->required();
    s_trk->add_option("--detections", trk.detections, "detections.jsonl")->required();
    s_trk->add_option("--corners", trk.corners, "Court corner boxes JSON")->required();
    s_trk->add_option("--roster", trk.cfg.roster_size, "Players per match (2 or 4)");
    s_trk->add_option("--reassign-radius", trk.cfg.reassign_radius, "Ghost reassignment radius in px");
    s_trk->add_option("--max-missing", trk.cfg.max_missing, "Frames a ghost survives");
    s_trk->add_option("--gate", trk.cfg.assoc_gate, "Frame-to-frame association gate in px");
    s_trk->add_flag("--no-reassign", trk.no_reassign, "Disable ghost reassignment (diagnostic)");

    ExtractOpts ext;
    auto* s_ext = app.add_subcommand("extract", "Cut labelled 15-frame pose segments around annotated shots");
    s_ext->add_option("--out", ext.out, "Output directory")->required();
    s_ext->add_option("--keypoints", ext.keypoints, "keypoints.jsonl")->required();
    s_ext->add_option("--annotations", ext.annotations, "Shot annotations CSV")->required();
    s_ext->add_option("--tracks", ext.tracks, "tracks.jsonl supplying each player's court side")->required();
    s_ext->add_option("--corners", ext.corners, "Corner boxes JSON (frame width for --flip)");
    s_ext->add_flag("--flip", ext.flip, "Add horizontally mirrored segments");

    PretrainOpts pre;
    auto* s_pre = app.add_subcommand("pretrain", "Contrastive pretraining of one pose encoder per court side");
    s_pre->add_option("--out", pre.out, "Output directory")->required();
    s_pre->add_option("--segments", pre.segments, "segments.bin")->required();
    s_pre->add_option("--epochs", pre.cfg.max_epochs, "Maximum epochs");
    s_pre->add_option("--patience", pre.cfg.patience, "Early-stopping patience in epochs");
    s_pre->add_option("--batch", pre.cfg.batch_size, "Positive pairs per batch");
    s_pre->add_option("--lr", pre.cfg.learning_rate, "Adam learning rate");
    s_pre->add_option("--temperature", pre.cfg.temperature, "Contrastive temperature");
    s_pre->add_option("--aug-noise", pre.cfg.noise_sigma, "Augmentation noise sigma");
    s_pre->add_option("--aug-jitter", pre.cfg.max_jitter, "Augmentation window shift bound in frames");

    TrainOpts trn;
    auto* s_trn = app.add_subcommand("train", "Train one shot classifier per court side on frozen encoders");
    s_trn->add_option("--out", trn.out, "Output directory")->required();
    s_trn->add_option("--segments", trn.segments, "segments.bin")->required();
    s_trn->add_option("--models", trn.models, "Directory holding backbone_{front,back}.ckpt (default: --out)");
    s_trn->add_option("--epochs", trn.cfg.max_epochs, "Maximum epochs");
    s_trn->add_option("--patience", trn.cfg.patience, "Early-stopping patience in epochs");
    s_trn->add_option("--batch", trn.cfg.batch_size, "Samples per batch (0 = full batch)");
    s_trn->add_option("--lr", trn.cfg.learning_rate, "Adam learning rate");
    s_trn->add_option("--heads", trn.cfg.heads, "Attention heads");
    s_trn->add_option("--ff", trn.cfg.ff_dim, "Feed-forward width");
    s_trn->add_option("--train-fraction", trn.cfg.train_fraction, "Share of segments used for training");
    s_trn->add_flag("--no-positional", trn.no_positional, "Disable positional encodings (diagnostic)");

    InferOpts inf;
    auto* s_inf = app.add_subcommand("infer", "Detect shot events over tracked keypoint streams");
    s_inf->add_option("--out", inf.out, "Output directory")->required();
    s_inf->add_option("--keypoints", inf.keypoints, "keypoints.jsonl")->required();
    s_inf->add_option("--tracks", inf.tracks, "tracks.jsonl")->required();
    s_inf->add_option("--models", inf.models, "Checkpoint directory")->required();
    s_inf->add_option("--annotations", inf.annotations, "Optional annotations CSV for score truth labels");
    s_inf->add_option("--threshold", inf.cfg.threshold, "Confidence threshold in (0, 1)");
    s_inf->add_option("--stride", inf.cfg.stride, "Frames between window centers");
    s_inf->add_flag("--suppress", inf.cfg.suppress, "Drop events beaten by a stronger one within 5 frames");

    SweepOpts swp;
    auto* s_swp = app.add_subcommand("sweep", "Sweep the confidence threshold over scored frames");
    s_swp->add_option("--out", swp.out, "Output directory")->required();
    s_swp->add_option("--scores", swp.scores, "scores.jsonl")->required();
    s_swp->add_flag("--balance", swp.balance, "Sample the majority class down to the minority size");

    GapsOpts gap;
    auto* s_gap = app.add_subcommand("gaps", "Constant-velocity prediction error over simulated gaps");
    s_gap->add_option("--out", gap.out, "Output directory")->required();
    s_gap->add_option("--tracks", gap.tracks, "tracks.jsonl")->required();

    ScoreOpts sco;
    auto* s_sco = app.add_subcommand("score", "Score tracks against truth and/or scores at a threshold");
    s_sco->add_option("--out", sco.out, "Output directory")->required();
    s_sco->add_option("--tracks", sco.tracks, "tracks.jsonl");
    s_sco->add_option("--truth", sco.truth, "truth.jsonl");
    s_sco->add_option("--scores", sco.scores, "scores.jsonl");
    s_sco->add_option("--threshold", sco.threshold, "Threshold for --scores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::vector<std::pair<CLI::App*, std::function<void()>>> commands{
        {s_sim, [&] { run_simulate(sim, g, *s_sim); }}, {s_trk, [&] { run_track(trk, g, *s_trk); }},
        {s_ext, [&] { run_extract(ext, g, *s_ext); }},  {s_pre, [&] { run_pretrain(pre, g, *s_pre); }},
        {s_trn, [&] { run_train(trn, g, *s_trn); }},    {s_inf, [&] { run_infer(inf, g, *s_inf); }},
        {s_swp, [&] { run_sweep(swp, g, *s_swp); }},    {s_gap, [&] { run_gaps(gap, g, *s_gap); }},
        {s_sco, [&] { run_score(sco, g, *s_sco); }},
    };
    try {
        for (const auto& [sub, fn] : commands) {
            if (sub->parsed()) {
                fn();
            }
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"rallypose"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace rallypose

#include "rallypose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include <json.hpp>

#include "rallypose/error.hpp"
#include "rallypose/textio.hpp"

namespace rallypose {

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Metrics metrics(const Confusion& c) {
    if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) {
        throw ValidationError("confusion", "counts must be non-negative");
    }
    Metrics m;
    const auto total = c.total();
    if (total > 0) {
        m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    }
    if (c.tp + c.fp > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    }
    if (c.tp + c.fn > 0) {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    }
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

std::string format_truth(std::span<const TruthRecord> records) {
    std::string out;
    for (const auto& r : records) {
        const std::array<double, 2> c{r.center.x, r.center.y};
        out += "{\"frame\":" + format_number(r.frame) + ",\"true_id\":" + format_number(r.true_id) +
               ",\"center\":" + format_array(c) + "}\n";
    }
    return out;
}

std::vector<TruthRecord> parse_truth(std::string_view text, const std::string& source) {
    using nlohmann::json;
    std::vector<TruthRecord> out;
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        try {
            json j = json::parse(lines[i]);
            TruthRecord r;
            r.frame = j.at("frame").get<std::int64_t>();
            r.true_id = j.at("true_id").get<std::int64_t>();
            const auto& c = j.at("center");
            if (c.size() != 2) {
                throw ParseError(source, i + 1, "center needs 2 values");
            }
            r.center = {c[0].get<double>(), c[1].get<double>()};
            out.push_back(r);
        } catch (const json::exception& e) {
            throw ParseError(source, i + 1, e.what());
        }
    }
    return out;
}

IdSwitchReport id_switches(std::span<const TrackSnapshot> predicted, std::span<const TruthRecord> truth,
                           double radius) {
    std::map<std::int64_t, std::vector<const TrackSnapshot*>> pred_by_frame;
    for (const auto& p : predicted) {
        if (!p.ghost) {
            pred_by_frame[p.frame].push_back(&p);
        }
    }
    std::map<std::int64_t, std::vector<const TruthRecord*>> truth_by_frame;
    for (const auto& t : truth) {
        truth_by_frame[t.frame].push_back(&t);
    }

    std::map<std::int64_t, IdentityReport> per_id;
    std::map<std::int64_t, std::int64_t> last_pred;
    for (const auto& [frame, truths] : truth_by_frame) {
        static const std::vector<const TrackSnapshot*> kNone;
        auto it = pred_by_frame.find(frame);
        const auto& preds = it == pred_by_frame.end() ? kNone : it->second;

        struct Candidate {
            double dist;
            std::int64_t true_id;
            std::int64_t pred_id;
            std::size_t t;
            std::size_t p;
        };
        std::vector<Candidate> cands;
        for (std::size_t t = 0; t < truths.size(); ++t) {
            for (std::size_t p = 0; p < preds.size(); ++p) {
                const double d = distance(truths[t]->center, preds[p]->center);
                if (d <= radius) {
                    cands.push_back({d, truths[t]->true_id, preds[p]->id, t, p});
                }
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            return std::tie(a.dist, a.true_id, a.pred_id) < std::tie(b.dist, b.true_id, b.pred_id);
        });
        std::vector<std::optional<std::int64_t>> match(truths.size());
        std::vector<bool> used(preds.size(), false);
        for (const auto& c : cands) {
            if (match[c.t] || used[c.p]) {
                continue;
            }
            match[c.t] = c.pred_id;
            used[c.p] = true;
        }
        for (std::size_t t = 0; t < truths.size(); ++t) {
            auto& rep = per_id[truths[t]->true_id];
            rep.true_id = truths[t]->true_id;
            ++rep.appearances;
            if (!match[t]) {
                ++rep.misses;
                continue;
            }
            const std::int64_t pid = *match[t];
            auto lp = last_pred.find(rep.true_id);
            if (lp != last_pred.end() && lp->second != pid) {
                ++rep.switches;
            }
            last_pred[rep.true_id] = pid;
            if (std::find(rep.predicted_ids.begin(), rep.predicted_ids.end(), pid) == rep.predicted_ids.end()) {
                rep.predicted_ids.push_back(pid);
            }
        }
    }

    IdSwitchReport report;
    for (auto& [id, rep] : per_id) {
        report.switches += rep.switches;
        report.misses += rep.misses;
        report.identities.push_back(std::move(rep));
    }
    return report;
}

std::string format_id_switch_report(const IdSwitchReport& report) {
    nlohmann::ordered_json j;
    j["switches"] = report.switches;
    j["misses"] = report.misses;
    j["identities"] = nlohmann::ordered_json::array();
    for (const auto& r : report.identities) {
        j["identities"].push_back({{"true_id", r.true_id},
                                   {"appearances", r.appearances},
                                   {"misses", r.misses},
                                   {"switches", r.switches},
                                   {"predicted_ids", r.predicted_ids}});
    }
    return j.dump(2) + "\n";
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw DataError("median of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw DataError("percentile of an empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw ValidationError("q", "percentile must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

GapReport gap_report(const GapTrials& trials) {
    GapReport report;
    for (int g = 1; g <= kMaxGap; ++g) {
        const auto& d = trials[static_cast<std::size_t>(g - 1)];
        if (d.empty()) {
            throw DataError("gap report: no samples for gap length " + std::to_string(g));
        }
        GapSummary& row = report.rows[static_cast<std::size_t>(g - 1)];
        row.gap = g;
        row.count = d.size();
        row.median = median(d);
        row.p90 = percentile(d, 0.9);
        row.max = *std::max_element(d.begin(), d.end());
        for (double v : d) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ValidationError("distance", "prediction errors must be finite and non-negative");
            }
            const auto bin = static_cast<std::size_t>(std::floor(v / kHistogramBin));
            if (bin < kHistogramBins) {
                ++report.histogram[bin];
            } else {
                ++report.overflow;
            }
        }
    }
    return report;
}

std::string format_gap_summary_csv(const GapReport& report) {
    std::string out = "gap,count,median,p90,max\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.gap) + "," + std::to_string(r.count) + "," + format_number(r.median) + "," +
               format_number(r.p90) + "," + format_number(r.max) + "\n";
    }
    return out;
}

std::string format_gap_histogram_csv(const GapReport& report) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
        out += format_number(static_cast<double>(b) * kHistogramBin) + "," +
               format_number(static_cast<double>(b + 1) * kHistogramBin) + "," + std::to_string(report.histogram[b]) +
               "\n";
    }
    out += format_number(static_cast<double>(kHistogramBins) * kHistogramBin) + ",inf," +
           std::to_string(report.overflow) + "\n";
    return out;
}

} // namespace rallypose

#pragma once

// Confusion-matrix metrics, identity-switch counting against ground truth and
// the missing-frame prediction-error report.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rallypose/geometry.hpp"
#include "rallypose/tracker.hpp"

namespace rallypose {

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Zero denominators yield 0 for the affected metric.
Metrics metrics(const Confusion& c);
double f1_score(double precision, double recall);

// Ground-truth position of one agent at one frame.
struct TruthRecord {
    std::int64_t frame = 0;
    std::int64_t true_id = 0;
    Point2 center;
    friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

std::string format_truth(std::span<const TruthRecord> records);
std::vector<TruthRecord> parse_truth(std::string_view text, const std::string& source = "<truth>");

inline constexpr double kTruthMatchRadius = 50.0;

struct IdentityReport {
    std::int64_t true_id = 0;
    std::int64_t appearances = 0;
    std::int64_t misses = 0;
    std::int64_t switches = 0;
    std::vector<std::int64_t> predicted_ids; // in order of first use
};

struct IdSwitchReport {
    std::int64_t switches = 0;
    std::int64_t misses = 0;
    std::vector<IdentityReport> identities; // sorted by true_id
};

// Matches each truth record to the nearest live (non-ghost) prediction of the
// same frame within `radius`, one-to-one, greedily by distance. A true
// identity switches whenever its matched predicted id differs from the one of
// its previous matched appearance.
IdSwitchReport id_switches(std::span<const TrackSnapshot> predicted, std::span<const TruthRecord> truth,
                           double radius = kTruthMatchRadius);

std::string format_id_switch_report(const IdSwitchReport& report);

inline constexpr int kMaxGap = 14;
inline constexpr double kHistogramBin = 10.0;
inline constexpr std::size_t kHistogramBins = 40; // [0, 400)

// distances[g - 1] holds the prediction errors recorded for gap length g.
using GapTrials = std::array<std::vector<double>, kMaxGap>;

struct GapSummary {
    int gap = 0;
    std::size_t count = 0;
    double median = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

struct GapReport {
    std::array<GapSummary, kMaxGap> rows;
    std::array<std::size_t, kHistogramBins> histogram{};
    std::size_t overflow = 0; // distances >= 400
};

// Median of a sample; even counts average the middle pair.
double median(std::vector<double> values);
// Linear interpolation between order statistics at q * (n - 1).
double percentile(std::vector<double> values, double q);

// Throws DataError when any gap has no samples.
GapReport gap_report(const GapTrials& trials);

std::string format_gap_summary_csv(const GapReport& report);
std::string format_gap_histogram_csv(const GapReport& report);

} // namespace rallypose

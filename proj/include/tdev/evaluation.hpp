#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdev/alerting.hpp"
#include "tdev/deviation.hpp"
#include "tdev/frame.hpp"

namespace tdev {

struct EvalCounts {
    std::size_t events_total = 0;
    std::size_t events_recalled = 0;
    std::size_t alerts_total = 0;
    std::size_t alerts_true = 0;
    std::size_t alerts_false = 0;
};

struct EvalReport {
    // Empty denominators report not-applicable, never 0/0.
    std::optional<double> event_recall;
    std::optional<double> alert_tpr;
    std::optional<double> alert_fpr;
    EvalCounts counts;
};

// An event is recalled iff some alert overlaps [event.start - lead, event.end];
// an alert is true iff it overlaps some lead-extended event. Rates are
// alert-count based. An alert may recall several events; each event counts
// once.
EvalReport evaluate(const std::vector<Alert>& alerts, const std::vector<EventInterval>& events,
                    Duration lead);

struct SweepPoint {
    double threshold = 0.0;
    EvalReport report;
};

// extract_alerts + evaluate at each threshold; thresholds must be sorted
// ascending and nonempty.
std::vector<SweepPoint> threshold_sweep(const DeviationSeries& scores,
                                        const std::vector<EventInterval>& events,
                                        const std::vector<double>& thresholds, Duration merge_gap,
                                        Duration lead);

struct ScorePoint {
    TimePoint timestamp = 0;
    double value = 0.0;
};

std::vector<ScorePoint> to_score_points(const DeviationSeries& series);
std::vector<ScorePoint> read_score_points_csv(const std::string& path);

struct ScatterRecord {
    TimePoint timestamp = 0;
    double score_a = 0.0;
    double score_b = 0.0;
    bool in_event = false;
};

struct RiskScatter {
    std::vector<ScatterRecord> records;
    // Percentile of each in-event point within the full score distribution,
    // in record order (one entry per in-event record).
    std::vector<double> in_event_percentile_a;
    std::vector<double> in_event_percentile_b;
    // Share of in-event points in the upper half of each distribution.
    std::optional<double> upper_half_fraction_a;
    std::optional<double> upper_half_fraction_b;
};

// Step-aligns the two score sequences onto the union of timestamps inside
// their common span and flags records that fall inside an event.
RiskScatter risk_scatter(const std::vector<ScorePoint>& series_a,
                         const std::vector<ScorePoint>& series_b,
                         const std::vector<EventInterval>& events);

void write_report_json(const std::string& path, const EvalReport& all_alerts,
                       const std::optional<EvalReport>& filtered);
void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& sweep);
void write_scatter_csv(const std::string& path, const RiskScatter& scatter);

}  // namespace tdev

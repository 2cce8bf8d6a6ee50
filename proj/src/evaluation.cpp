#include "tdev/evaluation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tdev/csv.hpp"

namespace tdev {

using nlohmann::json;

EvalReport evaluate(const std::vector<Alert>& alerts, const std::vector<EventInterval>& events,
                    Duration lead) {
    EvalReport report;
    report.counts.events_total = events.size();
    report.counts.alerts_total = alerts.size();

    for (const EventInterval& event : events) {
        const TimePoint from = event.start - lead;
        for (const Alert& alert : alerts) {
            if (intervals_overlap(alert.start, alert.end, from, event.end)) {
                ++report.counts.events_recalled;
                break;
            }
        }
    }
    for (const Alert& alert : alerts) {
        bool is_true = false;
        for (const EventInterval& event : events) {
            if (intervals_overlap(alert.start, alert.end, event.start - lead, event.end)) {
                is_true = true;
                break;
            }
        }
        if (is_true) {
            ++report.counts.alerts_true;
        } else {
            ++report.counts.alerts_false;
        }
    }

    if (!events.empty()) {
        report.event_recall = static_cast<double>(report.counts.events_recalled) /
                              static_cast<double>(report.counts.events_total);
    }
    if (!alerts.empty()) {
        report.alert_tpr = static_cast<double>(report.counts.alerts_true) /
                           static_cast<double>(report.counts.alerts_total);
        report.alert_fpr = static_cast<double>(report.counts.alerts_false) /
                           static_cast<double>(report.counts.alerts_total);
    }
    return report;
}

std::vector<SweepPoint> threshold_sweep(const DeviationSeries& scores,
                                        const std::vector<EventInterval>& events,
                                        const std::vector<double>& thresholds, Duration merge_gap,
                                        Duration lead) {
    if (thresholds.empty()) throw std::invalid_argument("threshold list must be nonempty");
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        throw std::invalid_argument("thresholds must be sorted ascending");
    }
    std::vector<SweepPoint> sweep;
    sweep.reserve(thresholds.size());
    for (double t : thresholds) {
        SweepPoint point;
        point.threshold = t;
        point.report = evaluate(extract_alerts(scores, t, merge_gap), events, lead);
        sweep.push_back(point);
    }
    return sweep;
}

std::vector<ScorePoint> to_score_points(const DeviationSeries& series) {
    std::vector<ScorePoint> points;
    points.reserve(series.entries.size());
    for (const auto& e : series.entries) points.push_back({e.timestamp, e.score});
    return points;
}

std::vector<ScorePoint> read_score_points_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const std::size_t ts = table.column("timestamp");
    const std::size_t sc = table.column("score");
    std::vector<ScorePoint> points;
    for (const auto& row : table.rows) {
        points.push_back({parse_timestamp(row[ts]), std::strtod(row[sc].c_str(), nullptr)});
    }
    std::sort(points.begin(), points.end(),
              [](const ScorePoint& a, const ScorePoint& b) { return a.timestamp < b.timestamp; });
    return points;
}

namespace {

// Percentile of v in values: share of values <= v, in percent.
double percentile_of(double v, const std::vector<double>& sorted) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), v);
    return 100.0 * static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

// Step interpolation: the score in force at t is the last one at or before t.
double step_value_at(const std::vector<ScorePoint>& series, TimePoint t, std::size_t& cursor) {
    while (cursor + 1 < series.size() && series[cursor + 1].timestamp <= t) ++cursor;
    return series[cursor].value;
}

bool in_any_event(TimePoint t, const std::vector<EventInterval>& events) {
    for (const auto& e : events) {
        if (e.start <= t && t <= e.end) return true;
    }
    return false;
}

}  // namespace

RiskScatter risk_scatter(const std::vector<ScorePoint>& series_a,
                         const std::vector<ScorePoint>& series_b,
                         const std::vector<EventInterval>& events) {
    if (series_a.empty() || series_b.empty()) {
        throw std::invalid_argument("risk_scatter needs two nonempty score sequences");
    }
    const TimePoint span_start = std::max(series_a.front().timestamp, series_b.front().timestamp);
    const TimePoint span_end = std::min(series_a.back().timestamp, series_b.back().timestamp);
    if (span_start > span_end) {
        throw std::invalid_argument("score sequences cover disjoint time spans");
    }

    std::vector<TimePoint> grid;
    for (const auto& p : series_a) {
        if (p.timestamp >= span_start && p.timestamp <= span_end) grid.push_back(p.timestamp);
    }
    for (const auto& p : series_b) {
        if (p.timestamp >= span_start && p.timestamp <= span_end) grid.push_back(p.timestamp);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    RiskScatter scatter;
    std::size_t ca = 0, cb = 0;
    for (TimePoint t : grid) {
        ScatterRecord rec;
        rec.timestamp = t;
        rec.score_a = step_value_at(series_a, t, ca);
        rec.score_b = step_value_at(series_b, t, cb);
        rec.in_event = in_any_event(t, events);
        scatter.records.push_back(rec);
    }

    std::vector<double> sorted_a, sorted_b;
    sorted_a.reserve(scatter.records.size());
    sorted_b.reserve(scatter.records.size());
    for (const auto& r : scatter.records) {
        sorted_a.push_back(r.score_a);
        sorted_b.push_back(r.score_b);
    }
    std::sort(sorted_a.begin(), sorted_a.end());
    std::sort(sorted_b.begin(), sorted_b.end());

    std::size_t upper_a = 0, upper_b = 0, in_event = 0;
    for (const auto& r : scatter.records) {
        if (!r.in_event) continue;
        ++in_event;
        const double pa = percentile_of(r.score_a, sorted_a);
        const double pb = percentile_of(r.score_b, sorted_b);
        scatter.in_event_percentile_a.push_back(pa);
        scatter.in_event_percentile_b.push_back(pb);
        if (pa >= 50.0) ++upper_a;
        if (pb >= 50.0) ++upper_b;
    }
    if (in_event > 0) {
        scatter.upper_half_fraction_a = static_cast<double>(upper_a) / static_cast<double>(in_event);
        scatter.upper_half_fraction_b = static_cast<double>(upper_b) / static_cast<double>(in_event);
    }
    return scatter;
}

namespace {

json report_to_json(const EvalReport& report) {
    json j;
    j["event_recall"] = report.event_recall ? json(*report.event_recall) : json(nullptr);
    j["alert_tpr"] = report.alert_tpr ? json(*report.alert_tpr) : json(nullptr);
    j["alert_fpr"] = report.alert_fpr ? json(*report.alert_fpr) : json(nullptr);
    j["counts"] = {{"events_total", report.counts.events_total},
                   {"events_recalled", report.counts.events_recalled},
                   {"alerts_total", report.counts.alerts_total},
                   {"alerts_true", report.counts.alerts_true},
                   {"alerts_false", report.counts.alerts_false}};
    return j;
}

}  // namespace

void write_report_json(const std::string& path, const EvalReport& all_alerts,
                       const std::optional<EvalReport>& filtered) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    json j;
    j["all_alerts"] = report_to_json(all_alerts);
    if (filtered) j["filtered"] = report_to_json(*filtered);
    out << j.dump(2) << '\n';
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& sweep) {
    CsvWriter out(path);
    out.write_row({"threshold", "event_recall", "alert_tpr", "alert_fpr", "events_recalled",
                   "alerts_total", "alerts_true", "alerts_false"});
    for (const auto& p : sweep) {
        const auto& r = p.report;
        out.write_row({format_double(p.threshold),
                       r.event_recall ? format_double(*r.event_recall) : "na",
                       r.alert_tpr ? format_double(*r.alert_tpr) : "na",
                       r.alert_fpr ? format_double(*r.alert_fpr) : "na",
                       std::to_string(r.counts.events_recalled),
                       std::to_string(r.counts.alerts_total),
                       std::to_string(r.counts.alerts_true),
                       std::to_string(r.counts.alerts_false)});
    }
}

void write_scatter_csv(const std::string& path, const RiskScatter& scatter) {
    CsvWriter out(path);
    out.write_row({"timestamp", "score_a", "score_b", "in_event", "percentile_a",
                   "percentile_b"});
    std::size_t in_event_idx = 0;
    for (const auto& r : scatter.records) {
        std::string pct_a, pct_b;
        if (r.in_event) {
            pct_a = format_double(scatter.in_event_percentile_a[in_event_idx]);
            pct_b = format_double(scatter.in_event_percentile_b[in_event_idx]);
            ++in_event_idx;
        }
        out.write_row({format_timestamp(r.timestamp), format_double(r.score_a),
                       format_double(r.score_b), r.in_event ? "1" : "0", pct_a, pct_b});
    }
}

}  // namespace tdev

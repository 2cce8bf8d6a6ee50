#include "tdev/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

#include "tdev/csv.hpp"

namespace tdev {

namespace {

bool parse_numeric(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + cell.size();
}

double lerp_at(TimePoint t, TimePoint t0, TimePoint t1, double v0, double v1) {
    if (t0 == t1) return v0;
    double w = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
    return v0 + w * (v1 - v0);
}

}  // namespace

TimeSeriesFrame load_csv(const std::string& path, const IngestConfig& config) {
    CsvTable table = read_csv(path);
    const std::size_t ts_col = table.column(config.timestamp_column);

    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    if (config.feature_columns) {
        for (const auto& name : *config.feature_columns) {
            cols.push_back(table.column(name));
            names.push_back(name);
        }
    } else {
        for (std::size_t i = 0; i < table.header.size(); ++i) {
            if (i == ts_col) continue;
            cols.push_back(i);
            names.push_back(table.header[i]);
        }
    }
    if (names.empty()) throw std::invalid_argument("'" + path + "' has no feature columns");

    struct RawRow {
        TimePoint t;
        std::vector<double> cells;
        std::vector<bool> missing;
        bool any_missing = false;
    };
    std::vector<RawRow> raw;
    raw.reserve(table.rows.size());

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t data_row = r + 2;  // 1-based, after the header
        if (row.size() != table.header.size()) {
            throw std::invalid_argument("row " + std::to_string(data_row) + " of '" + path +
                                        "' has " + std::to_string(row.size()) +
                                        " cells, expected " + std::to_string(table.header.size()));
        }
        RawRow out;
        try {
            out.t = parse_timestamp(row[ts_col]);
        } catch (const std::exception&) {
            throw std::invalid_argument("row " + std::to_string(data_row) + " of '" + path +
                                        "': unparseable timestamp '" + row[ts_col] + "'");
        }
        out.cells.resize(cols.size());
        out.missing.resize(cols.size(), false);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::string& cell = row[cols[c]];
            if (cell.empty()) {
                if (config.missing == MissingPolicy::error) {
                    throw std::invalid_argument("row " + std::to_string(data_row) + ", column '" +
                                                names[c] + "' of '" + path + "' is missing");
                }
                out.missing[c] = true;
                out.any_missing = true;
                continue;
            }
            if (!parse_numeric(cell, out.cells[c])) {
                throw std::invalid_argument("row " + std::to_string(data_row) + ", column '" +
                                            names[c] + "' of '" + path + "': non-numeric cell '" +
                                            cell + "'");
            }
        }
        raw.push_back(std::move(out));
    }

    if (config.missing == MissingPolicy::drop_row) {
        std::erase_if(raw, [](const RawRow& r) { return r.any_missing; });
    }

    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < raw.size(); ++i) {
        if (raw[i].t == raw[i - 1].t) {
            throw std::invalid_argument("duplicate timestamp " + format_timestamp(raw[i].t) +
                                        " in '" + path + "'");
        }
    }

    if (config.missing == MissingPolicy::interpolate) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::size_t prev = raw.size();
            for (std::size_t i = 0; i < raw.size(); ++i) {
                if (!raw[i].missing[c]) {
                    prev = i;
                    continue;
                }
                std::size_t next = i + 1;
                while (next < raw.size() && raw[next].missing[c]) ++next;
                if (prev == raw.size() || next == raw.size()) {
                    throw std::invalid_argument(
                        "column '" + names[c] + "' of '" + path +
                        "' has a missing value with no neighbor to interpolate from at " +
                        format_timestamp(raw[i].t));
                }
                raw[i].cells[c] = lerp_at(raw[i].t, raw[prev].t, raw[next].t,
                                          raw[prev].cells[c], raw[next].cells[c]);
                raw[i].missing[c] = false;
            }
        }
    }

    TimeSeriesFrame frame;
    frame.feature_names = std::move(names);
    frame.timestamps.reserve(raw.size());
    frame.values.reserve(raw.size() * cols.size());
    for (const auto& row : raw) {
        frame.timestamps.push_back(row.t);
        frame.values.insert(frame.values.end(), row.cells.begin(), row.cells.end());
    }
    frame.validate();
    return frame;
}

TimeSeriesFrame resample_linear(const TimeSeriesFrame& frame, Duration period) {
    if (frame.rows() < 2) {
        throw std::invalid_argument("resample_linear needs at least 2 rows, got " +
                                    std::to_string(frame.rows()));
    }
    if (period <= 0) throw std::invalid_argument("resample period must be positive");

    const std::size_t k = frame.feature_count();
    TimeSeriesFrame out;
    out.feature_names = frame.feature_names;

    const TimePoint first = frame.timestamps.front();
    const TimePoint last = frame.timestamps.back();
    std::size_t hi = 1;  // input row bracketing the grid point from above
    for (TimePoint t = first; t <= last; t += period) {
        while (frame.timestamps[hi] < t) ++hi;
        const std::size_t lo = hi - 1;
        out.timestamps.push_back(t);
        for (std::size_t c = 0; c < k; ++c) {
            if (frame.timestamps[hi] == t) {
                out.values.push_back(frame.at(hi, c));
            } else {
                out.values.push_back(lerp_at(t, frame.timestamps[lo], frame.timestamps[hi],
                                             frame.at(lo, c), frame.at(hi, c)));
            }
        }
    }
    return out;
}

std::vector<EventInterval> events_from_point_labels(const std::vector<int>& labels,
                                                    const std::vector<TimePoint>& timestamps) {
    if (labels.size() != timestamps.size()) {
        throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                    " does not match timestamp count " +
                                    std::to_string(timestamps.size()));
    }
    std::vector<EventInterval> events;
    std::size_t i = 0;
    while (i < labels.size()) {
        if (labels[i] == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < labels.size() && labels[j + 1] != 0) ++j;
        events.push_back({timestamps[i], timestamps[j],
                          EventInterval::Source::derived_from_point_labels});
        i = j + 1;
    }
    return events;
}

namespace {

TimePoint parse_cell_timestamp(const std::string& cell, const std::string& path, std::size_t row) {
    try {
        return parse_timestamp(cell);
    } catch (const std::exception&) {
        throw std::invalid_argument("row " + std::to_string(row) + " of '" + path +
                                    "': unparseable timestamp '" + cell + "'");
    }
}

}  // namespace

std::vector<EventInterval> load_events_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.has_column("start") && table.has_column("end")) {
        const std::size_t s = table.column("start"), e = table.column("end");
        std::vector<EventInterval> events;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            events.push_back({parse_cell_timestamp(table.rows[r][s], path, r + 2),
                              parse_cell_timestamp(table.rows[r][e], path, r + 2),
                              EventInterval::Source::human_annotation});
        }
        std::sort(events.begin(), events.end(),
                  [](const EventInterval& a, const EventInterval& b) { return a.start < b.start; });
        validate_events(events);
        return events;
    }
    if (table.has_column("label")) {
        const std::size_t ts_col = table.has_column("timestamp") ? table.column("timestamp") : 0;
        const std::size_t label_col = table.column("label");
        std::vector<TimePoint> ts;
        std::vector<int> labels;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            ts.push_back(parse_cell_timestamp(table.rows[r][ts_col], path, r + 2));
            const std::string& cell = table.rows[r][label_col];
            if (cell != "0" && cell != "1") {
                throw std::invalid_argument("row " + std::to_string(r + 2) + " of '" + path +
                                            "': label must be 0 or 1, got '" + cell + "'");
            }
            labels.push_back(cell == "1" ? 1 : 0);
        }
        return events_from_point_labels(labels, ts);
    }
    throw std::invalid_argument("'" + path +
                                "' is neither an interval CSV (start,end) nor a point-label CSV "
                                "(timestamp,label)");
}

std::vector<std::pair<TimePoint, TimePoint>> load_intervals_csv(const std::string& path) {
    auto events = load_events_csv(path);
    std::vector<std::pair<TimePoint, TimePoint>> out;
    out.reserve(events.size());
    for (const auto& e : events) out.emplace_back(e.start, e.end);
    return out;
}

std::map<std::string, double> load_importance_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    const std::size_t f = table.column("feature"), w = table.column("weight");
    std::map<std::string, double> importance;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        double v = 0;
        if (!parse_numeric(table.rows[r][w], v)) {
            throw std::invalid_argument("row " + std::to_string(r + 2) + " of '" + path +
                                        "': non-numeric weight '" + table.rows[r][w] + "'");
        }
        importance[table.rows[r][f]] = v;
    }
    return importance;
}

NormalizationStats fit_zscore(const TimeSeriesFrame& frame, std::size_t prefix_rows) {
    if (prefix_rows == 0 || prefix_rows > frame.rows()) {
        throw std::invalid_argument("normalization prefix must cover 1.." +
                                    std::to_string(frame.rows()) + " rows, got " +
                                    std::to_string(prefix_rows));
    }
    const std::size_t k = frame.feature_count();
    NormalizationStats stats;
    stats.feature_names = frame.feature_names;
    stats.mean.assign(k, 0.0);
    stats.stddev.assign(k, 1.0);
    for (std::size_t c = 0; c < k; ++c) {
        double sum = 0;
        for (std::size_t r = 0; r < prefix_rows; ++r) sum += frame.at(r, c);
        const double mean = sum / static_cast<double>(prefix_rows);
        double ssq = 0;
        for (std::size_t r = 0; r < prefix_rows; ++r) {
            const double d = frame.at(r, c) - mean;
            ssq += d * d;
        }
        const double sd = std::sqrt(ssq / static_cast<double>(prefix_rows));
        stats.mean[c] = mean;
        stats.stddev[c] = sd > 0 ? sd : 1.0;
    }
    return stats;
}

TimeSeriesFrame apply_zscore(const TimeSeriesFrame& frame, const NormalizationStats& stats) {
    if (stats.feature_names != frame.feature_names) {
        throw std::invalid_argument("normalization statistics were fit on different features");
    }
    TimeSeriesFrame out = frame;
    const std::size_t k = frame.feature_count();
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            out.at(r, c) = (frame.at(r, c) - stats.mean[c]) / stats.stddev[c];
        }
    }
    return out;
}

}  // namespace tdev

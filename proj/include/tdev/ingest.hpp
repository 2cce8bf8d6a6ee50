#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdev/frame.hpp"

namespace tdev {

enum class MissingPolicy { error, drop_row, interpolate };

struct IngestConfig {
    std::string timestamp_column = "timestamp";
    // When absent, every non-timestamp column is loaded in header order.
    std::optional<std::vector<std::string>> feature_columns;
    MissingPolicy missing = MissingPolicy::error;
};

// Loads a CSV with a header row into a frame, sorted by timestamp.
// Rejects unparseable timestamps (naming the row), duplicate instants
// (naming the instant) and non-numeric cells (naming row and column).
TimeSeriesFrame load_csv(const std::string& path, const IngestConfig& config);

// Resamples onto an arithmetic grid from the first to the last observed
// instant; values are linear interpolations of the bracketing rows. Never
// extrapolates: the grid is clipped to the observed span.
TimeSeriesFrame resample_linear(const TimeSeriesFrame& frame, Duration period);

// One interval per maximal run of consecutive 1-labels.
std::vector<EventInterval> events_from_point_labels(const std::vector<int>& labels,
                                                    const std::vector<TimePoint>& timestamps);

// Event files come in two layouts: interval CSV (start,end) or point-label
// CSV (timestamp,label). The header decides which one applies.
std::vector<EventInterval> load_events_csv(const std::string& path);

// Interval CSV used for window restriction masks, same (start,end) layout.
std::vector<std::pair<TimePoint, TimePoint>> load_intervals_csv(const std::string& path);

// feature,weight rows for externally supplied feature importance.
std::map<std::string, double> load_importance_csv(const std::string& path);

// Per-feature z-scoring. Statistics come from a training prefix and are
// frozen; they are never recomputed on scoring data.
struct NormalizationStats {
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> stddev;  // zero-variance features keep stddev 1
};

NormalizationStats fit_zscore(const TimeSeriesFrame& frame, std::size_t prefix_rows);
TimeSeriesFrame apply_zscore(const TimeSeriesFrame& frame, const NormalizationStats& stats);

}  // namespace tdev

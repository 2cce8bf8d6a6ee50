#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tdev/time_axis.hpp"

namespace tdev {

// Timestamped k-dimensional numeric matrix. Timestamps are strictly
// increasing; every row holds exactly one value per feature. Missing values
// are not representable -- ingestion either interpolates or rejects them.
struct TimeSeriesFrame {
    std::vector<TimePoint> timestamps;
    std::vector<double> values;  // row-major, rows() x feature_count()
    std::vector<std::string> feature_names;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t feature_count() const { return feature_names.size(); }

    double at(std::size_t row, std::size_t col) const {
        return values[row * feature_names.size() + col];
    }
    double& at(std::size_t row, std::size_t col) {
        return values[row * feature_names.size() + col];
    }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * feature_names.size(), feature_names.size()};
    }

    // Index of a feature by name; throws std::invalid_argument if absent.
    std::size_t feature_index(const std::string& name) const;

    // Enforces the type invariants; throws std::invalid_argument on violation.
    void validate() const;
};

struct EventInterval {
    enum class Source { human_annotation, derived_from_point_labels };

    TimePoint start = 0;
    TimePoint end = 0;
    Source source = Source::human_annotation;
};

// Intervals within one event list must be disjoint and sorted.
void validate_events(const std::vector<EventInterval>& events);

// Closed-interval overlap test shared by alerting and evaluation.
inline bool intervals_overlap(TimePoint a_start, TimePoint a_end, TimePoint b_start,
                              TimePoint b_end) {
    return a_start <= b_end && b_start <= a_end;
}

}  // namespace tdev

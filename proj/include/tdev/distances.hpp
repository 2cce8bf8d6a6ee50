#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdev/windowing.hpp"

namespace tdev {

enum class Measure { euclidean_slide, dtw, neg_max_xcorr };
enum class SlideAggregation { min, mean };
enum class DimAggregation { mean, max };
enum class FeatureRelevance { target_window_variance, external_importance_vector };

struct DistanceSpec {
    Measure measure = Measure::neg_max_xcorr;
    std::size_t offset_step = 1;
    SlideAggregation slide_aggregation = SlideAggregation::min;
    DimAggregation dimension_aggregation = DimAggregation::mean;
    std::optional<std::size_t> top_k_features;
    FeatureRelevance feature_relevance = FeatureRelevance::target_window_variance;
    std::map<std::string, double> importance;  // external_importance_vector weights

    void validate() const;

    // d(a, a): 0 for euclidean/dtw, -1 for neg_max_xcorr.
    double identity_floor() const;
    // Score of a window with no predecessors: the measure's maximum.
    double sentinel_score() const;
};

Measure parse_measure(const std::string& name);
std::string measure_name(Measure m);

// Equal lengths: per-dimension Euclidean norm of the difference divided by
// sqrt(length), aggregated across dimensions. Unequal lengths: the shorter
// window slides across the longer at offset_step and the per-offset
// distances are reduced by slide_aggregation.
double euclidean_slide(const Window& w1, const Window& w2, const DistanceSpec& spec);

// Classic per-dimension DTW with absolute-difference local cost and
// {match, insert, delete} steps over the full table; the optimal-path cost
// is divided by the path length so values are comparable across lengths.
double dtw_distance(const Window& w1, const Window& w2, const DistanceSpec& spec);

// Per dimension: the maximum of the full discrete cross-correlation over
// all lags, divided by the product of the two dimension norms, negated.
// More similar pairs score more negative; the range is [-1, 1]. Zero-norm
// dimensions are skipped with a warning; all-zero windows are an error.
double xcorr_distance(const Window& w1, const Window& w2, const DistanceSpec& spec);

// Shared features ranked by relevance (target-window variance or external
// importance), truncated to top_k_features; ties break by feature name.
std::vector<std::string> select_top_features(const Window& target, const Window& candidate,
                                             const DistanceSpec& spec);

// Dispatch on spec.measure, applying top-k feature restriction first.
double window_distance(const Window& target, const Window& candidate, const DistanceSpec& spec);

namespace detail {

// Shared dimensions as (target dim, candidate dim) pairs in target order.
std::vector<std::pair<std::size_t, std::size_t>> shared_dims(const Window& target,
                                                             const Window& candidate);

// shared_dims restricted to the top-k relevant features when configured.
std::vector<std::pair<std::size_t, std::size_t>> resolve_dims(const Window& target,
                                                              const Window& candidate,
                                                              const DistanceSpec& spec);

// Euclidean distance with optional early abandonment: returns +inf as soon
// as a running lower bound strictly exceeds abandon_above. With pruning
// disabled the arithmetic is identical to the pruned path, so completed
// results agree bitwise. mac_ops counts multiply-accumulate iterations.
double euclid_pruned(const Window& w1, const Window& w2,
                     const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                     const DistanceSpec& spec, bool enable_pruning, double abandon_above,
                     std::uint64_t* mac_ops);

// Maximum of the raw cross-correlation over all lags, both evaluation
// routes. Windows above kXcorrFftThreshold samples take the transform path.
double xcorr_max_direct(const std::vector<double>& a, const std::vector<double>& b);
double xcorr_max_fft(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr std::size_t kXcorrFftThreshold = 256;

}  // namespace detail

}  // namespace tdev

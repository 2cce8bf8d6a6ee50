#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdev/distances.hpp"
#include "tdev/windowing.hpp"

namespace tdev {

struct ScoreEntry {
    TimePoint timestamp = 0;         // origin timestamp of the scored window
    double score = 0.0;
    bool sentinel = false;           // no predecessors existed
    std::optional<std::size_t> best_match;  // index into the scored window list
    std::optional<TimePoint> best_match_ts;
    std::string spec_id;
};

enum class SentinelPolicy { measure_maximum };

struct DeviationSeries {
    std::vector<ScoreEntry> entries;  // time-ordered, one per scored window
    Measure measure = Measure::neg_max_xcorr;
    SentinelPolicy sentinel_policy = SentinelPolicy::measure_maximum;
};

struct ScoringStats {
    std::uint64_t distance_evaluations = 0;
    std::uint64_t scalar_ops = 0;  // multiply-accumulate count in euclidean kernels
    std::uint64_t candidates_abandoned = 0;
};

// Each window's score is the minimum distance to its preceding windows
// (bounded by history_depth); best_match is the argmin, earliest predecessor
// on ties. Windows with no predecessors get the measure's maximum as a
// sentinel. Targets may be scored in parallel (`workers`); results are
// identical to sequential execution because the reduction order per target
// is fixed by predecessor index.
DeviationSeries score_windows(const std::vector<Window>& windows, const DistanceSpec& spec,
                              std::optional<std::size_t> history_depth,
                              ScoringStats* stats = nullptr, std::size_t workers = 1);

// Exact pruning for the euclidean measure: per-dimension partial sums
// abandon a candidate once the accumulated squared difference exceeds the
// current best. Scores equal score_windows bitwise. Other measures have no
// running lower bound and fall back to the naive scorer.
DeviationSeries score_windows_pruned(const std::vector<Window>& windows, const DistanceSpec& spec,
                                     std::optional<std::size_t> history_depth,
                                     ScoringStats* stats = nullptr, std::size_t workers = 1);

// Rolling use: scores only the windows beyond the already-scored prefix and
// appends. Scores depend only on the past, so previously computed entries
// never change.
DeviationSeries extend_scores(const DeviationSeries& prefix, const std::vector<Window>& windows,
                              const DistanceSpec& spec, std::optional<std::size_t> history_depth,
                              bool pruned = false, ScoringStats* stats = nullptr,
                              std::size_t workers = 1);

enum class MergePolicy { max, mean };

// Combines per-spec score series onto the union of their origin timestamps.
// A window's score holds until the next window of its spec (step
// interpolation). Scores must come from the same measure.
DeviationSeries merge_spec_scores(const std::vector<DeviationSeries>& series_per_spec,
                                  MergePolicy policy);

// CSV form: timestamp,score,best_match_timestamp (empty for sentinels).
void write_scores_csv(const std::string& path, const DeviationSeries& series);
DeviationSeries read_scores_csv(const std::string& path, Measure measure);

// Explanation export: the aligned top-feature traces of a scored window
// and its best match, written as a CSV pair for external plotting.
void write_explanation_pair(const std::string& target_path, const std::string& match_path,
                            const Window& target, const Window& match, const DistanceSpec& spec);

}  // namespace tdev

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdev/deviation.hpp"
#include "tdev/distances.hpp"
#include "tdev/windowing.hpp"

namespace tdev {

enum class AlertLabel { true_positive, false_positive };
enum class LabelSource { human, propagated, default_positive };

struct VoteRecord {
    std::int64_t alert_id = 0;
    double distance = 0.0;
    AlertLabel label = AlertLabel::true_positive;
    double weight = 1.0;
};

struct Alert {
    std::int64_t id = 0;
    TimePoint start = 0;
    TimePoint end = 0;
    double peak_score = 0.0;
    // Indices into the score entries / window list that produced the alert.
    std::vector<std::size_t> member_windows;
    // Member with the peak score; alert-to-alert distances compare these.
    std::size_t representative_window = 0;
    std::optional<AlertLabel> label;
    std::optional<LabelSource> label_source;
    std::vector<VoteRecord> vote_record;
};

struct VotingConfig {
    double t_cutoff = 0.0;     // similarity threshold in the measure's units
    std::size_t k = 3;         // voting set size
    double T_anom = 0.5;       // vote-mean decision threshold
    enum class Weighting { uniform, similarity_weighted };
    Weighting weighting = Weighting::uniform;
    std::size_t min_votes = 1;

    void validate() const;
};

// Maximal runs of entries with score >= threshold become alerts; runs
// separated by less than merge_gap are merged. peak_score is the maximum
// member score.
std::vector<Alert> extract_alerts(const DeviationSeries& scores, double threshold,
                                  Duration merge_gap);

struct VoteOutcome {
    AlertLabel label = AlertLabel::true_positive;
    LabelSource source = LabelSource::default_positive;
    std::vector<VoteRecord> votes;
};

// Majority voting over the k most similar past alerts within t_cutoff.
// Too few candidates trigger the default-positive rule: a novel alert is
// treated as anomalous. `windows` is the list the alerts' member indices
// refer to. Every registry alert must carry a label and strictly precede
// the new alert.
VoteOutcome vote_label(const Alert& new_alert, const std::vector<Alert>& registry,
                       const std::vector<Window>& windows, const DistanceSpec& dist,
                       const VotingConfig& config);

// Labels `unlabeled` in time order; each alert votes against the seed plus
// everything labeled before it, then joins the registry.
std::vector<Alert> bootstrap_labels(const std::vector<Alert>& seed,
                                    const std::vector<Alert>& unlabeled,
                                    const std::vector<Window>& windows, const DistanceSpec& dist,
                                    const VotingConfig& config);

struct FilterResult {
    std::vector<Alert> emitted;
    std::vector<Alert> suppressed;  // false positives, recorded rather than deleted
};

FilterResult filter_alerts(const std::vector<Alert>& labeled);

// Registry persistence as line-delimited JSON records.
void write_registry_jsonl(const std::string& path, const std::vector<Alert>& alerts);
std::vector<Alert> read_registry_jsonl(const std::string& path);

// Seed labels: two-column CSV (alert, label). The first column is either an
// integer alert id or an ISO-8601 interval "start/end" matched by overlap.
// Labels are 1 (true positive) or 0 (false positive); matched alerts are
// marked human-labeled. With strict set, a row matching no alert is an
// error; otherwise it is skipped (intervals may miss at high thresholds).
void apply_seed_labels_csv(const std::string& path, std::vector<Alert>& alerts,
                           bool strict = true);

std::string label_name(AlertLabel label);
std::string label_source_name(LabelSource source);

}  // namespace tdev

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tdev/alerting.hpp"
#include "tdev/deviation.hpp"
#include "tdev/distances.hpp"
#include "tdev/evaluation.hpp"
#include "tdev/ingest.hpp"
#include "tdev/modes.hpp"
#include "tdev/smoothing.hpp"
#include "tdev/tuning.hpp"
#include "tdev/windowing.hpp"

namespace tdev {

// Raised on invalid configuration; `key` is the failing key path.
struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(std::string key_path, const std::string& message)
        : std::runtime_error(message), key(std::move(key_path)) {}
};

struct PipelineConfig {
    struct Run {
        std::uint64_t seed = 0;
        std::string output_dir = "out";
        std::size_t workers = 1;
    } run;

    struct Ingest {
        std::string input;
        std::string timestamp_column = "timestamp";
        std::optional<std::vector<std::string>> feature_columns;
        MissingPolicy missing = MissingPolicy::error;
        double resample_period_seconds = 0.0;  // 0 disables resampling
        std::string events_file;
    } ingest;

    struct Normalize {
        bool enabled = true;
        double training_prefix_fraction = 0.5;
    } normalize;

    SmoothingConfig smoothing;

    std::vector<WindowSpec> window_specs;
    std::map<std::string, std::string> mask_files;  // spec id -> interval CSV

    DistanceSpec distance;
    std::string importance_file;

    struct Deviation {
        bool pruned = true;
        MergePolicy merge_policy = MergePolicy::max;
        std::size_t explain_top = 0;
    } deviation;

    struct Alerting {
        std::optional<double> threshold;
        double threshold_quantile = 0.95;  // used when threshold is absent
        double merge_gap_seconds = 0.0;
        VotingConfig voting;
        std::string seed_labels_file;
        // With no seed file, label this share of the earliest alerts from the
        // recorded events, as an annotator consistent with them would.
        double ground_truth_seed_fraction = 0.0;
        std::string scores_file;    // `alerts` input; defaults to <output_dir>/scores.csv
        std::string registry_file;  // `vote`/`eval` input; defaults to <output_dir>/alerts.jsonl
    } alerting;

    struct Evaluation {
        double lead_seconds = 0.0;
        std::size_t sweep_thresholds = 20;
        std::string scatter_file_a;
        std::string scatter_file_b;
    } evaluation;

    struct Tuning {
        TuningSpace space;
        std::vector<std::size_t> grid_resolution;
        bool use_grid = false;
        std::size_t sweep_points = 20;  // decision criteria per objective
    } tuning;

    struct Modes {
        double radius = 0.0;
        double block_seconds = 0.0;
        std::size_t k = 2;
    } modes;
};

// Parses and validates a config file (JSON, versioned by config_version),
// applying `overrides` ("section.key=value") on top. Throws ConfigError.
PipelineConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides = {});
PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides = {});

// Ingested, normalized, smoothed data plus the windows of every spec.
struct PreparedData {
    std::shared_ptr<const TimeSeriesFrame> smoothed;
    std::vector<std::vector<Window>> windows_per_spec;
};

PreparedData prepare_data(const PipelineConfig& config);
DeviationSeries compute_scores(const PreparedData& data, const PipelineConfig& config,
                               ScoringStats* stats = nullptr);

// Threshold in force for alert extraction: the configured value, or the
// configured quantile of the finite non-sentinel scores.
double resolve_threshold(const DeviationSeries& scores, const PipelineConfig& config);

// Seed labels (file or ground-truth fraction), bootstrap voting, filtering.
// This is the one labeling path shared by `vote`, `pipeline` and the tuning
// objective so tuned parameters reproduce exactly under a plain run.
struct LabelingOutcome {
    std::vector<Alert> labeled;
    std::vector<Alert> emitted;
    std::vector<Alert> suppressed;
};
LabelingOutcome label_and_filter(std::vector<Alert> alerts, const std::vector<Window>& windows,
                                 const DistanceSpec& dist, const PipelineConfig& config,
                                 const std::vector<EventInterval>& events);

// The tuning objective: run the pipeline under `params` (bound by dimension
// name onto t_cutoff / k / T_anom / smoothing_length / window_length),
// sweep the alert decision criterion and return the best
// event-recall / false-alert-rate ratio. Pipeline failures yield value 0
// with a diagnostic instead of an exception so the optimizer can continue.
ObjectiveValue pipeline_objective(const PipelineConfig& base,
                                  const std::vector<EventInterval>& events,
                                  const std::vector<std::string>& names,
                                  const std::vector<double>& params);

// Subcommands: score, alerts, vote, eval, scatter, tune, modes, pipeline.
// Returns the process exit status (0 success). Data errors propagate as
// exceptions for the caller to render.
int run_subcommand(const std::string& name, const PipelineConfig& config);

}  // namespace tdev

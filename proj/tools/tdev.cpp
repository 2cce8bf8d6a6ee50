#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdev/pipeline.hpp"

namespace {

void add_flag_override(std::vector<std::string>& overrides, const std::string& key,
                       const std::string& value) {
    overrides.push_back(key + "=" + value);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pattern-similarity anomaly detection for multivariate time series"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> set_overrides;
    std::vector<std::string> overlay_paths;

    app.add_option("-c,--config", config_path, "Pipeline config file (JSON)")->required();
    app.add_option("--set", set_overrides, "Override a config key, e.g. --set alerting.k=5");
    app.add_option("--overlay", overlay_paths,
                   "Overlay config file(s) merged over the base config");

    std::string input, output_dir, distance, mask_file, importance_file, events_file;
    std::string scores_file, registry_file, seed_labels_file;
    long long smooth_length = -1, window_length = -1, stride = -1, history_depth = -1;
    long long top_k = -1, workers = -1, seed = -1, offset_step = -1;
    double threshold = std::numeric_limits<double>::quiet_NaN();

    for (auto* sub : {app.add_subcommand("score", "Compute deviation scores"),
                      app.add_subcommand("alerts", "Threshold scores into an alert registry"),
                      app.add_subcommand("vote", "Propagate labels by majority voting"),
                      app.add_subcommand("eval", "Evaluate alerts against recorded events"),
                      app.add_subcommand("scatter", "Join two risk score series over events"),
                      app.add_subcommand("tune", "Optimize framework parameters"),
                      app.add_subcommand("modes", "Discover recurring patterns and modes"),
                      app.add_subcommand("pipeline", "Run every stage in order")}) {
        sub->fallthrough();  // global flags may follow the subcommand name
        sub->add_option("--input", input, "Input CSV (overrides ingest.input)");
        sub->add_option("--output-dir", output_dir, "Artifact directory");
        sub->add_option("--events-file", events_file, "Event CSV (start,end or ts,label)");
        sub->add_option("--smooth-length", smooth_length, "Hanning kernel length (odd)");
        sub->add_option("--window-length", window_length, "Window length in samples");
        sub->add_option("--stride", stride, "Window stride in samples");
        sub->add_option("--history-depth", history_depth, "Max predecessors compared");
        sub->add_option("--mask-file", mask_file, "Window restriction intervals (CSV)");
        sub->add_option("--distance", distance, "euclid|dtw|xcorr");
        sub->add_option("--offset-step", offset_step, "Slide step for unequal lengths");
        sub->add_option("--top-k-features", top_k, "Restrict comparisons to k features");
        sub->add_option("--importance-file", importance_file, "feature,weight CSV");
        sub->add_option("--threshold", threshold, "Alert extraction threshold");
        sub->add_option("--scores-file", scores_file, "Scores CSV input");
        sub->add_option("--registry-file", registry_file, "Alert registry input");
        sub->add_option("--seed-labels", seed_labels_file, "Seed label CSV (alert,label)");
        sub->add_option("--workers", workers, "Intra-stage parallelism");
        sub->add_option("--seed", seed, "Run seed");
    }

    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> overrides;
    for (const std::string& path : overlay_paths) {
        // Overlay files are plain config fragments; flatten them to overrides.
        std::ifstream in(path);
        if (!in) {
            std::cerr << nlohmann::json{{"error", "cannot open overlay '" + path + "'"}}.dump()
                      << "\n";
            return 2;
        }
        nlohmann::json overlay;
        try {
            overlay = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << nlohmann::json{{"error", std::string("overlay: ") + e.what()}}.dump()
                      << "\n";
            return 2;
        }
        overlay.erase("config_version");
        overlay.erase("tuning_unbound");
        for (const auto& [section, body] : overlay.items()) {
            if (!body.is_object()) {
                overrides.push_back(section + "=" + body.dump());
                continue;
            }
            for (const auto& [key, value] : body.items()) {
                overrides.push_back(section + "." + key + "=" + value.dump());
            }
        }
    }

    if (!input.empty()) add_flag_override(overrides, "ingest.input", input);
    if (!events_file.empty()) add_flag_override(overrides, "ingest.events_file", events_file);
    if (!output_dir.empty()) add_flag_override(overrides, "run.output_dir", output_dir);
    if (smooth_length >= 0) {
        add_flag_override(overrides, "smoothing.kernel_length", std::to_string(smooth_length));
    }
    if (window_length >= 0) {
        add_flag_override(overrides, "windowing.length", std::to_string(window_length));
    }
    if (stride >= 0) add_flag_override(overrides, "windowing.stride", std::to_string(stride));
    if (history_depth >= 0) {
        add_flag_override(overrides, "windowing.history_depth", std::to_string(history_depth));
    }
    if (!mask_file.empty()) add_flag_override(overrides, "windowing.mask_file", mask_file);
    if (!distance.empty()) add_flag_override(overrides, "distance.measure", distance);
    if (offset_step >= 0) {
        add_flag_override(overrides, "distance.offset_step", std::to_string(offset_step));
    }
    if (top_k >= 0) add_flag_override(overrides, "distance.top_k_features", std::to_string(top_k));
    if (!importance_file.empty()) {
        add_flag_override(overrides, "distance.importance_file", importance_file);
    }
    if (!std::isnan(threshold)) {
        add_flag_override(overrides, "alerting.threshold", tdev::format_double(threshold));
    }
    if (!scores_file.empty()) add_flag_override(overrides, "alerting.scores_file", scores_file);
    if (!registry_file.empty()) {
        add_flag_override(overrides, "alerting.registry_file", registry_file);
    }
    if (!seed_labels_file.empty()) {
        add_flag_override(overrides, "alerting.seed_labels_file", seed_labels_file);
    }
    if (workers >= 0) add_flag_override(overrides, "run.workers", std::to_string(workers));
    if (seed >= 0) add_flag_override(overrides, "run.seed", std::to_string(seed));
    for (const std::string& o : set_overrides) overrides.push_back(o);

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
        const tdev::PipelineConfig config = tdev::load_config(config_path, overrides);
        return tdev::run_subcommand(subcommand, config);
    } catch (const tdev::ConfigError& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"key", e.key}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}

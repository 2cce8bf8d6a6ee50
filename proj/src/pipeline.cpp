#include "tdev/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tdev {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& message) {
    throw ConfigError(key, message);
}

void check_known_keys(const json& obj, const std::string& section,
                      const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            fail(section.empty() ? key : section + "." + key, "unknown configuration key");
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& section, const std::string& key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(section + "." + key, "value has the wrong type");
    }
}

void require_file(const std::string& key, const std::string& path) {
    if (!std::filesystem::exists(path)) {
        fail(key, "referenced file '" + path + "' does not exist");
    }
}

json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return json(text);  // bare strings stay strings
    }
}

void apply_overrides(json& root, const std::vector<std::string>& overrides) {
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            fail(o, "override must look like section.key=value");
        }
        const std::string path = o.substr(0, eq);
        json value = parse_override_value(o.substr(eq + 1));

        json* node = &root;
        std::size_t begin = 0;
        while (true) {
            const auto dot = path.find('.', begin);
            const std::string part = path.substr(begin, dot - begin);
            if (part.empty()) fail(path, "override key path has an empty segment");
            if (dot == std::string::npos) {
                (*node)[part] = std::move(value);
                break;
            }
            node = &(*node)[part];
            begin = dot + 1;
        }
    }
}

MissingPolicy parse_missing_policy(const std::string& name) {
    if (name == "error") return MissingPolicy::error;
    if (name == "drop_row") return MissingPolicy::drop_row;
    if (name == "interpolate") return MissingPolicy::interpolate;
    fail("ingest.missing_policy", "expected error|drop_row|interpolate, got '" + name + "'");
}

PipelineConfig parse_config(const json& root) {
    PipelineConfig cfg;
    check_known_keys(root, "", {"config_version", "run", "ingest", "normalize", "smoothing",
                                "windowing", "distance", "deviation", "alerting", "evaluation",
                                "tuning", "modes"});
    if (!root.contains("config_version")) fail("config_version", "missing");
    if (root.at("config_version").get<int>() != 1) {
        fail("config_version", "unsupported version, expected 1");
    }

    if (root.contains("run")) {
        const json& run = root.at("run");
        check_known_keys(run, "run", {"seed", "output_dir", "workers"});
        cfg.run.seed = get_or<std::uint64_t>(run, "run", "seed", 0);
        cfg.run.output_dir = get_or<std::string>(run, "run", "output_dir", "out");
        cfg.run.workers = get_or<std::size_t>(run, "run", "workers", 1);
        if (cfg.run.workers == 0) fail("run.workers", "must be >= 1");
    }

    if (root.contains("ingest")) {
        const json& ingest = root.at("ingest");
        check_known_keys(ingest, "ingest",
                         {"input", "timestamp_column", "feature_columns", "missing_policy",
                          "resample_period_seconds", "events_file"});
        cfg.ingest.input = get_or<std::string>(ingest, "ingest", "input", "");
        cfg.ingest.timestamp_column =
            get_or<std::string>(ingest, "ingest", "timestamp_column", "timestamp");
        if (ingest.contains("feature_columns") && !ingest.at("feature_columns").is_null()) {
            cfg.ingest.feature_columns =
                ingest.at("feature_columns").get<std::vector<std::string>>();
        }
        cfg.ingest.missing = parse_missing_policy(
            get_or<std::string>(ingest, "ingest", "missing_policy", "error"));
        cfg.ingest.resample_period_seconds =
            get_or<double>(ingest, "ingest", "resample_period_seconds", 0.0);
        if (cfg.ingest.resample_period_seconds < 0) {
            fail("ingest.resample_period_seconds", "must be >= 0");
        }
        cfg.ingest.events_file = get_or<std::string>(ingest, "ingest", "events_file", "");
    }

    if (root.contains("normalize")) {
        const json& normalize = root.at("normalize");
        check_known_keys(normalize, "normalize", {"enabled", "training_prefix_fraction"});
        cfg.normalize.enabled = get_or<bool>(normalize, "normalize", "enabled", true);
        cfg.normalize.training_prefix_fraction =
            get_or<double>(normalize, "normalize", "training_prefix_fraction", 0.5);
        if (cfg.normalize.training_prefix_fraction <= 0.0 ||
            cfg.normalize.training_prefix_fraction > 1.0) {
            fail("normalize.training_prefix_fraction", "must lie in (0, 1]");
        }
    }

    if (root.contains("smoothing")) {
        const json& smoothing = root.at("smoothing");
        check_known_keys(smoothing, "smoothing", {"kernel_length", "per_feature_overrides"});
        cfg.smoothing.kernel_length =
            get_or<std::size_t>(smoothing, "smoothing", "kernel_length", 11);
        if (smoothing.contains("per_feature_overrides")) {
            for (const auto& [name, value] : smoothing.at("per_feature_overrides").items()) {
                cfg.smoothing.per_feature_overrides[name] = value.get<std::size_t>();
            }
        }
        try {
            cfg.smoothing.validate();
        } catch (const std::exception& e) {
            fail("smoothing.kernel_length", e.what());
        }
    }

    {
        json specs = json::array();
        if (root.contains("windowing")) {
            const json& windowing = root.at("windowing");
            if (windowing.is_array()) {
                specs = windowing;
            } else {
                check_known_keys(windowing, "windowing",
                                 {"specs", "length", "stride", "history_depth", "feature_subset",
                                  "mask_file", "allow_gaps", "id"});
                if (windowing.contains("specs")) {
                    specs = windowing.at("specs");
                } else {
                    specs.push_back(windowing);
                }
            }
        }
        if (specs.empty()) specs.push_back(json::object());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const json& spec_json = specs[i];
            const std::string section = "windowing.specs[" + std::to_string(i) + "]";
            check_known_keys(spec_json, section,
                             {"length", "stride", "history_depth", "feature_subset", "mask_file",
                              "allow_gaps", "id"});
            WindowSpec spec;
            spec.id = get_or<std::string>(spec_json, section, "id", "w" + std::to_string(i));
            spec.length = get_or<std::size_t>(spec_json, section, "length", 32);
            spec.stride = get_or<std::size_t>(spec_json, section, "stride", 1);
            if (spec_json.contains("history_depth") && !spec_json.at("history_depth").is_null()) {
                spec.history_depth = spec_json.at("history_depth").get<std::size_t>();
            }
            if (spec_json.contains("feature_subset") && !spec_json.at("feature_subset").is_null()) {
                spec.feature_subset = spec_json.at("feature_subset").get<std::vector<std::string>>();
            }
            spec.allow_gaps = get_or<bool>(spec_json, section, "allow_gaps", false);
            const std::string mask = get_or<std::string>(spec_json, section, "mask_file", "");
            if (!mask.empty()) cfg.mask_files[spec.id] = mask;
            try {
                spec.validate();
            } catch (const std::exception& e) {
                fail(section, e.what());
            }
            cfg.window_specs.push_back(std::move(spec));
        }
    }

    if (root.contains("distance")) {
        const json& distance = root.at("distance");
        check_known_keys(distance, "distance",
                         {"measure", "offset_step", "slide_aggregation", "dimension_aggregation",
                          "top_k_features", "feature_relevance", "importance_file"});
        try {
            cfg.distance.measure =
                parse_measure(get_or<std::string>(distance, "distance", "measure", "xcorr"));
        } catch (const std::exception& e) {
            fail("distance.measure", e.what());
        }
        cfg.distance.offset_step = get_or<std::size_t>(distance, "distance", "offset_step", 1);
        const std::string slide =
            get_or<std::string>(distance, "distance", "slide_aggregation", "min");
        if (slide == "min") {
            cfg.distance.slide_aggregation = SlideAggregation::min;
        } else if (slide == "mean") {
            cfg.distance.slide_aggregation = SlideAggregation::mean;
        } else {
            fail("distance.slide_aggregation", "expected min|mean, got '" + slide + "'");
        }
        const std::string dim =
            get_or<std::string>(distance, "distance", "dimension_aggregation", "mean");
        if (dim == "mean") {
            cfg.distance.dimension_aggregation = DimAggregation::mean;
        } else if (dim == "max") {
            cfg.distance.dimension_aggregation = DimAggregation::max;
        } else {
            fail("distance.dimension_aggregation", "expected mean|max, got '" + dim + "'");
        }
        if (distance.contains("top_k_features") && !distance.at("top_k_features").is_null()) {
            cfg.distance.top_k_features = distance.at("top_k_features").get<std::size_t>();
        }
        const std::string relevance = get_or<std::string>(distance, "distance",
                                                          "feature_relevance",
                                                          "target_window_variance");
        if (relevance == "target_window_variance") {
            cfg.distance.feature_relevance = FeatureRelevance::target_window_variance;
        } else if (relevance == "external_importance_vector") {
            cfg.distance.feature_relevance = FeatureRelevance::external_importance_vector;
        } else {
            fail("distance.feature_relevance",
                 "expected target_window_variance|external_importance_vector, got '" + relevance +
                     "'");
        }
        cfg.importance_file = get_or<std::string>(distance, "distance", "importance_file", "");
        try {
            cfg.distance.validate();
        } catch (const std::exception& e) {
            fail("distance", e.what());
        }
    }

    if (root.contains("deviation")) {
        const json& deviation = root.at("deviation");
        check_known_keys(deviation, "deviation", {"pruned", "merge_policy", "explain_top"});
        cfg.deviation.pruned = get_or<bool>(deviation, "deviation", "pruned", true);
        const std::string policy =
            get_or<std::string>(deviation, "deviation", "merge_policy", "max");
        if (policy == "max") {
            cfg.deviation.merge_policy = MergePolicy::max;
        } else if (policy == "mean") {
            cfg.deviation.merge_policy = MergePolicy::mean;
        } else {
            fail("deviation.merge_policy", "expected max|mean, got '" + policy + "'");
        }
        cfg.deviation.explain_top = get_or<std::size_t>(deviation, "deviation", "explain_top", 0);
    }

    if (root.contains("alerting")) {
        const json& alerting = root.at("alerting");
        check_known_keys(alerting, "alerting",
                         {"threshold", "threshold_quantile", "merge_gap_seconds", "t_cutoff", "k",
                          "T_anom", "weighting", "min_votes", "seed_labels_file",
                          "ground_truth_seed_fraction", "scores_file", "registry_file"});
        if (alerting.contains("threshold") && !alerting.at("threshold").is_null()) {
            cfg.alerting.threshold = alerting.at("threshold").get<double>();
        }
        cfg.alerting.threshold_quantile =
            get_or<double>(alerting, "alerting", "threshold_quantile", 0.95);
        if (cfg.alerting.threshold_quantile < 0.0 || cfg.alerting.threshold_quantile > 1.0) {
            fail("alerting.threshold_quantile", "must lie in [0, 1]");
        }
        cfg.alerting.merge_gap_seconds =
            get_or<double>(alerting, "alerting", "merge_gap_seconds", 0.0);
        cfg.alerting.voting.t_cutoff = get_or<double>(alerting, "alerting", "t_cutoff", 0.0);
        cfg.alerting.voting.k = get_or<std::size_t>(alerting, "alerting", "k", 3);
        cfg.alerting.voting.T_anom = get_or<double>(alerting, "alerting", "T_anom", 0.5);
        const std::string weighting =
            get_or<std::string>(alerting, "alerting", "weighting", "uniform");
        if (weighting == "uniform") {
            cfg.alerting.voting.weighting = VotingConfig::Weighting::uniform;
        } else if (weighting == "similarity_weighted") {
            cfg.alerting.voting.weighting = VotingConfig::Weighting::similarity_weighted;
        } else {
            fail("alerting.weighting", "expected uniform|similarity_weighted, got '" + weighting +
                                           "'");
        }
        cfg.alerting.voting.min_votes = get_or<std::size_t>(alerting, "alerting", "min_votes", 1);
        try {
            cfg.alerting.voting.validate();
        } catch (const std::exception& e) {
            fail("alerting", e.what());
        }
        cfg.alerting.seed_labels_file =
            get_or<std::string>(alerting, "alerting", "seed_labels_file", "");
        cfg.alerting.ground_truth_seed_fraction =
            get_or<double>(alerting, "alerting", "ground_truth_seed_fraction", 0.0);
        if (cfg.alerting.ground_truth_seed_fraction < 0.0 ||
            cfg.alerting.ground_truth_seed_fraction > 1.0) {
            fail("alerting.ground_truth_seed_fraction", "must lie in [0, 1]");
        }
        cfg.alerting.scores_file = get_or<std::string>(alerting, "alerting", "scores_file", "");
        cfg.alerting.registry_file =
            get_or<std::string>(alerting, "alerting", "registry_file", "");
    }

    if (root.contains("evaluation")) {
        const json& evaluation = root.at("evaluation");
        check_known_keys(evaluation, "evaluation",
                         {"lead_seconds", "sweep_thresholds", "scatter_file_a", "scatter_file_b"});
        cfg.evaluation.lead_seconds = get_or<double>(evaluation, "evaluation", "lead_seconds", 0.0);
        if (cfg.evaluation.lead_seconds < 0) fail("evaluation.lead_seconds", "must be >= 0");
        cfg.evaluation.sweep_thresholds =
            get_or<std::size_t>(evaluation, "evaluation", "sweep_thresholds", 20);
        cfg.evaluation.scatter_file_a =
            get_or<std::string>(evaluation, "evaluation", "scatter_file_a", "");
        cfg.evaluation.scatter_file_b =
            get_or<std::string>(evaluation, "evaluation", "scatter_file_b", "");
    }

    if (root.contains("tuning")) {
        const json& tuning = root.at("tuning");
        check_known_keys(tuning, "tuning",
                         {"dimensions", "budget", "grid_resolution", "grid", "sweep_points"});
        if (tuning.contains("dimensions")) {
            const json& dims = tuning.at("dimensions");
            for (std::size_t i = 0; i < dims.size(); ++i) {
                const std::string section = "tuning.dimensions[" + std::to_string(i) + "]";
                check_known_keys(dims[i], section, {"name", "kind", "lo", "hi"});
                TuningDimension dim;
                dim.name = get_or<std::string>(dims[i], section, "name", "");
                if (dim.name.empty()) fail(section + ".name", "missing dimension name");
                const std::string kind = get_or<std::string>(dims[i], section, "kind",
                                                             "continuous");
                if (kind == "continuous") {
                    dim.kind = TuningDimension::Kind::continuous;
                } else if (kind == "integer") {
                    dim.kind = TuningDimension::Kind::integer;
                } else {
                    fail(section + ".kind", "expected continuous|integer, got '" + kind + "'");
                }
                dim.lo = get_or<double>(dims[i], section, "lo", 0.0);
                dim.hi = get_or<double>(dims[i], section, "hi", 1.0);
                cfg.tuning.space.dimensions.push_back(std::move(dim));
            }
        }
        cfg.tuning.space.budget = get_or<std::size_t>(tuning, "tuning", "budget", 25);
        if (tuning.contains("grid_resolution")) {
            cfg.tuning.grid_resolution =
                tuning.at("grid_resolution").get<std::vector<std::size_t>>();
        }
        cfg.tuning.use_grid = get_or<bool>(tuning, "tuning", "grid", false);
        cfg.tuning.sweep_points = get_or<std::size_t>(tuning, "tuning", "sweep_points", 20);
        if (cfg.tuning.sweep_points == 0) fail("tuning.sweep_points", "must be >= 1");
    }

    if (root.contains("modes")) {
        const json& modes = root.at("modes");
        check_known_keys(modes, "modes", {"radius", "block_seconds", "k"});
        cfg.modes.radius = get_or<double>(modes, "modes", "radius", 0.0);
        cfg.modes.block_seconds = get_or<double>(modes, "modes", "block_seconds", 0.0);
        cfg.modes.k = get_or<std::size_t>(modes, "modes", "k", 2);
    }

    cfg.tuning.space.seed = cfg.run.seed;
    return cfg;
}

void validate_cross_section(const PipelineConfig& cfg) {
    if (!cfg.ingest.input.empty()) require_file("ingest.input", cfg.ingest.input);
    if (!cfg.ingest.events_file.empty()) require_file("ingest.events_file", cfg.ingest.events_file);
    if (!cfg.importance_file.empty()) require_file("distance.importance_file", cfg.importance_file);
    if (!cfg.alerting.seed_labels_file.empty()) {
        require_file("alerting.seed_labels_file", cfg.alerting.seed_labels_file);
    }
    for (const auto& [spec_id, path] : cfg.mask_files) {
        require_file("windowing.mask_file (" + spec_id + ")", path);
    }
    if (cfg.distance.feature_relevance == FeatureRelevance::external_importance_vector &&
        cfg.importance_file.empty()) {
        fail("distance.importance_file",
             "required when feature_relevance is external_importance_vector");
    }
    for (const auto& spec : cfg.window_specs) {
        if (cfg.distance.top_k_features && spec.feature_subset &&
            *cfg.distance.top_k_features > spec.feature_subset->size()) {
            fail("distance.top_k_features", "exceeds the feature subset size of spec '" +
                                                spec.id + "'");
        }
        if (cfg.ingest.feature_columns && spec.feature_subset) {
            for (const auto& name : *spec.feature_subset) {
                if (std::find(cfg.ingest.feature_columns->begin(),
                              cfg.ingest.feature_columns->end(),
                              name) == cfg.ingest.feature_columns->end()) {
                    fail("windowing.feature_subset",
                         "feature '" + name + "' is not among ingest.feature_columns");
                }
            }
        }
    }
    if (cfg.distance.top_k_features && cfg.ingest.feature_columns &&
        *cfg.distance.top_k_features > cfg.ingest.feature_columns->size()) {
        fail("distance.top_k_features", "exceeds the ingested feature count");
    }
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text,
                                     const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("<config>", std::string("config is not valid JSON: ") + e.what());
    }
    apply_overrides(root, overrides);
    PipelineConfig cfg = parse_config(root);
    validate_cross_section(cfg);
    return cfg;
}

PipelineConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) fail("<config>", "cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str(), overrides);
}

PreparedData prepare_data(const PipelineConfig& config) {
    if (config.ingest.input.empty()) fail("ingest.input", "no input file configured");

    IngestConfig ingest;
    ingest.timestamp_column = config.ingest.timestamp_column;
    ingest.feature_columns = config.ingest.feature_columns;
    ingest.missing = config.ingest.missing;
    TimeSeriesFrame frame = load_csv(config.ingest.input, ingest);

    if (config.ingest.resample_period_seconds > 0) {
        frame = resample_linear(frame, seconds(config.ingest.resample_period_seconds));
    }
    if (config.normalize.enabled) {
        const auto prefix = static_cast<std::size_t>(
            std::ceil(config.normalize.training_prefix_fraction *
                      static_cast<double>(frame.rows())));
        frame = apply_zscore(frame, fit_zscore(frame, std::max<std::size_t>(1, prefix)));
    }
    frame = smooth(frame, config.smoothing);

    PreparedData data;
    data.smoothed = std::make_shared<TimeSeriesFrame>(std::move(frame));
    for (WindowSpec spec : config.window_specs) {
        auto mask = config.mask_files.find(spec.id);
        if (mask != config.mask_files.end()) {
            spec.restriction_mask = load_intervals_csv(mask->second);
        }
        data.windows_per_spec.push_back(slice_windows(data.smoothed, spec));
    }
    return data;
}

DeviationSeries compute_scores(const PreparedData& data, const PipelineConfig& config,
                               ScoringStats* stats) {
    DistanceSpec dist = config.distance;
    if (!config.importance_file.empty()) {
        dist.importance = load_importance_csv(config.importance_file);
    }

    std::vector<DeviationSeries> per_spec;
    for (std::size_t s = 0; s < data.windows_per_spec.size(); ++s) {
        const auto& spec = config.window_specs[s];
        const auto& windows = data.windows_per_spec[s];
        per_spec.push_back(config.deviation.pruned
                               ? score_windows_pruned(windows, dist, spec.history_depth, stats,
                                                      config.run.workers)
                               : score_windows(windows, dist, spec.history_depth, stats,
                                               config.run.workers));
    }
    return merge_spec_scores(per_spec, config.deviation.merge_policy);
}

double resolve_threshold(const DeviationSeries& scores, const PipelineConfig& config) {
    if (config.alerting.threshold) return *config.alerting.threshold;

    std::vector<double> finite;
    for (const auto& e : scores.entries) {
        if (!e.sentinel && std::isfinite(e.score)) finite.push_back(e.score);
    }
    if (finite.empty()) {
        throw std::runtime_error("no finite scores to derive a threshold from");
    }
    std::sort(finite.begin(), finite.end());
    const double q = config.alerting.threshold_quantile;
    const double pos = q * static_cast<double>(finite.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, finite.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return finite[lo] + w * (finite[hi] - finite[lo]);
}

namespace {

namespace fs = std::filesystem;

std::string out_path(const PipelineConfig& config, const std::string& name) {
    return (fs::path(config.run.output_dir) / name).string();
}

std::vector<EventInterval> load_configured_events(const PipelineConfig& config) {
    if (config.ingest.events_file.empty()) return {};
    return load_events_csv(config.ingest.events_file);
}

// Evenly spaced decision criteria over the finite score range.
std::vector<double> sweep_thresholds(const DeviationSeries& scores, std::size_t count) {
    std::vector<double> finite;
    for (const auto& e : scores.entries) {
        if (!e.sentinel && std::isfinite(e.score)) finite.push_back(e.score);
    }
    if (finite.empty()) return {};
    const auto [lo, hi] = std::minmax_element(finite.begin(), finite.end());
    std::vector<double> thresholds;
    if (*lo == *hi || count <= 1) {
        thresholds.push_back(*lo);
        return thresholds;
    }
    for (std::size_t i = 0; i < count; ++i) {
        thresholds.push_back(*lo + (*hi - *lo) * static_cast<double>(i) /
                                       static_cast<double>(count - 1));
    }
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    return thresholds;
}

const std::vector<Window>& voting_windows(const PreparedData& data) {
    if (data.windows_per_spec.size() != 1) {
        throw std::runtime_error(
            "alert voting needs a single window spec; scores merged across specs have no "
            "per-window representative");
    }
    return data.windows_per_spec.front();
}

int cmd_score(const PipelineConfig& config) {
    PreparedData data = prepare_data(config);
    ScoringStats stats;
    DeviationSeries scores = compute_scores(data, config, &stats);
    write_scores_csv(out_path(config, "scores.csv"), scores);

    if (config.deviation.explain_top > 0) {
        const auto& windows = voting_windows(data);
        DistanceSpec dist = config.distance;
        if (!config.importance_file.empty()) {
            dist.importance = load_importance_csv(config.importance_file);
        }
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < scores.entries.size(); ++i) {
            if (!scores.entries[i].sentinel) order.push_back(i);
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores.entries[a].score != scores.entries[b].score) {
                return scores.entries[a].score > scores.entries[b].score;
            }
            return a < b;
        });
        if (order.size() > config.deviation.explain_top) {
            order.resize(config.deviation.explain_top);
        }
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const auto& entry = scores.entries[order[rank]];
            char name[64];
            std::snprintf(name, sizeof(name), "explain_%03zu", rank);
            write_explanation_pair(out_path(config, std::string(name) + "_target.csv"),
                                   out_path(config, std::string(name) + "_match.csv"),
                                   windows[order[rank]], windows[*entry.best_match], dist);
        }
    }
    return 0;
}

DeviationSeries load_scores(const PipelineConfig& config) {
    const std::string path = config.alerting.scores_file.empty()
                                 ? out_path(config, "scores.csv")
                                 : config.alerting.scores_file;
    return read_scores_csv(path, config.distance.measure);
}

int cmd_alerts(const PipelineConfig& config) {
    DeviationSeries scores = load_scores(config);
    const double threshold = resolve_threshold(scores, config);
    const auto alerts =
        extract_alerts(scores, threshold, seconds(config.alerting.merge_gap_seconds));
    write_registry_jsonl(out_path(config, "alerts.jsonl"), alerts);
    return 0;
}

std::vector<Alert> load_registry(const PipelineConfig& config) {
    const std::string path = config.alerting.registry_file.empty()
                                 ? out_path(config, "alerts.jsonl")
                                 : config.alerting.registry_file;
    return read_registry_jsonl(path);
}

int cmd_vote(const PipelineConfig& config) {
    std::vector<Alert> alerts = load_registry(config);
    PreparedData data = prepare_data(config);
    DistanceSpec dist = config.distance;
    if (!config.importance_file.empty()) {
        dist.importance = load_importance_csv(config.importance_file);
    }
    auto outcome = label_and_filter(std::move(alerts), voting_windows(data), dist, config,
                                    load_configured_events(config));
    write_registry_jsonl(out_path(config, "labeled.jsonl"), outcome.labeled);
    write_registry_jsonl(out_path(config, "emitted.jsonl"), outcome.emitted);
    write_registry_jsonl(out_path(config, "suppressed.jsonl"), outcome.suppressed);
    return 0;
}

int cmd_eval(const PipelineConfig& config) {
    const std::vector<EventInterval> events = load_configured_events(config);
    const Duration lead = seconds(config.evaluation.lead_seconds);

    std::vector<Alert> alerts = load_registry(config);
    EvalReport all = evaluate(alerts, events, lead);
    std::optional<EvalReport> filtered;
    const bool all_labeled =
        !alerts.empty() && std::all_of(alerts.begin(), alerts.end(),
                                       [](const Alert& a) { return a.label.has_value(); });
    if (all_labeled) {
        filtered = evaluate(filter_alerts(alerts).emitted, events, lead);
    }
    write_report_json(out_path(config, "eval.json"), all, filtered);

    DeviationSeries scores = load_scores(config);
    const auto thresholds = sweep_thresholds(scores, config.evaluation.sweep_thresholds);
    if (!thresholds.empty()) {
        const auto sweep = threshold_sweep(scores, events, thresholds,
                                           seconds(config.alerting.merge_gap_seconds), lead);
        write_sweep_csv(out_path(config, "curves.csv"), sweep);
    }
    return 0;
}

int cmd_scatter(const PipelineConfig& config) {
    if (config.evaluation.scatter_file_a.empty() || config.evaluation.scatter_file_b.empty()) {
        fail("evaluation.scatter_file_a", "scatter needs two score files");
    }
    const auto a = read_score_points_csv(config.evaluation.scatter_file_a);
    const auto b = read_score_points_csv(config.evaluation.scatter_file_b);
    const auto events = load_configured_events(config);
    const RiskScatter scatter = risk_scatter(a, b, events);
    write_scatter_csv(out_path(config, "scatter.csv"), scatter);

    json summary;
    summary["records"] = scatter.records.size();
    summary["in_event_records"] = scatter.in_event_percentile_b.size();
    summary["upper_half_fraction_a"] =
        scatter.upper_half_fraction_a ? json(*scatter.upper_half_fraction_a) : json(nullptr);
    summary["upper_half_fraction_b"] =
        scatter.upper_half_fraction_b ? json(*scatter.upper_half_fraction_b) : json(nullptr);
    std::ofstream out(out_path(config, "scatter_summary.json"));
    out << summary.dump(2) << '\n';
    return 0;
}

int cmd_modes(const PipelineConfig& config) {
    if (config.modes.block_seconds <= 0) fail("modes.block_seconds", "must be > 0");
    PreparedData data = prepare_data(config);
    const auto& windows = data.windows_per_spec.front();
    DistanceSpec dist = config.distance;
    if (!config.importance_file.empty()) {
        dist.importance = load_importance_csv(config.importance_file);
    }
    const PatternCodebook codebook = build_codebook(windows, dist, config.modes.radius);
    const auto frequencies =
        word_frequencies(windows, codebook, seconds(config.modes.block_seconds));
    write_frequencies_csv(out_path(config, "frequencies.csv"), frequencies);
    const ModeAssignment modes = assign_modes(frequencies, config.modes.k, config.run.seed);
    write_modes_csv(out_path(config, "modes.csv"), modes);
    return 0;
}

std::vector<std::string> dimension_names(const TuningSpace& space) {
    std::vector<std::string> names;
    names.reserve(space.dimensions.size());
    for (const auto& d : space.dimensions) names.push_back(d.name);
    return names;
}

int cmd_tune(const PipelineConfig& config) {
    if (config.ingest.events_file.empty()) {
        fail("ingest.events_file", "tuning needs recorded events to score against");
    }
    if (config.tuning.space.dimensions.empty()) {
        fail("tuning.dimensions", "no tuning dimensions configured");
    }
    TuningSpace space = config.tuning.space;
    try {
        space.validate();
    } catch (const std::exception& e) {
        fail("tuning", e.what());
    }
    for (const auto& dim : space.dimensions) {
        static const std::set<std::string> known{"T_anom", "k", "t_cutoff", "smoothing_length",
                                                 "window_length"};
        if (!known.count(dim.name)) {
            fail("tuning.dimensions", "'" + dim.name +
                                          "' does not bind to a pipeline parameter; expected "
                                          "T_anom, k, t_cutoff, smoothing_length or window_length");
        }
    }

    const auto events = load_configured_events(config);
    const auto names = dimension_names(space);
    ObjectiveFn objective = [&](const std::vector<double>& params) {
        return pipeline_objective(config, events, names, params);
    };

    OptimizationResult result;
    if (config.tuning.use_grid) {
        std::vector<std::size_t> resolution = config.tuning.grid_resolution;
        if (resolution.empty()) resolution.assign(space.dimensions.size(), 10);
        if (resolution.size() != space.dimensions.size()) {
            fail("tuning.grid_resolution", "needs one entry per dimension");
        }
        result = grid_search(space, resolution, objective);
        write_trace_csv(out_path(config, "surface.csv"), space, result);
    } else {
        result = gp_optimize(space, objective);
        write_trace_csv(out_path(config, "trace.csv"), space, result);
    }

    // Incumbent parameters as a config overlay, threshold included so a
    // plain pipeline run reproduces the tuned operating point.
    json overlay;
    overlay["config_version"] = 1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = result.best_params[i];
        if (names[i] == "T_anom") {
            overlay["alerting"]["T_anom"] = v;
        } else if (names[i] == "k") {
            overlay["alerting"]["k"] = static_cast<std::size_t>(v);
        } else if (names[i] == "t_cutoff") {
            overlay["alerting"]["t_cutoff"] = v;
        } else if (names[i] == "smoothing_length") {
            overlay["smoothing"]["kernel_length"] = static_cast<std::size_t>(v);
        } else if (names[i] == "window_length") {
            overlay["windowing"]["length"] = static_cast<std::size_t>(v);
        } else {
            overlay["tuning_unbound"][names[i]] = v;
        }
    }
    overlay["alerting"]["threshold"] = result.best_value.at_threshold;
    std::ofstream out(out_path(config, "tuned_overlay.json"));
    out << overlay.dump(2) << '\n';
    return 0;
}

int cmd_pipeline(const PipelineConfig& config) {
    PreparedData data = prepare_data(config);
    ScoringStats stats;
    DeviationSeries scores = compute_scores(data, config, &stats);
    write_scores_csv(out_path(config, "scores.csv"), scores);

    const double threshold = resolve_threshold(scores, config);
    std::vector<Alert> alerts =
        extract_alerts(scores, threshold, seconds(config.alerting.merge_gap_seconds));
    write_registry_jsonl(out_path(config, "alerts.jsonl"), alerts);

    DistanceSpec dist = config.distance;
    if (!config.importance_file.empty()) {
        dist.importance = load_importance_csv(config.importance_file);
    }
    const auto events = load_configured_events(config);
    auto outcome =
        label_and_filter(std::move(alerts), voting_windows(data), dist, config, events);
    write_registry_jsonl(out_path(config, "labeled.jsonl"), outcome.labeled);
    write_registry_jsonl(out_path(config, "emitted.jsonl"), outcome.emitted);
    write_registry_jsonl(out_path(config, "suppressed.jsonl"), outcome.suppressed);

    const Duration lead = seconds(config.evaluation.lead_seconds);
    EvalReport all = evaluate(outcome.labeled, events, lead);
    EvalReport filtered = evaluate(outcome.emitted, events, lead);
    write_report_json(out_path(config, "eval.json"), all, filtered);

    const auto thresholds = sweep_thresholds(scores, config.evaluation.sweep_thresholds);
    if (!thresholds.empty()) {
        const auto sweep = threshold_sweep(scores, events, thresholds,
                                           seconds(config.alerting.merge_gap_seconds), lead);
        write_sweep_csv(out_path(config, "curves.csv"), sweep);
    }
    return 0;
}

}  // namespace

LabelingOutcome label_and_filter(std::vector<Alert> alerts, const std::vector<Window>& windows,
                                 const DistanceSpec& dist, const PipelineConfig& config,
                                 const std::vector<EventInterval>& events) {
    if (!config.alerting.seed_labels_file.empty()) {
        apply_seed_labels_csv(config.alerting.seed_labels_file, alerts, false);
    } else if (config.alerting.ground_truth_seed_fraction > 0 && !events.empty()) {
        const Duration lead = seconds(config.evaluation.lead_seconds);
        const auto seed_count =
            static_cast<std::size_t>(std::ceil(config.alerting.ground_truth_seed_fraction *
                                               static_cast<double>(alerts.size())));
        for (std::size_t i = 0; i < seed_count && i < alerts.size(); ++i) {
            bool overlaps = false;
            for (const auto& event : events) {
                if (intervals_overlap(alerts[i].start, alerts[i].end, event.start - lead,
                                      event.end)) {
                    overlaps = true;
                    break;
                }
            }
            alerts[i].label = overlaps ? AlertLabel::true_positive : AlertLabel::false_positive;
            alerts[i].label_source = LabelSource::human;
        }
    }

    std::vector<Alert> seed, unlabeled;
    for (const auto& a : alerts) {
        (a.label ? seed : unlabeled).push_back(a);
    }
    std::vector<Alert> labeled = bootstrap_labels(seed, unlabeled, windows, dist,
                                                  config.alerting.voting);

    std::vector<Alert> all = seed;
    all.insert(all.end(), labeled.begin(), labeled.end());
    std::sort(all.begin(), all.end(),
              [](const Alert& a, const Alert& b) { return a.start < b.start; });
    FilterResult filtered = filter_alerts(all);

    LabelingOutcome outcome;
    outcome.labeled = std::move(all);
    outcome.emitted = std::move(filtered.emitted);
    outcome.suppressed = std::move(filtered.suppressed);
    return outcome;
}

ObjectiveValue pipeline_objective(const PipelineConfig& base,
                                  const std::vector<EventInterval>& events,
                                  const std::vector<std::string>& names,
                                  const std::vector<double>& params) {
    ObjectiveValue best;
    try {
        PipelineConfig cfg = base;
        for (std::size_t i = 0; i < names.size(); ++i) {
            const double v = params[i];
            if (names[i] == "T_anom") {
                cfg.alerting.voting.T_anom = v;
            } else if (names[i] == "k") {
                cfg.alerting.voting.k = static_cast<std::size_t>(std::llround(v));
            } else if (names[i] == "t_cutoff") {
                cfg.alerting.voting.t_cutoff = v;
            } else if (names[i] == "smoothing_length") {
                auto n = static_cast<std::size_t>(std::llround(v));
                cfg.smoothing.kernel_length = n % 2 == 0 ? n + 1 : n;  // kernels must be odd
            } else if (names[i] == "window_length") {
                for (auto& spec : cfg.window_specs) {
                    spec.length = static_cast<std::size_t>(std::llround(v));
                }
            } else {
                throw std::invalid_argument("unknown tuning dimension '" + names[i] +
                                            "'; expected one of T_anom, k, t_cutoff, "
                                            "smoothing_length, window_length");
            }
        }
        cfg.alerting.voting.min_votes = std::min(cfg.alerting.voting.min_votes,
                                                 cfg.alerting.voting.k);
        cfg.alerting.voting.validate();

        PreparedData data = prepare_data(cfg);
        DeviationSeries scores = compute_scores(data, cfg, nullptr);
        const auto& windows = voting_windows(data);
        DistanceSpec dist = cfg.distance;
        if (!cfg.importance_file.empty()) dist.importance = load_importance_csv(cfg.importance_file);

        const Duration lead = seconds(cfg.evaluation.lead_seconds);
        const Duration merge_gap = seconds(cfg.alerting.merge_gap_seconds);

        for (double threshold : sweep_thresholds(scores, cfg.tuning.sweep_points)) {
            std::vector<Alert> alerts = extract_alerts(scores, threshold, merge_gap);
            if (alerts.empty()) continue;
            auto outcome = label_and_filter(std::move(alerts), windows, dist, cfg, events);
            const EvalReport report = evaluate(outcome.emitted, events, lead);
            const double recall = report.event_recall.value_or(0.0);
            const double fpr = report.alert_fpr.value_or(0.0);
            const double value = recall_fpr_ratio(recall, fpr, report.counts.alerts_total);
            if (value > best.value) {
                best.value = value;
                best.at_threshold = threshold;
                best.components = {recall, fpr};
            }
        }
    } catch (const std::exception& e) {
        ObjectiveValue failed;
        failed.diagnostic = e.what();
        return failed;
    }
    return best;
}

int run_subcommand(const std::string& name, const PipelineConfig& config) {
    std::filesystem::create_directories(config.run.output_dir);
    if (name == "score") return cmd_score(config);
    if (name == "alerts") return cmd_alerts(config);
    if (name == "vote") return cmd_vote(config);
    if (name == "eval") return cmd_eval(config);
    if (name == "scatter") return cmd_scatter(config);
    if (name == "tune") return cmd_tune(config);
    if (name == "modes") return cmd_modes(config);
    if (name == "pipeline") return cmd_pipeline(config);
    throw std::invalid_argument("unknown subcommand '" + name + "'");
}

}  // namespace tdev

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <sys/wait.h>

#include "tdev/csv.hpp"
#include "tdev/pipeline.hpp"
#include "test_helpers.hpp"

using namespace tdev;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Periodic two-feature series with one injected burst, plus the event file
// marking the burst.
void write_synthetic(const TempDir& dir, std::size_t rows = 480, std::size_t burst_at = 300,
                     std::size_t burst_len = 24) {
    std::ofstream data(dir.file("data.csv"));
    data << "timestamp,temp,pressure\n";
    for (std::size_t i = 0; i < rows; ++i) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % 24) / 24.0;
        double temp = std::sin(phase);
        double pressure = std::cos(phase) * 2.0;
        if (i >= burst_at && i < burst_at + burst_len) {
            temp += 5.0;
            pressure -= 5.0;
        }
        data << i * 60 << ',' << temp << ',' << pressure << '\n';
    }
    std::ofstream events(dir.file("events.csv"));
    events << "start,end\n" << burst_at * 60 << ',' << (burst_at + burst_len - 1) * 60 << '\n';
}

std::string base_config(const TempDir& dir, const std::string& out_name = "out") {
    std::ostringstream cfg;
    cfg << R"({
  "config_version": 1,
  "run": {"seed": 11, "output_dir": ")"
        << dir.file(out_name) << R"("},
  "ingest": {"input": ")"
        << dir.file("data.csv") << R"(", "events_file": ")" << dir.file("events.csv") << R"("},
  "normalize": {"enabled": true, "training_prefix_fraction": 0.5},
  "smoothing": {"kernel_length": 5},
  "windowing": {"length": 24, "stride": 12},
  "distance": {"measure": "euclid"},
  "alerting": {"threshold_quantile": 0.9, "t_cutoff": 1.0, "k": 3, "T_anom": 0.5,
               "ground_truth_seed_fraction": 0.5},
  "evaluation": {"lead_seconds": 120}
})";
    return cfg.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
    TempDir dir("tdev_cfg_test");
    write_synthetic(dir);

    SUBCASE("valid config round-trips defaults") {
        const auto cfg = config_from_json_text(base_config(dir));
        CHECK(cfg.run.seed == 11);
        CHECK(cfg.smoothing.kernel_length == 5);
        CHECK(cfg.window_specs.size() == 1);
        CHECK(cfg.window_specs[0].length == 24);
        CHECK(cfg.distance.measure == Measure::euclidean_slide);
        CHECK(cfg.alerting.voting.k == 3);
    }
    SUBCASE("invalid JSON names the config") {
        CHECK_THROWS_AS(config_from_json_text("{nope"), ConfigError);
    }
    SUBCASE("missing config_version") {
        try {
            config_from_json_text(R"({"run": {}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key == "config_version");
        }
    }
    SUBCASE("unknown keys carry their path") {
        try {
            config_from_json_text(R"({"config_version": 1, "alerting": {"tanom": 0.5}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key == "alerting.tanom");
        }
    }
    SUBCASE("bad enum values carry their path") {
        try {
            config_from_json_text(R"({"config_version": 1, "distance": {"measure": "cosine"}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key == "distance.measure");
        }
    }
    SUBCASE("referenced files must exist") {
        try {
            config_from_json_text(
                R"({"config_version": 1, "ingest": {"input": "/definitely/not/here.csv"}})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.key == "ingest.input");
        }
    }
    SUBCASE("even kernel length is rejected") {
        CHECK_THROWS_AS(
            config_from_json_text(R"({"config_version": 1, "smoothing": {"kernel_length": 4}})"),
            ConfigError);
    }
    SUBCASE("overrides rewrite nested keys") {
        const auto cfg = config_from_json_text(base_config(dir),
                                               {"alerting.k=5", "smoothing.kernel_length=7"});
        CHECK(cfg.alerting.voting.k == 5);
        CHECK(cfg.smoothing.kernel_length == 7);
    }
    SUBCASE("multiple window specs parse") {
        const std::string cfg_text = R"({
          "config_version": 1,
          "windowing": {"specs": [{"length": 16, "stride": 8}, {"length": 32, "stride": 16}]}
        })";
        const auto cfg = config_from_json_text(cfg_text);
        REQUIRE(cfg.window_specs.size() == 2);
        CHECK(cfg.window_specs[0].id == "w0");
        CHECK(cfg.window_specs[1].length == 32);
    }
}

TEST_CASE("score produces one row per window") {
    TempDir dir("tdev_score_test");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(base_config(dir));
    CHECK(run_subcommand("score", cfg) == 0);

    const auto table = read_csv(dir.file("out/scores.csv"));
    // 480 rows, length 24, stride 12 -> floor((480-24)/12)+1 = 39 windows.
    CHECK(table.rows.size() == 39);
    CHECK(table.header ==
          std::vector<std::string>{"timestamp", "score", "best_match_timestamp"});
}

TEST_CASE("multiple window specs score on the merged time grid") {
    TempDir dir("tdev_multispec_test");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(
        base_config(dir), {"windowing={\"specs\":[{\"length\":16,\"stride\":8},"
                           "{\"length\":32,\"stride\":16}]}"});
    REQUIRE(cfg.window_specs.size() == 2);
    CHECK(run_subcommand("score", cfg) == 0);
    // Union of origin timestamps: spec 0 contributes 59 origins which
    // already cover spec 1's 29.
    CHECK(read_csv(dir.file("out/scores.csv")).rows.size() == 59);

    // Alert voting has no per-window representative on a merged series.
    CHECK(run_subcommand("alerts", cfg) == 0);
    CHECK_THROWS_WITH_AS(run_subcommand("vote", cfg), doctest::Contains("single window spec"),
                         std::runtime_error);
}

TEST_CASE("resampling slots into the pipeline before normalization") {
    TempDir dir("tdev_resample_test");
    write_synthetic(dir);
    // Native spacing is 60s; a 120s grid halves the rows: 240 rows ->
    // floor((240-24)/12)+1 = 19 windows.
    const auto cfg =
        config_from_json_text(base_config(dir), {"ingest.resample_period_seconds=120"});
    CHECK(run_subcommand("score", cfg) == 0);
    CHECK(read_csv(dir.file("out/scores.csv")).rows.size() == 19);
}

TEST_CASE("external importance vectors drive top-k selection in the pipeline") {
    TempDir dir("tdev_importance_test");
    write_synthetic(dir);
    std::ofstream(dir.file("importance.csv")) << "feature,weight\ntemp,1.0\npressure,0.2\n";
    const auto cfg = config_from_json_text(
        base_config(dir),
        {"distance.feature_relevance=external_importance_vector",
         "distance.importance_file=" + dir.file("importance.csv"),
         "distance.top_k_features=1"});
    CHECK(run_subcommand("score", cfg) == 0);
    CHECK(read_csv(dir.file("out/scores.csv")).rows.size() == 39);

    // The importance file is required once the external ranking is chosen.
    CHECK_THROWS_AS(config_from_json_text(
                        base_config(dir),
                        {"distance.feature_relevance=external_importance_vector"}),
                    ConfigError);
}

TEST_CASE("pipeline with threshold above all scores reports zero alerts") {
    TempDir dir("tdev_nothing_test");
    write_synthetic(dir);
    // xcorr scores (sentinel included) never exceed +1, so 2.0 clears them all.
    const auto cfg = config_from_json_text(
        base_config(dir), {"distance.measure=xcorr", "alerting.threshold=2.0"});
    CHECK(run_subcommand("pipeline", cfg) == 0);
    const std::string eval = slurp(dir.file("out/eval.json"));
    CHECK(eval.find("\"alerts_total\": 0") != std::string::npos);
}

TEST_CASE("pipeline detects the injected burst") {
    TempDir dir("tdev_detect_test");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(base_config(dir));
    CHECK(run_subcommand("pipeline", cfg) == 0);
    const std::string eval = slurp(dir.file("out/eval.json"));
    CHECK(eval.find("\"events_recalled\": 1") != std::string::npos);
}

TEST_CASE("pipeline equals the composition of its subcommands") {
    TempDir dir("tdev_compose_test");
    write_synthetic(dir);

    const auto pipeline_cfg = config_from_json_text(base_config(dir, "whole"));
    REQUIRE(run_subcommand("pipeline", pipeline_cfg) == 0);

    const auto staged_cfg = config_from_json_text(base_config(dir, "staged"));
    REQUIRE(run_subcommand("score", staged_cfg) == 0);
    REQUIRE(run_subcommand("alerts", staged_cfg) == 0);
    REQUIRE(run_subcommand("vote", staged_cfg) == 0);
    const auto eval_cfg = config_from_json_text(
        base_config(dir, "staged"),
        {"alerting.registry_file=" + dir.file("staged/labeled.jsonl")});
    REQUIRE(run_subcommand("eval", eval_cfg) == 0);

    for (const char* name : {"scores.csv", "alerts.jsonl", "labeled.jsonl", "emitted.jsonl",
                             "suppressed.jsonl", "eval.json", "curves.csv"}) {
        CAPTURE(name);
        CHECK(slurp(dir.file(std::string("whole/") + name)) ==
              slurp(dir.file(std::string("staged/") + name)));
    }
}

TEST_CASE("identical config and seed give byte-identical artifacts") {
    TempDir dir("tdev_determinism_test");
    write_synthetic(dir);
    const auto cfg_a = config_from_json_text(base_config(dir, "run_a"));
    const auto cfg_b = config_from_json_text(base_config(dir, "run_b"));
    REQUIRE(run_subcommand("pipeline", cfg_a) == 0);
    REQUIRE(run_subcommand("pipeline", cfg_b) == 0);

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir.file("run_a"))) {
        const auto name = entry.path().filename().string();
        CAPTURE(name);
        CHECK(slurp(entry.path().string()) == slurp(dir.file("run_b/" + name)));
        ++compared;
    }
    CHECK(compared >= 6);
}

TEST_CASE("modes subcommand writes frequency and mode maps") {
    TempDir dir("tdev_modes_test");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(
        base_config(dir), {"modes.block_seconds=2880", "modes.k=2", "modes.radius=0.8"});
    CHECK(run_subcommand("modes", cfg) == 0);
    const auto freq = read_csv(dir.file("out/frequencies.csv"));
    CHECK(!freq.rows.empty());
    const auto modes = read_csv(dir.file("out/modes.csv"));
    CHECK(modes.header == std::vector<std::string>{"block_start", "block_end", "cluster"});
    CHECK(modes.rows.size() == freq.rows.size());
}

TEST_CASE("scatter subcommand joins two score files") {
    TempDir dir("tdev_scatter_test");
    write_synthetic(dir);
    const auto score_cfg = config_from_json_text(base_config(dir));
    REQUIRE(run_subcommand("score", score_cfg) == 0);

    const auto cfg = config_from_json_text(
        base_config(dir), {"evaluation.scatter_file_a=" + dir.file("out/scores.csv"),
                           "evaluation.scatter_file_b=" + dir.file("out/scores.csv")});
    CHECK(run_subcommand("scatter", cfg) == 0);
    const auto table = read_csv(dir.file("out/scatter.csv"));
    CHECK(!table.rows.empty());
    for (const auto& row : table.rows) CHECK(row[1] == row[2]);  // identical series
}

TEST_CASE("pipeline objective is deterministic and fails soft") {
    TempDir dir("tdev_objective_test");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(base_config(dir));
    const auto events = load_events_csv(dir.file("events.csv"));

    const auto a = pipeline_objective(cfg, events, {"T_anom", "k"}, {0.5, 3});
    const auto b = pipeline_objective(cfg, events, {"T_anom", "k"}, {0.5, 3});
    CHECK(a.value == b.value);
    CHECK(a.at_threshold == b.at_threshold);
    CHECK(a.value > 0.0);
    CHECK(a.components.event_recall > 0.0);

    // Unknown dimension: value 0 plus a diagnostic, no exception.
    const auto bad = pipeline_objective(cfg, events, {"nonsense"}, {1.0});
    CHECK(bad.value == 0.0);
    CHECK(!bad.diagnostic.empty());

    // Events nothing can overlap: zero recall at every criterion, value 0.
    const std::vector<EventInterval> unreachable{
        {seconds(1e9), seconds(1e9 + 60), EventInterval::Source::human_annotation}};
    const auto hopeless = pipeline_objective(cfg, unreachable, {"T_anom", "k"}, {0.5, 3});
    CHECK(hopeless.value == 0.0);
}

TEST_CASE("objective value reruns exactly under the incumbent parameters") {
    TempDir dir("tdev_tune_roundtrip");
    write_synthetic(dir);
    const std::string tune_overrides = R"({
      "dimensions": [
        {"name": "T_anom", "kind": "continuous", "lo": 0.1, "hi": 0.9},
        {"name": "k", "kind": "integer", "lo": 1, "hi": 4}
      ],
      "budget": 8, "sweep_points": 8
    })";
    const auto cfg = config_from_json_text(base_config(dir), {"tuning=" + tune_overrides});
    CHECK(run_subcommand("tune", cfg) == 0);
    CHECK(fs::exists(dir.file("out/trace.csv")));
    CHECK(fs::exists(dir.file("out/tuned_overlay.json")));

    // The trace's best row must reproduce when the objective is re-evaluated.
    const auto events = load_events_csv(dir.file("events.csv"));
    const auto trace = read_csv(dir.file("out/trace.csv"));
    REQUIRE(!trace.rows.empty());
    double best_value = -1.0;
    std::vector<double> best_params;
    for (const auto& row : trace.rows) {
        const double value = std::strtod(row[2].c_str(), nullptr);
        if (value > best_value) {
            best_value = value;
            best_params = {std::strtod(row[0].c_str(), nullptr),
                           std::strtod(row[1].c_str(), nullptr)};
        }
    }
    const auto rerun = pipeline_objective(cfg, events, {"T_anom", "k"}, best_params);
    CHECK(rerun.value == best_value);
}

TEST_CASE("unknown subcommand is rejected") {
    TempDir dir("tdev_unknown_cmd");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(base_config(dir));
    CHECK_THROWS_AS(run_subcommand("frobnicate", cfg), std::invalid_argument);
}

TEST_CASE("score emits explanation pairs for the top windows") {
    TempDir dir("tdev_explain_cli");
    write_synthetic(dir);
    const auto cfg = config_from_json_text(base_config(dir), {"deviation.explain_top=2"});
    CHECK(run_subcommand("score", cfg) == 0);
    CHECK(fs::exists(dir.file("out/explain_000_target.csv")));
    CHECK(fs::exists(dir.file("out/explain_000_match.csv")));
    CHECK(fs::exists(dir.file("out/explain_001_target.csv")));
    const auto target = read_csv(dir.file("out/explain_000_target.csv"));
    CHECK(target.rows.size() == 24);  // one row per window sample
}

#ifdef TDEV_CLI_PATH

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TDEV_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string run_cli_stderr(const TempDir& dir, const std::string& args) {
    const std::string err_file = dir.file("stderr.txt");
    const std::string cmd =
        std::string(TDEV_CLI_PATH) + " " + args + " >/dev/null 2>" + err_file;
    [[maybe_unused]] const int status = std::system(cmd.c_str());
    return slurp(err_file);
}

}  // namespace

TEST_CASE("CLI exit codes distinguish config errors from data errors") {
    TempDir dir("tdev_cli_exit");
    write_synthetic(dir);
    {
        std::ofstream cfg(dir.file("config.json"));
        cfg << base_config(dir);
    }

    SUBCASE("success is exit 0") {
        CHECK(run_cli("--config " + dir.file("config.json") + " score") == 0);
    }
    SUBCASE("invalid config key is exit 2 with the key path on stderr") {
        CHECK(run_cli("--config " + dir.file("config.json") +
                      " score --set alerting.nonsense=1") == 2);
        const std::string err = run_cli_stderr(
            dir, "--config " + dir.file("config.json") + " score --set alerting.nonsense=1");
        CHECK(err.find("alerting.nonsense") != std::string::npos);
    }
    SUBCASE("data errors are exit 1 with a machine-readable record") {
        // alerts without a scores file to read
        const std::string err =
            run_cli_stderr(dir, "--config " + dir.file("config.json") + " alerts");
        CHECK(run_cli("--config " + dir.file("config.json") + " alerts") == 1);
        CHECK(err.find("\"error\"") != std::string::npos);
    }
    SUBCASE("flags override config keys") {
        CHECK(run_cli("--config " + dir.file("config.json") +
                      " score --smooth-length 4") == 2);  // even kernel rejected
        CHECK(run_cli("--config " + dir.file("config.json") +
                      " score --window-length 16 --stride 8 --distance dtw") == 0);
    }
}

TEST_CASE("tune then pipeline with the emitted overlay reproduces the incumbent") {
    TempDir dir("tdev_cli_overlay");
    write_synthetic(dir);
    {
        std::ofstream cfg(dir.file("config.json"));
        cfg << base_config(dir);
    }
    const std::string tuning_json =
        R"('{"dimensions":[{"name":"T_anom","kind":"continuous","lo":0.1,"hi":0.9},)"
        R"({"name":"k","kind":"integer","lo":1,"hi":4}],"budget":8,"sweep_points":8}')";
    REQUIRE(run_cli("--config " + dir.file("config.json") + " tune --set tuning=" +
                    tuning_json) == 0);
    REQUIRE(fs::exists(dir.file("out/tuned_overlay.json")));

    REQUIRE(run_cli("--config " + dir.file("config.json") + " pipeline --overlay " +
                    dir.file("out/tuned_overlay.json") + " --output-dir " +
                    dir.file("tuned")) == 0);

    // Recompute the objective's ratio from the tuned run's filtered report.
    std::ifstream eval_in(dir.file("tuned/eval.json"));
    REQUIRE(eval_in);
    nlohmann::json eval = nlohmann::json::parse(eval_in);
    const auto& counts = eval.at("filtered").at("counts");
    const double recall = eval.at("filtered").at("event_recall").get<double>();
    const std::size_t alerts_total = counts.at("alerts_total").get<std::size_t>();
    const double fpr = alerts_total == 0
                           ? 0.0
                           : eval.at("filtered").at("alert_fpr").get<double>();
    const double reproduced = recall_fpr_ratio(recall, fpr, alerts_total);

    double incumbent = -1.0;
    const auto trace = read_csv(dir.file("out/trace.csv"));
    for (const auto& row : trace.rows) {
        incumbent = std::max(incumbent, std::strtod(row[2].c_str(), nullptr));
    }
    CHECK(reproduced == incumbent);
}

#endif  // TDEV_CLI_PATH

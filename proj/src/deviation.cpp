#include "tdev/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "tdev/csv.hpp"

namespace tdev {

namespace {

void score_one_target(std::size_t i, const std::vector<Window>& windows, const DistanceSpec& spec,
                      std::optional<std::size_t> history_depth, bool pruned, ScoreEntry& out,
                      ScoringStats& stats) {
    const Window& target = windows[i];
    out.timestamp = target.start_ts();
    out.spec_id = target.spec_id();

    auto [first, last] = preceding_range(target, windows, history_depth);
    if (first == last) {
        out.score = spec.sentinel_score();
        out.sentinel = true;
        return;
    }

    const double inf = std::numeric_limits<double>::infinity();
    double best = inf;
    std::size_t best_idx = last;
    for (std::size_t j = first; j < last; ++j) {
        ++stats.distance_evaluations;
        double d;
        if (spec.measure == Measure::euclidean_slide) {
            auto dims = detail::resolve_dims(target, windows[j], spec);
            d = detail::euclid_pruned(target, windows[j], dims, spec, pruned, best,
                                      &stats.scalar_ops);
            if (pruned && std::isinf(d) && d > 0) {
                ++stats.candidates_abandoned;
                continue;
            }
        } else {
            d = window_distance(target, windows[j], spec);
        }
        if (d < best) {
            best = d;
            best_idx = j;
        }
    }
    out.score = best;
    out.sentinel = false;
    out.best_match = best_idx;
    out.best_match_ts = windows[best_idx].start_ts();
}

DeviationSeries score_impl(const DeviationSeries* prefix, const std::vector<Window>& windows,
                           const DistanceSpec& spec, std::optional<std::size_t> history_depth,
                           bool pruned, ScoringStats* stats, std::size_t workers) {
    spec.validate();
    if (windows.empty()) throw std::invalid_argument("cannot score an empty window list");
    for (std::size_t i = 1; i < windows.size(); ++i) {
        if (windows[i].origin() < windows[i - 1].origin()) {
            throw std::invalid_argument("windows must be sorted by origin");
        }
    }

    DeviationSeries series;
    series.measure = spec.measure;
    std::size_t start = 0;
    if (prefix) {
        if (prefix->entries.size() > windows.size()) {
            throw std::invalid_argument("scored prefix is longer than the window list");
        }
        if (!prefix->entries.empty() && prefix->measure != spec.measure) {
            throw std::invalid_argument("scored prefix uses a different measure");
        }
        for (std::size_t i = 0; i < prefix->entries.size(); ++i) {
            if (prefix->entries[i].timestamp != windows[i].start_ts()) {
                throw std::invalid_argument("scored prefix does not match the window list at " +
                                            format_timestamp(windows[i].start_ts()));
            }
        }
        series.entries = prefix->entries;
        start = prefix->entries.size();
    }

    const std::size_t count = windows.size() - start;
    std::vector<ScoreEntry> fresh(count);
    if (workers <= 1 || count < 2) {
        ScoringStats local;
        for (std::size_t i = 0; i < count; ++i) {
            score_one_target(start + i, windows, spec, history_depth, pruned, fresh[i], local);
        }
        if (stats) {
            stats->distance_evaluations += local.distance_evaluations;
            stats->scalar_ops += local.scalar_ops;
            stats->candidates_abandoned += local.candidates_abandoned;
        }
    } else {
        const std::size_t n_threads = std::min(workers, count);
        std::vector<ScoringStats> per_thread(n_threads);
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            threads.emplace_back([&, t]() {
                for (std::size_t i = t; i < count; i += n_threads) {
                    score_one_target(start + i, windows, spec, history_depth, pruned, fresh[i],
                                     per_thread[t]);
                }
            });
        }
        for (auto& th : threads) th.join();
        if (stats) {
            for (const auto& s : per_thread) {
                stats->distance_evaluations += s.distance_evaluations;
                stats->scalar_ops += s.scalar_ops;
                stats->candidates_abandoned += s.candidates_abandoned;
            }
        }
    }
    series.entries.insert(series.entries.end(), fresh.begin(), fresh.end());
    return series;
}

}  // namespace

DeviationSeries score_windows(const std::vector<Window>& windows, const DistanceSpec& spec,
                              std::optional<std::size_t> history_depth, ScoringStats* stats,
                              std::size_t workers) {
    return score_impl(nullptr, windows, spec, history_depth, false, stats, workers);
}

DeviationSeries score_windows_pruned(const std::vector<Window>& windows, const DistanceSpec& spec,
                                     std::optional<std::size_t> history_depth, ScoringStats* stats,
                                     std::size_t workers) {
    const bool prune = spec.measure == Measure::euclidean_slide;
    return score_impl(nullptr, windows, spec, history_depth, prune, stats, workers);
}

DeviationSeries extend_scores(const DeviationSeries& prefix, const std::vector<Window>& windows,
                              const DistanceSpec& spec, std::optional<std::size_t> history_depth,
                              bool pruned, ScoringStats* stats, std::size_t workers) {
    const bool prune = pruned && spec.measure == Measure::euclidean_slide;
    return score_impl(&prefix, windows, spec, history_depth, prune, stats, workers);
}

DeviationSeries merge_spec_scores(const std::vector<DeviationSeries>& series_per_spec,
                                  MergePolicy policy) {
    if (series_per_spec.empty()) {
        throw std::invalid_argument("merge_spec_scores needs at least one series");
    }
    if (series_per_spec.size() == 1) return series_per_spec.front();

    const Measure measure = series_per_spec.front().measure;
    for (const auto& s : series_per_spec) {
        if (s.measure != measure) {
            throw std::invalid_argument("cannot merge scores from different measures (" +
                                        measure_name(measure) + " vs " + measure_name(s.measure) +
                                        ")");
        }
        if (s.entries.empty()) throw std::invalid_argument("cannot merge an empty score series");
    }

    std::vector<TimePoint> grid;
    for (const auto& s : series_per_spec) {
        for (const auto& e : s.entries) grid.push_back(e.timestamp);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    DeviationSeries merged;
    merged.measure = measure;
    merged.entries.reserve(grid.size());
    std::vector<std::size_t> cursor(series_per_spec.size(), 0);

    for (TimePoint t : grid) {
        ScoreEntry entry;
        entry.timestamp = t;
        if (policy == MergePolicy::max) {
            double best = -std::numeric_limits<double>::infinity();
            const ScoreEntry* source = nullptr;
            for (std::size_t s = 0; s < series_per_spec.size(); ++s) {
                const auto& entries = series_per_spec[s].entries;
                while (cursor[s] + 1 < entries.size() && entries[cursor[s] + 1].timestamp <= t) {
                    ++cursor[s];
                }
                const ScoreEntry& e = entries[cursor[s]];
                if (e.score > best) {
                    best = e.score;
                    source = &e;
                }
            }
            entry.score = best;
            entry.sentinel = source->sentinel;
            entry.best_match = source->best_match;
            entry.best_match_ts = source->best_match_ts;
            entry.spec_id = source->spec_id;
        } else {
            double sum = 0.0;
            bool any_sentinel = false;
            for (std::size_t s = 0; s < series_per_spec.size(); ++s) {
                const auto& entries = series_per_spec[s].entries;
                while (cursor[s] + 1 < entries.size() && entries[cursor[s] + 1].timestamp <= t) {
                    ++cursor[s];
                }
                sum += entries[cursor[s]].score;
                any_sentinel = any_sentinel || entries[cursor[s]].sentinel;
            }
            entry.score = sum / static_cast<double>(series_per_spec.size());
            entry.sentinel = any_sentinel;
            entry.spec_id = "merged";
        }
        merged.entries.push_back(entry);
    }
    return merged;
}

void write_scores_csv(const std::string& path, const DeviationSeries& series) {
    CsvWriter out(path);
    out.write_row({"timestamp", "score", "best_match_timestamp"});
    for (const auto& e : series.entries) {
        out.write_row({format_timestamp(e.timestamp), format_double(e.score),
                       e.best_match_ts ? format_timestamp(*e.best_match_ts) : ""});
    }
}

DeviationSeries read_scores_csv(const std::string& path, Measure measure) {
    CsvTable table = read_csv(path);
    const std::size_t ts = table.column("timestamp");
    const std::size_t sc = table.column("score");
    const std::size_t bm = table.column("best_match_timestamp");

    DeviationSeries series;
    series.measure = measure;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        ScoreEntry e;
        e.timestamp = parse_timestamp(table.rows[r][ts]);
        e.score = std::strtod(table.rows[r][sc].c_str(), nullptr);
        if (table.rows[r][bm].empty()) {
            e.sentinel = true;
        } else {
            e.best_match_ts = parse_timestamp(table.rows[r][bm]);
        }
        series.entries.push_back(e);
    }
    return series;
}

void write_explanation_pair(const std::string& target_path, const std::string& match_path,
                            const Window& target, const Window& match, const DistanceSpec& spec) {
    const auto names = select_top_features(target, match, spec);

    auto dump = [&](const std::string& path, const Window& w) {
        CsvWriter out(path);
        std::vector<std::string> header{"timestamp"};
        header.insert(header.end(), names.begin(), names.end());
        out.write_row(header);
        std::vector<std::size_t> dims;
        for (const auto& name : names) {
            for (std::size_t d = 0; d < w.feature_count(); ++d) {
                if (w.feature_name(d) == name) {
                    dims.push_back(d);
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < w.length(); ++i) {
            std::vector<std::string> row{format_timestamp(w.frame().timestamps[w.origin() + i])};
            for (std::size_t d : dims) row.push_back(format_double(w.value(i, d)));
            out.write_row(row);
        }
    };
    dump(target_path, target);
    dump(match_path, match);
}

}  // namespace tdev

#include "tdev/modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "tdev/csv.hpp"

namespace tdev {

PatternCodebook build_codebook(const std::vector<Window>& windows, const DistanceSpec& measure,
                               double radius) {
    if (windows.empty()) throw std::invalid_argument("cannot build a codebook from no windows");

    PatternCodebook codebook;
    codebook.assignment_radius = radius;
    codebook.measure = measure;
    for (const Window& w : windows) {
        bool absorbed = false;
        for (const Window& exemplar : codebook.exemplars) {
            if (window_distance(w, exemplar, measure) <= radius) {
                absorbed = true;
                break;
            }
        }
        if (!absorbed) codebook.exemplars.push_back(w);
    }
    return codebook;
}

std::vector<BlockFrequencies> word_frequencies(const std::vector<Window>& windows,
                                               const PatternCodebook& codebook, Duration block) {
    if (codebook.exemplars.empty()) throw std::invalid_argument("codebook has no exemplars");
    if (windows.empty()) return {};
    const Duration window_span = windows.front().end_ts() - windows.front().start_ts();
    if (block < window_span) {
        throw std::invalid_argument("block duration is shorter than one window span");
    }

    const TimePoint t0 = windows.front().start_ts();
    std::vector<BlockFrequencies> blocks;
    auto block_for = [&](TimePoint t) -> BlockFrequencies& {
        const auto idx = static_cast<std::size_t>((t - t0) / block);
        while (blocks.size() <= idx) {
            BlockFrequencies b;
            b.block_start = t0 + static_cast<Duration>(blocks.size()) * block;
            b.block_end = b.block_start + block;
            b.counts.assign(codebook.exemplars.size(), 0);
            blocks.push_back(std::move(b));
        }
        return blocks[idx];
    };

    for (const Window& w : windows) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t e = 0; e < codebook.exemplars.size(); ++e) {
            const double d = window_distance(w, codebook.exemplars[e], codebook.measure);
            if (d < best) {
                best = d;
                best_idx = e;
            }
        }
        BlockFrequencies& b = block_for(w.start_ts());
        if (best <= codebook.assignment_radius) {
            ++b.counts[best_idx];
        } else {
            ++b.overflow;
        }
    }
    return blocks;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double kmeans_sse(const std::vector<std::vector<double>>& points,
                  const std::vector<std::vector<double>>& centers,
                  const std::vector<std::size_t>& assignment) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) sse += sq_dist(points[i], centers[assignment[i]]);
    return sse;
}

}  // namespace

std::vector<std::size_t> cluster_modes(const std::vector<std::vector<double>>& frequencies,
                                       std::size_t k, std::uint64_t seed) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (k > frequencies.size()) {
        throw std::invalid_argument("k (" + std::to_string(k) + ") exceeds the number of blocks (" +
                                    std::to_string(frequencies.size()) + ")");
    }

    // Normalize to proportions so block length does not dominate.
    std::vector<std::vector<double>> points = frequencies;
    for (auto& p : points) {
        double sum = 0.0;
        for (double v : p) sum += v;
        if (sum > 0) {
            for (double& v : p) v /= sum;
        }
    }

    const std::size_t n = points.size();
    std::mt19937_64 rng(seed);

    // Farthest-point initialization from a seeded start.
    std::vector<std::vector<double>> centers;
    centers.push_back(points[rng() % n]);
    while (centers.size() < k) {
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) nearest = std::min(nearest, sq_dist(points[i], c));
            if (nearest > far_d) {
                far_d = nearest;
                far_i = i;
            }
        }
        centers.push_back(points[far_i]);
    }

    std::vector<std::size_t> assignment(n, 0);
    double prev_sse = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points[i], centers[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            if (assignment[i] != best_c) {
                assignment[i] = best_c;
                changed = true;
            }
        }

        const double sse = kmeans_sse(points, centers, assignment);
        if (sse > prev_sse + 1e-9) {
            throw std::logic_error("k-means objective increased between iterations");
        }
        prev_sse = sse;
        if (!changed && iter > 0) break;

        // Recompute means; reseed an empty cluster at the point farthest
        // from its current center.
        std::vector<std::vector<double>> sums(k, std::vector<double>(points[0].size(), 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++sizes[assignment[i]];
            for (std::size_t d = 0; d < points[i].size(); ++d) sums[assignment[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) {
                double far_d = -1.0;
                std::size_t far_i = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(points[i], centers[assignment[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centers[c] = points[far_i];
                continue;
            }
            for (std::size_t d = 0; d < sums[c].size(); ++d) {
                centers[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
            }
        }
    }
    return assignment;
}

ModeAssignment assign_modes(const std::vector<BlockFrequencies>& frequencies, std::size_t k,
                            std::uint64_t seed) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(frequencies.size());
    for (const auto& b : frequencies) {
        std::vector<double> v(b.counts.begin(), b.counts.end());
        v.push_back(static_cast<double>(b.overflow));
        vectors.push_back(std::move(v));
    }
    const auto assignment = cluster_modes(vectors, k, seed);

    ModeAssignment modes;
    modes.cluster_count = k;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        modes.blocks.push_back(
            {frequencies[i].block_start, frequencies[i].block_end, vectors[i], assignment[i]});
    }
    return modes;
}

void write_frequencies_csv(const std::string& path, const std::vector<BlockFrequencies>& blocks) {
    CsvWriter out(path);
    std::vector<std::string> header{"block_start", "block_end"};
    const std::size_t words = blocks.empty() ? 0 : blocks.front().counts.size();
    for (std::size_t w = 0; w < words; ++w) header.push_back("word_" + std::to_string(w));
    header.push_back("overflow");
    out.write_row(header);
    for (const auto& b : blocks) {
        std::vector<std::string> row{format_timestamp(b.block_start),
                                     format_timestamp(b.block_end)};
        for (std::size_t c : b.counts) row.push_back(std::to_string(c));
        row.push_back(std::to_string(b.overflow));
        out.write_row(row);
    }
}

void write_modes_csv(const std::string& path, const ModeAssignment& modes) {
    CsvWriter out(path);
    out.write_row({"block_start", "block_end", "cluster"});
    for (const auto& b : modes.blocks) {
        out.write_row({format_timestamp(b.start), format_timestamp(b.end),
                       std::to_string(b.cluster)});
    }
}

}  // namespace tdev

#pragma once

// Shared synthetic-data builders and independent oracle implementations.
// Oracles deliberately avoid the library's computation paths so tests can
// catch shared mistakes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdev/distances.hpp"
#include "tdev/frame.hpp"
#include "tdev/windowing.hpp"

namespace tdev::test {

inline double urand(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<std::string> default_names(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("f" + std::to_string(i));
    return names;
}

// Frame from per-feature columns, timestamps t0, t0+spacing, ...
inline std::shared_ptr<TimeSeriesFrame> make_frame(
    const std::vector<std::vector<double>>& columns, std::vector<std::string> names = {},
    Duration spacing = kNanosPerSecond, TimePoint t0 = 0) {
    auto frame = std::make_shared<TimeSeriesFrame>();
    const std::size_t rows = columns.front().size();
    const std::size_t k = columns.size();
    for (const auto& col : columns) {
        if (col.size() != rows) throw std::invalid_argument("ragged test columns");
    }
    frame->feature_names = names.empty() ? default_names(k) : std::move(names);
    for (std::size_t r = 0; r < rows; ++r) {
        frame->timestamps.push_back(t0 + static_cast<Duration>(r) * spacing);
        for (std::size_t c = 0; c < k; ++c) frame->values.push_back(columns[c][r]);
    }
    frame->validate();
    return frame;
}

// A single window covering the whole frame built from the given columns.
inline Window window_of(const std::vector<std::vector<double>>& columns,
                        std::vector<std::string> names = {}, TimePoint t0 = 0) {
    auto frame = make_frame(columns, std::move(names), kNanosPerSecond, t0);
    std::vector<std::size_t> cols(frame->feature_count());
    for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = c;
    return Window(frame, 0, frame->rows(), cols, "test");
}

// ---- independent distance oracles ------------------------------------

inline double oracle_aggregate(const std::vector<double>& per_dim, DimAggregation agg) {
    if (agg == DimAggregation::max) return *std::max_element(per_dim.begin(), per_dim.end());
    double s = 0;
    for (double v : per_dim) s += v;
    return s / static_cast<double>(per_dim.size());
}

// RMS-scaled Euclidean distance of two equal-length multivariate slices.
inline double oracle_euclid_aligned(const std::vector<std::vector<double>>& a,
                                    const std::vector<std::vector<double>>& b, std::size_t a_off,
                                    std::size_t b_off, std::size_t len, DimAggregation agg) {
    std::vector<double> per_dim;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double ssq = 0;
        for (std::size_t i = 0; i < len; ++i) {
            const double diff = a[d][a_off + i] - b[d][b_off + i];
            ssq += diff * diff;
        }
        per_dim.push_back(std::sqrt(ssq) / std::sqrt(static_cast<double>(len)));
    }
    return oracle_aggregate(per_dim, agg);
}

inline double oracle_euclid_slide(const std::vector<std::vector<double>>& a,
                                  const std::vector<std::vector<double>>& b, std::size_t step,
                                  SlideAggregation slide, DimAggregation agg) {
    const std::size_t la = a.front().size(), lb = b.front().size();
    if (la == lb) return oracle_euclid_aligned(a, b, 0, 0, la, agg);
    const auto& shorter = la < lb ? a : b;
    const auto& longer = la < lb ? b : a;
    const std::size_t len = std::min(la, lb);
    const std::size_t span = std::max(la, lb) - len;
    std::vector<double> per_offset;
    for (std::size_t o = 0; o <= span; o += step) {
        per_offset.push_back(oracle_euclid_aligned(shorter, longer, 0, o, len, agg));
    }
    if (slide == SlideAggregation::min) {
        return *std::min_element(per_offset.begin(), per_offset.end());
    }
    double s = 0;
    for (double v : per_offset) s += v;
    return s / static_cast<double>(per_offset.size());
}

// Optimal DTW path cost by plain recursion with memoization; used to
// sandwich the library's path-length-normalized value.
inline double oracle_dtw_cost(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> memo(n * m, -1.0);
    auto rec = [&](auto&& self, std::size_t i, std::size_t j) -> double {
        double& slot = memo[i * m + j];
        if (slot >= 0) return slot;
        const double cost = std::abs(a[i] - b[j]);
        double best;
        if (i == 0 && j == 0) {
            best = 0.0;
        } else if (i == 0) {
            best = self(self, 0, j - 1);
        } else if (j == 0) {
            best = self(self, i - 1, 0);
        } else {
            best = std::min({self(self, i - 1, j - 1), self(self, i - 1, j), self(self, i, j - 1)});
        }
        slot = cost + best;
        return slot;
    };
    return rec(rec, n - 1, m - 1);
}

// Cross-correlation maximum by explicit lag enumeration.
inline double oracle_xcorr_max(const std::vector<double>& a, const std::vector<double>& b) {
    const auto la = static_cast<std::ptrdiff_t>(a.size());
    const auto lb = static_cast<std::ptrdiff_t>(b.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t lag = -(la - 1); lag <= lb - 1; ++lag) {
        double c = 0;
        for (std::ptrdiff_t t = 0; t < la; ++t) {
            const std::ptrdiff_t u = t + lag;
            if (u >= 0 && u < lb) c += a[t] * b[u];
        }
        best = std::max(best, c);
    }
    return best;
}

inline double oracle_xcorr_distance(const std::vector<std::vector<double>>& a,
                                    const std::vector<std::vector<double>>& b,
                                    DimAggregation agg) {
    std::vector<double> per_dim;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double na = 0, nb = 0;
        for (double v : a[d]) na += v * v;
        for (double v : b[d]) nb += v * v;
        if (na == 0 || nb == 0) continue;
        per_dim.push_back(-oracle_xcorr_max(a[d], b[d]) / (std::sqrt(na) * std::sqrt(nb)));
    }
    return oracle_aggregate(per_dim, agg);
}

// Random multivariate window pair with equal or unequal lengths.
struct RandomPair {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;
};

inline RandomPair random_pair(std::mt19937_64& rng, std::size_t max_len = 32,
                              std::size_t max_dims = 4, bool equal_lengths = true) {
    const std::size_t dims = 1 + rng() % max_dims;
    const std::size_t la = 2 + rng() % (max_len - 1);
    const std::size_t lb = equal_lengths ? la : 2 + rng() % (max_len - 1);
    RandomPair pair;
    for (std::size_t d = 0; d < dims; ++d) {
        std::vector<double> col_a(la), col_b(lb);
        for (auto& v : col_a) v = urand(rng) * 4.0 - 2.0;
        for (auto& v : col_b) v = urand(rng) * 4.0 - 2.0;
        pair.a.push_back(std::move(col_a));
        pair.b.push_back(std::move(col_b));
    }
    return pair;
}

// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<std::size_t>& x,
                                  const std::vector<std::size_t>& y) {
    const std::size_t n = x.size();
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> mx, my;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{x[i], y[i]}] += 1;
        mx[x[i]] += 1;
        my[y[i]] += 1;
    }
    auto choose2 = [](double c) { return c * (c - 1) / 2; };
    double sum_joint = 0, sum_x = 0, sum_y = 0;
    for (const auto& [key, c] : joint) sum_joint += choose2(c);
    for (const auto& [key, c] : mx) sum_x += choose2(c);
    for (const auto& [key, c] : my) sum_y += choose2(c);
    const double total = choose2(static_cast<double>(n));
    const double expected = sum_x * sum_y / total;
    const double max_index = 0.5 * (sum_x + sum_y);
    if (max_index == expected) return 1.0;
    return (sum_joint - expected) / (max_index - expected);
}

}  // namespace tdev::test

#include "tdev/distances.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tdev {

void DistanceSpec::validate() const {
    if (offset_step == 0) throw std::invalid_argument("offset_step must be >= 1");
    if (top_k_features && *top_k_features == 0) {
        throw std::invalid_argument("top_k_features must be >= 1 when present");
    }
}

double DistanceSpec::identity_floor() const {
    return measure == Measure::neg_max_xcorr ? -1.0 : 0.0;
}

double DistanceSpec::sentinel_score() const {
    return measure == Measure::neg_max_xcorr ? 1.0 : std::numeric_limits<double>::infinity();
}

Measure parse_measure(const std::string& name) {
    if (name == "euclid" || name == "euclidean_slide") return Measure::euclidean_slide;
    if (name == "dtw") return Measure::dtw;
    if (name == "xcorr" || name == "neg_max_xcorr") return Measure::neg_max_xcorr;
    throw std::invalid_argument("unknown distance measure '" + name +
                                "', expected euclid|dtw|xcorr");
}

std::string measure_name(Measure m) {
    switch (m) {
        case Measure::euclidean_slide: return "euclid";
        case Measure::dtw: return "dtw";
        case Measure::neg_max_xcorr: return "xcorr";
    }
    return "?";
}

namespace detail {

std::vector<std::pair<std::size_t, std::size_t>> shared_dims(const Window& target,
                                                             const Window& candidate) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    for (std::size_t t = 0; t < target.feature_count(); ++t) {
        for (std::size_t c = 0; c < candidate.feature_count(); ++c) {
            if (target.feature_name(t) == candidate.feature_name(c)) {
                dims.emplace_back(t, c);
                break;
            }
        }
    }
    return dims;
}

namespace {

inline double aggregate_start(DimAggregation agg) {
    return agg == DimAggregation::max ? -std::numeric_limits<double>::infinity() : 0.0;
}

inline void aggregate_step(DimAggregation agg, double& acc, double v) {
    if (agg == DimAggregation::max) {
        acc = std::max(acc, v);
    } else {
        acc += v;
    }
}

inline double aggregate_finish(DimAggregation agg, double acc, std::size_t count) {
    return agg == DimAggregation::max ? acc : acc / static_cast<double>(count);
}

// Aligned equal-length comparison of w1[o1..o1+len) against w2[o2..o2+len)
// with optional early abandonment against `bound`.
double euclid_aligned(const Window& w1, const Window& w2,
                      const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                      std::size_t o1, std::size_t o2, std::size_t len, DimAggregation agg,
                      bool enable_pruning, double bound, std::uint64_t* mac_ops) {
    const double sqrt_len = std::sqrt(static_cast<double>(len));
    const double inf = std::numeric_limits<double>::infinity();
    double acc = aggregate_start(agg);
    std::uint64_t ops = 0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        double ssq = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double diff = w1.value(o1 + i, dims[d].first) - w2.value(o2 + i, dims[d].second);
            ssq += diff * diff;
            ++ops;
            // Partial sums only grow, so the bound check is sound mid-column.
            if (enable_pruning && (i & 7u) == 7u) {
                double partial = std::sqrt(ssq) / sqrt_len;
                double lower = agg == DimAggregation::max ? std::max(acc, partial)
                                                          : (acc + partial) /
                                                                static_cast<double>(dims.size());
                if (lower > bound) {
                    if (mac_ops) *mac_ops += ops;
                    return inf;
                }
            }
        }
        aggregate_step(agg, acc, std::sqrt(ssq) / sqrt_len);
        if (enable_pruning) {
            double lower = agg == DimAggregation::max
                               ? acc
                               : acc / static_cast<double>(dims.size());
            if (lower > bound) {
                if (mac_ops) *mac_ops += ops;
                return inf;
            }
        }
    }
    if (mac_ops) *mac_ops += ops;
    return aggregate_finish(agg, acc, dims.size());
}

}  // namespace

double euclid_pruned(const Window& w1, const Window& w2,
                     const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                     const DistanceSpec& spec, bool enable_pruning, double abandon_above,
                     std::uint64_t* mac_ops) {
    const double inf = std::numeric_limits<double>::infinity();
    if (w1.length() == w2.length()) {
        return euclid_aligned(w1, w2, dims, 0, 0, w1.length(), spec.dimension_aggregation,
                              enable_pruning, abandon_above, mac_ops);
    }

    // The shorter window slides across the longer one.
    const bool first_is_short = w1.length() < w2.length();
    const Window& shorter = first_is_short ? w1 : w2;
    const Window& longer = first_is_short ? w2 : w1;
    std::vector<std::pair<std::size_t, std::size_t>> sdims = dims;
    if (!first_is_short) {
        for (auto& d : sdims) std::swap(d.first, d.second);
    }

    const std::size_t span = longer.length() - shorter.length();
    const std::size_t count = span / spec.offset_step + 1;

    if (spec.slide_aggregation == SlideAggregation::min) {
        double best = inf;
        for (std::size_t o = 0; o <= span; o += spec.offset_step) {
            // An offset that cannot beat the running minimum (or the caller's
            // bound) cannot change the result.
            double cap = enable_pruning ? std::min(best, abandon_above) : inf;
            double d = euclid_aligned(shorter, longer, sdims, 0, o, shorter.length(),
                                      spec.dimension_aggregation, enable_pruning, cap, mac_ops);
            best = std::min(best, d);
        }
        if (enable_pruning && best > abandon_above) return inf;
        return best;
    }

    // Mean over offsets: incomplete offsets lower-bound at 0.
    double sum = 0.0;
    for (std::size_t o = 0; o <= span; o += spec.offset_step) {
        if (enable_pruning && sum / static_cast<double>(count) > abandon_above) return inf;
        double d = euclid_aligned(shorter, longer, sdims, 0, o, shorter.length(),
                                  spec.dimension_aggregation, false, inf, mac_ops);
        sum += d;
    }
    double mean = sum / static_cast<double>(count);
    if (enable_pruning && mean > abandon_above) return inf;
    return mean;
}

double xcorr_max_direct(const std::vector<double>& a, const std::vector<double>& b) {
    const std::ptrdiff_t la = static_cast<std::ptrdiff_t>(a.size());
    const std::ptrdiff_t lb = static_cast<std::ptrdiff_t>(b.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t lag = -(la - 1); lag <= lb - 1; ++lag) {
        double c = 0.0;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -lag);
        const std::ptrdiff_t t1 = std::min(la - 1, lb - 1 - lag);
        for (std::ptrdiff_t t = t0; t <= t1; ++t) {
            c += a[static_cast<std::size_t>(t)] * b[static_cast<std::size_t>(t + lag)];
        }
        best = std::max(best, c);
    }
    return best;
}

namespace {

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                std::complex<double> u = x[i + j];
                std::complex<double> v = x[i + j + len / 2] * w;
                x[i + j] = u + v;
                x[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& v : x) v /= static_cast<double>(n);
    }
}

}  // namespace

double xcorr_max_fft(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t la = a.size(), lb = b.size();
    const std::size_t out_len = la + lb - 1;
    std::size_t n = 1;
    while (n < out_len) n <<= 1;

    // Correlation as convolution of the reversed first sequence:
    // (rev(a) * b)[j] = sum_t a[t] b[t + j - la + 1].
    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < la; ++i) fa[i] = a[la - 1 - i];
    for (std::size_t i = 0; i < lb; ++i) fb[i] = b[i];
    fft_inplace(fa, false);
    fft_inplace(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft_inplace(fa, true);

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out_len; ++j) best = std::max(best, fa[j].real());
    return best;
}

std::vector<std::pair<std::size_t, std::size_t>> resolve_dims(const Window& target,
                                                              const Window& candidate,
                                                              const DistanceSpec& spec) {
    auto dims = shared_dims(target, candidate);
    if (dims.empty()) {
        throw std::invalid_argument("windows share no features");
    }
    if (spec.top_k_features && *spec.top_k_features < dims.size()) {
        auto names = select_top_features(target, candidate, spec);
        std::vector<std::pair<std::size_t, std::size_t>> kept;
        for (const auto& d : dims) {
            if (std::find(names.begin(), names.end(), target.feature_name(d.first)) !=
                names.end()) {
                kept.push_back(d);
            }
        }
        dims = std::move(kept);
    }
    return dims;
}

}  // namespace detail

namespace {

using detail::resolve_dims;

double dtw_single_dim(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size(), m = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> table(n * m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return table[i * m + j]; };

    at(0, 0) = std::abs(a[0] - b[0]);
    for (std::size_t i = 1; i < n; ++i) at(i, 0) = std::abs(a[i] - b[0]) + at(i - 1, 0);
    for (std::size_t j = 1; j < m; ++j) at(0, j) = std::abs(a[0] - b[j]) + at(0, j - 1);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j < m; ++j) {
            at(i, j) = std::abs(a[i] - b[j]) +
                       std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
        }
    }

    // Path length via backtracking; diagonal preferred on ties.
    std::size_t i = n - 1, j = m - 1, steps = 1;
    while (i > 0 || j > 0) {
        double diag = (i > 0 && j > 0) ? at(i - 1, j - 1) : inf;
        double up = i > 0 ? at(i - 1, j) : inf;
        double left = j > 0 ? at(i, j - 1) : inf;
        if (diag <= up && diag <= left) {
            --i;
            --j;
        } else if (up <= left) {
            --i;
        } else {
            --j;
        }
        ++steps;
    }
    return at(n - 1, m - 1) / static_cast<double>(steps);
}

}  // namespace

double euclidean_slide(const Window& w1, const Window& w2, const DistanceSpec& spec) {
    spec.validate();
    auto dims = resolve_dims(w1, w2, spec);
    return detail::euclid_pruned(w1, w2, dims, spec, false,
                                 std::numeric_limits<double>::infinity(), nullptr);
}

double dtw_distance(const Window& w1, const Window& w2, const DistanceSpec& spec) {
    spec.validate();
    if (w1.length() == 0 || w2.length() == 0) {
        throw std::invalid_argument("DTW requires nonempty windows");
    }
    auto dims = resolve_dims(w1, w2, spec);
    double acc = detail::aggregate_start(spec.dimension_aggregation);
    for (const auto& [t, c] : dims) {
        detail::aggregate_step(spec.dimension_aggregation, acc,
                               dtw_single_dim(w1.dimension(t), w2.dimension(c)));
    }
    return detail::aggregate_finish(spec.dimension_aggregation, acc, dims.size());
}

double xcorr_distance(const Window& w1, const Window& w2, const DistanceSpec& spec) {
    spec.validate();
    auto dims = resolve_dims(w1, w2, spec);
    double acc = detail::aggregate_start(spec.dimension_aggregation);
    std::size_t used = 0;
    for (const auto& [t, c] : dims) {
        const std::vector<double> a = w1.dimension(t);
        const std::vector<double> b = w2.dimension(c);
        double na = 0.0, nb = 0.0;
        for (double v : a) na += v * v;
        for (double v : b) nb += v * v;
        if (na == 0.0 || nb == 0.0) {
            std::cerr << "warning: skipping zero-norm dimension '" << w1.feature_name(t)
                      << "' in cross-correlation distance\n";
            continue;
        }
        double raw = std::max(a.size(), b.size()) > detail::kXcorrFftThreshold
                         ? detail::xcorr_max_fft(a, b)
                         : detail::xcorr_max_direct(a, b);
        detail::aggregate_step(spec.dimension_aggregation, acc,
                               -raw / (std::sqrt(na) * std::sqrt(nb)));
        ++used;
    }
    if (used == 0) {
        throw std::invalid_argument("all shared dimensions have zero norm");
    }
    return detail::aggregate_finish(spec.dimension_aggregation, acc, used);
}

std::vector<std::string> select_top_features(const Window& target, const Window& candidate,
                                             const DistanceSpec& spec) {
    auto dims = detail::shared_dims(target, candidate);
    if (dims.empty()) throw std::invalid_argument("windows share no features");

    struct Ranked {
        std::string name;
        double relevance;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(dims.size());
    for (const auto& [t, c] : dims) {
        const std::string& name = target.feature_name(t);
        double relevance = 0.0;
        if (spec.feature_relevance == FeatureRelevance::target_window_variance) {
            double mean = 0.0;
            for (std::size_t i = 0; i < target.length(); ++i) mean += target.value(i, t);
            mean /= static_cast<double>(target.length());
            for (std::size_t i = 0; i < target.length(); ++i) {
                const double d = target.value(i, t) - mean;
                relevance += d * d;
            }
            relevance /= static_cast<double>(target.length());
        } else {
            if (spec.importance.empty()) {
                throw std::invalid_argument(
                    "external_importance_vector selected but no importance vector supplied");
            }
            auto it = spec.importance.find(name);
            relevance = it == spec.importance.end() ? 0.0 : it->second;
        }
        ranked.push_back({name, relevance});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return a.name < b.name;
    });
    std::size_t keep = ranked.size();
    if (spec.top_k_features) keep = std::min(keep, *spec.top_k_features);
    std::vector<std::string> names;
    names.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) names.push_back(ranked[i].name);
    return names;
}

double window_distance(const Window& target, const Window& candidate, const DistanceSpec& spec) {
    switch (spec.measure) {
        case Measure::euclidean_slide: return euclidean_slide(target, candidate, spec);
        case Measure::dtw: return dtw_distance(target, candidate, spec);
        case Measure::neg_max_xcorr: return xcorr_distance(target, candidate, spec);
    }
    throw std::logic_error("unreachable distance measure");
}

}  // namespace tdev

#include "tdev/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "tdev/csv.hpp"
#include "tdev/time_axis.hpp"

namespace tdev {

void TuningSpace::validate() const {
    if (dimensions.empty()) throw std::invalid_argument("tuning space has no dimensions");
    if (dimensions.size() > 3) {
        throw std::invalid_argument("tuning space is limited to 3 dimensions; optimize small "
                                    "subsets of parameters at a time");
    }
    for (const auto& d : dimensions) {
        if (!(d.lo < d.hi)) {
            throw std::invalid_argument("dimension '" + d.name + "' needs lo < hi");
        }
    }
    if (budget < dimensions.size() + 2) {
        throw std::invalid_argument("budget must be at least dimensions + 2");
    }
}

double recall_fpr_ratio(double event_recall, double false_alert_rate, std::size_t alerts_total) {
    const double eps = 1.0 / (static_cast<double>(alerts_total) + 1.0);
    return event_recall / std::max(false_alert_rate, eps);
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double clamp_round_integer(double v, const TuningDimension& dim) {
    double r = std::nearbyint(v);
    return std::min(dim.hi, std::max(dim.lo, r));
}

std::vector<double> to_eval_point(const std::vector<double>& raw,
                                  const std::vector<TuningDimension>& dims) {
    std::vector<double> out = raw;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        if (dims[d].kind == TuningDimension::Kind::integer) {
            out[d] = clamp_round_integer(out[d], dims[d]);
        }
    }
    return out;
}

// ---- dense Cholesky-based GP machinery -------------------------------

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
bool cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    // Zero the strict upper triangle so later loops can ignore it.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return true;
}

void solve_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
        b[i] = s / l[i * n + i];
    }
}

void solve_upper_from_lower(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * b[k];
        b[ii] = s / l[ii * n + ii];
    }
}

constexpr double kNoise = 1e-6;

double sq_exp_kernel(const std::vector<double>& a, const std::vector<double>& b,
                     const std::vector<double>& scales) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double z = (a[d] - b[d]) / scales[d];
        s += z * z;
    }
    return std::exp(-0.5 * s);
}

struct GpModel {
    std::vector<double> scales;
    std::vector<double> chol;   // n x n lower factor of K + noise I
    std::vector<double> alpha;  // (K + noise I)^-1 z
    const std::vector<std::vector<double>>* x = nullptr;
    std::size_t n = 0;
};

double log_marginal_likelihood(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& z, const std::vector<double>& scales,
                               GpModel* out) {
    const std::size_t n = x.size();
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = sq_exp_kernel(x[i], x[j], scales) + (i == j ? kNoise : 0.0);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    if (!cholesky(k, n)) return -std::numeric_limits<double>::infinity();

    std::vector<double> alpha = z;
    solve_lower(k, n, alpha);
    double quad = 0.0, logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        quad += alpha[i] * alpha[i];
        logdet += std::log(k[i * n + i]);
    }
    solve_upper_from_lower(k, n, alpha);

    if (out) {
        out->scales = scales;
        out->chol = std::move(k);
        out->alpha = std::move(alpha);
        out->n = n;
    }
    return -0.5 * quad - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

// Fixed grid of candidate length scales per dimension; full marginal
// likelihood ascent adds surface without changing desk-scale outcomes.
const double kScaleGrid[] = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};

GpModel fit_gp(const std::vector<std::vector<double>>& x, const std::vector<double>& z) {
    const std::size_t d = x.front().size();
    std::vector<std::size_t> idx(d, 0);
    GpModel best;
    double best_ll = -std::numeric_limits<double>::infinity();
    const std::size_t grid_n = sizeof(kScaleGrid) / sizeof(kScaleGrid[0]);

    std::vector<double> scales(d);
    bool done = false;
    while (!done) {
        for (std::size_t i = 0; i < d; ++i) scales[i] = kScaleGrid[idx[i]];
        GpModel model;
        const double ll = log_marginal_likelihood(x, z, scales, &model);
        if (ll > best_ll) {
            best_ll = ll;
            best = std::move(model);
        }
        std::size_t i = 0;
        for (; i < d; ++i) {
            if (++idx[i] < grid_n) break;
            idx[i] = 0;
        }
        done = i == d;
    }
    best.x = &x;
    return best;
}

void gp_posterior(const GpModel& gp, const std::vector<double>& u, double& mean, double& var) {
    const std::size_t n = gp.n;
    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) kstar[i] = sq_exp_kernel((*gp.x)[i], u, gp.scales);
    mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += kstar[i] * gp.alpha[i];

    std::vector<double> v = kstar;
    solve_lower(gp.chol, n, v);
    double reduction = 0.0;
    for (std::size_t i = 0; i < n; ++i) reduction += v[i] * v[i];
    var = std::max(0.0, 1.0 + kNoise - reduction);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double expected_improvement(double mean, double var, double best) {
    const double sd = std::sqrt(var);
    if (sd < 1e-12) return std::max(0.0, mean - best);
    const double gamma = (mean - best) / sd;
    return (mean - best) * normal_cdf(gamma) + sd * normal_pdf(gamma);
}

}  // namespace

OptimizationResult gp_optimize(const TuningSpace& space, const ObjectiveFn& objective) {
    space.validate();
    const auto& dims = space.dimensions;
    const std::size_t d = dims.size();
    std::mt19937_64 rng(space.seed);

    auto denorm = [&](const std::vector<double>& u) {
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = dims[i].lo + u[i] * (dims[i].hi - dims[i].lo);
        return to_eval_point(x, dims);
    };
    auto norm = [&](const std::vector<double>& x) {
        std::vector<double> u(d);
        for (std::size_t i = 0; i < d; ++i) u[i] = (x[i] - dims[i].lo) / (dims[i].hi - dims[i].lo);
        return u;
    };

    OptimizationResult result;
    std::vector<std::vector<double>> observed_u;
    std::vector<double> observed_y;

    auto record = [&](const std::vector<double>& x) {
        const ObjectiveValue v = objective(x);
        result.trace.push_back({x, v});
        observed_u.push_back(norm(x));
        observed_y.push_back(v.value);
        if (result.trace.size() == 1 || v.value > result.best_value.value) {
            result.best_params = x;
            result.best_value = v;
        }
    };

    // Seeded Latin hypercube initial design.
    const std::size_t design = std::min(space.budget, std::max<std::size_t>(4, 2 * d));
    std::vector<std::vector<std::size_t>> strata(d, std::vector<std::size_t>(design));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t s = 0; s < design; ++s) strata[i][s] = s;
        for (std::size_t s = design; s-- > 1;) {
            std::swap(strata[i][s], strata[i][rng() % (s + 1)]);
        }
    }
    for (std::size_t s = 0; s < design; ++s) {
        std::vector<double> u(d);
        for (std::size_t i = 0; i < d; ++i) {
            u[i] = (static_cast<double>(strata[i][s]) + uniform01(rng)) /
                   static_cast<double>(design);
        }
        record(denorm(u));
    }

    constexpr std::size_t kCandidates = 2048;
    while (result.trace.size() < space.budget) {
        // Standardize observations for a stable unit-variance prior.
        const std::size_t n = observed_y.size();
        double mean = 0.0;
        for (double y : observed_y) mean += y;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double y : observed_y) var += (y - mean) * (y - mean);
        var /= static_cast<double>(n);
        const double sd = var > 0 ? std::sqrt(var) : 1.0;
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = (observed_y[i] - mean) / sd;
        const double z_best = *std::max_element(z.begin(), z.end());

        GpModel gp = fit_gp(observed_u, z);

        std::vector<double> best_u(d);
        if (gp.n == 0) {
            // Every scale candidate failed to factor; explore blindly.
            for (auto& v : best_u) v = uniform01(rng);
            record(denorm(best_u));
            continue;
        }
        double best_ei = -1.0;
        for (std::size_t c = 0; c < kCandidates; ++c) {
            std::vector<double> u(d);
            for (std::size_t i = 0; i < d; ++i) u[i] = uniform01(rng);
            double m = 0.0, v = 0.0;
            gp_posterior(gp, u, m, v);
            const double ei = expected_improvement(m, v, z_best);
            if (ei > best_ei) {
                best_ei = ei;
                best_u = u;
            }
        }
        record(denorm(best_u));
    }
    return result;
}

OptimizationResult grid_search(const TuningSpace& space, const std::vector<std::size_t>& resolution,
                               const ObjectiveFn& objective, std::size_t cap) {
    if (space.dimensions.empty()) throw std::invalid_argument("tuning space has no dimensions");
    if (resolution.size() != space.dimensions.size()) {
        throw std::invalid_argument("resolution must give one point count per dimension");
    }

    std::vector<std::vector<double>> axes;
    std::size_t total = 1;
    for (std::size_t i = 0; i < space.dimensions.size(); ++i) {
        const auto& dim = space.dimensions[i];
        const std::size_t r = std::max<std::size_t>(1, resolution[i]);
        std::vector<double> axis;
        if (dim.kind == TuningDimension::Kind::integer) {
            const auto span = static_cast<std::size_t>(dim.hi - dim.lo) + 1;
            if (r >= span) {
                for (double v = dim.lo; v <= dim.hi; v += 1.0) axis.push_back(v);
            } else {
                for (std::size_t s = 0; s < r; ++s) {
                    double v = dim.lo + (dim.hi - dim.lo) * static_cast<double>(s) /
                                            static_cast<double>(r - 1);
                    axis.push_back(clamp_round_integer(v, dim));
                }
                axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
            }
        } else {
            if (r == 1) {
                axis.push_back(dim.lo);
            } else {
                for (std::size_t s = 0; s < r; ++s) {
                    axis.push_back(dim.lo + (dim.hi - dim.lo) * static_cast<double>(s) /
                                                static_cast<double>(r - 1));
                }
            }
        }
        total *= axis.size();
        axes.push_back(std::move(axis));
    }
    if (total > cap) {
        throw std::invalid_argument("grid of " + std::to_string(total) +
                                    " points exceeds the cap of " + std::to_string(cap) +
                                    "; use a coarser resolution");
    }

    OptimizationResult result;
    std::vector<std::size_t> idx(axes.size(), 0);
    bool done = false;
    while (!done) {
        std::vector<double> x(axes.size());
        for (std::size_t i = 0; i < axes.size(); ++i) x[i] = axes[i][idx[i]];
        const ObjectiveValue v = objective(x);
        result.trace.push_back({x, v});
        if (result.trace.size() == 1 || v.value > result.best_value.value) {
            result.best_params = x;
            result.best_value = v;
        }
        std::size_t i = axes.size();
        while (i-- > 0) {
            if (++idx[i] < axes[i].size()) break;
            idx[i] = 0;
            if (i == 0) done = true;
        }
    }
    return result;
}

void write_trace_csv(const std::string& path, const TuningSpace& space,
                     const OptimizationResult& result) {
    CsvWriter out(path);
    std::vector<std::string> header;
    for (const auto& dim : space.dimensions) header.push_back(dim.name);
    header.insert(header.end(), {"value", "at_threshold", "event_recall", "false_alert_rate"});
    out.write_row(header);
    for (const auto& rec : result.trace) {
        std::vector<std::string> row;
        for (double p : rec.params) row.push_back(format_double(p));
        row.push_back(format_double(rec.value.value));
        row.push_back(format_double(rec.value.at_threshold));
        row.push_back(format_double(rec.value.components.event_recall));
        row.push_back(format_double(rec.value.components.false_alert_rate));
        out.write_row(row);
    }
}

}  // namespace tdev

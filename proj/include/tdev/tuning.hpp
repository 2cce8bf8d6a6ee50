#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tdev {

struct TuningDimension {
    std::string name;
    enum class Kind { continuous, integer };
    Kind kind = Kind::continuous;
    double lo = 0.0;
    double hi = 1.0;
};

struct TuningSpace {
    std::vector<TuningDimension> dimensions;
    std::size_t budget = 25;
    std::uint64_t seed = 0;

    // Small subsets optimize better than the full cross-product; the space
    // is capped at three dimensions.
    void validate() const;
};

struct ObjectiveComponents {
    double event_recall = 0.0;
    double false_alert_rate = 0.0;
};

struct ObjectiveValue {
    double value = 0.0;
    double at_threshold = 0.0;  // decision criterion attaining the value
    ObjectiveComponents components;
    std::string diagnostic;  // nonempty when the pipeline failed under the params
};

// event_recall / max(false_alert_rate, eps) with eps = 1/(alerts_total + 1),
// so perfect-precision configurations stay comparable across dataset sizes.
double recall_fpr_ratio(double event_recall, double false_alert_rate, std::size_t alerts_total);

using ObjectiveFn = std::function<ObjectiveValue(const std::vector<double>&)>;

struct EvaluationRecord {
    std::vector<double> params;
    ObjectiveValue value;
};

struct OptimizationResult {
    std::vector<double> best_params;
    ObjectiveValue best_value;
    std::vector<EvaluationRecord> trace;
};

// Gaussian-process surrogate (squared-exponential kernel, per-dimension
// length scales fit by marginal likelihood over a fixed grid, observation
// noise 1e-6) with expected-improvement acquisition maximized by seeded
// random sampling. The initial design is a seeded Latin hypercube of size
// max(4, 2*dimensions). Integer dimensions are optimized continuously and
// rounded at evaluation. Deterministic given space.seed.
OptimizationResult gp_optimize(const TuningSpace& space, const ObjectiveFn& objective);

// Exhaustive evaluation; the verification oracle for gp_optimize and the
// generator of value-surface exports. resolution gives the per-dimension
// point counts; integer dimensions enumerate every integer in range when
// the resolution allows.
OptimizationResult grid_search(const TuningSpace& space,
                               const std::vector<std::size_t>& resolution,
                               const ObjectiveFn& objective, std::size_t cap = 100000);

void write_trace_csv(const std::string& path, const TuningSpace& space,
                     const OptimizationResult& result);

}  // namespace tdev

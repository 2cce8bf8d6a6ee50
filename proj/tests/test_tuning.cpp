#include <doctest.h>

#include <cmath>
#include <map>

#include "tdev/tuning.hpp"
#include "test_helpers.hpp"

using namespace tdev;

namespace {

TuningSpace space_1d(double lo, double hi, std::size_t budget, std::uint64_t seed = 7) {
    TuningSpace space;
    space.dimensions = {{"t_cutoff", TuningDimension::Kind::continuous, lo, hi}};
    space.budget = budget;
    space.seed = seed;
    return space;
}

ObjectiveValue concave_quadratic(const std::vector<double>& params) {
    // Maximum at x = 3.2.
    ObjectiveValue value;
    value.value = 10.0 - (params[0] - 3.2) * (params[0] - 3.2);
    value.at_threshold = params[0];
    return value;
}

bool traces_equal(const OptimizationResult& a, const OptimizationResult& b) {
    if (a.trace.size() != b.trace.size()) return false;
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        if (a.trace[i].params != b.trace[i].params) return false;
        if (a.trace[i].value.value != b.trace[i].value.value) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("TuningSpace validation") {
    TuningSpace space = space_1d(0, 1, 10);
    CHECK_NOTHROW(space.validate());

    space.dimensions[0].hi = space.dimensions[0].lo;
    CHECK_THROWS_AS(space.validate(), std::invalid_argument);

    space = space_1d(0, 1, 2);  // budget below dimensions + 2
    CHECK_THROWS_AS(space.validate(), std::invalid_argument);

    space = space_1d(0, 1, 10);
    for (int i = 0; i < 3; ++i) {
        space.dimensions.push_back({"d" + std::to_string(i),
                                    TuningDimension::Kind::continuous, 0, 1});
    }
    CHECK_THROWS_AS(space.validate(), std::invalid_argument);
}

TEST_CASE("recall_fpr_ratio floors the denominator by alert count") {
    CHECK(recall_fpr_ratio(1.0, 0.5, 10) == doctest::Approx(2.0));
    // Zero false alerts: the floor is 1/(N+1).
    CHECK(recall_fpr_ratio(1.0, 0.0, 10) == doctest::Approx(11.0));
    CHECK(recall_fpr_ratio(0.0, 0.0, 10) == 0.0);
}

TEST_CASE("gp_optimize finds a 1-D concave quadratic argmax") {
    const auto space = space_1d(0.0, 10.0, 15);
    const auto result = gp_optimize(space, concave_quadratic);
    CHECK(result.trace.size() == 15);
    // Within 5% of the domain width from the true argmax.
    CHECK(std::abs(result.best_params[0] - 3.2) <= 0.5);
    CHECK(result.best_value.value == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("gp_optimize on a constant objective spends the whole budget") {
    const auto space = space_1d(0.0, 1.0, 8);
    const auto result = gp_optimize(space, [](const std::vector<double>&) {
        ObjectiveValue v;
        v.value = 4.2;
        return v;
    });
    CHECK(result.trace.size() == 8);
    CHECK(result.best_value.value == 4.2);
}

TEST_CASE("gp_optimize is bit-reproducible under a fixed seed") {
    const auto space = space_1d(0.0, 10.0, 12, 99);
    const auto a = gp_optimize(space, concave_quadratic);
    const auto b = gp_optimize(space, concave_quadratic);
    CHECK(traces_equal(a, b));
    CHECK(a.best_params == b.best_params);

    // A different seed explores differently.
    const auto c = gp_optimize(space_1d(0.0, 10.0, 12, 100), concave_quadratic);
    CHECK(!traces_equal(a, c));
}

TEST_CASE("gp_optimize never returns less than its initial design best") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto space = space_1d(0.0, 10.0, 10, seed);
        std::vector<double> seen;
        const auto result = gp_optimize(space, [&](const std::vector<double>& p) {
            auto v = concave_quadratic(p);
            seen.push_back(v.value);
            return v;
        });
        const std::size_t design = std::max<std::size_t>(4, 2 * space.dimensions.size());
        const double design_best =
            *std::max_element(seen.begin(), seen.begin() + static_cast<std::ptrdiff_t>(design));
        CHECK(result.best_value.value >= design_best);
    }
}

TEST_CASE("integer dimensions are rounded at evaluation") {
    TuningSpace space;
    space.dimensions = {{"k", TuningDimension::Kind::integer, 1, 6}};
    space.budget = 10;
    space.seed = 3;
    const auto result = gp_optimize(space, [](const std::vector<double>& p) {
        ObjectiveValue v;
        CHECK(p[0] == std::nearbyint(p[0]));
        v.value = -std::abs(p[0] - 4.0);
        return v;
    });
    CHECK(result.best_params[0] == 4.0);
}

TEST_CASE("grid_search enumerates the lattice") {
    TuningSpace space;
    space.dimensions = {{"T_anom", TuningDimension::Kind::continuous, 0.0, 1.0},
                        {"k", TuningDimension::Kind::integer, 1, 3}};
    space.budget = 4;

    SUBCASE("single point") {
        const auto result = grid_search(space, {1, 1},
                                        [](const std::vector<double>& p) {
                                            ObjectiveValue v;
                                            v.value = p[0] + p[1];
                                            return v;
                                        });
        CHECK(result.trace.size() == 1);
        CHECK(result.best_params == std::vector<double>{0.0, 1.0});
    }
    SUBCASE("full integer range with the surface maximum on top") {
        const auto result = grid_search(space, {5, 3},
                                        [](const std::vector<double>& p) {
                                            ObjectiveValue v;
                                            v.value = p[0] * p[1];
                                            return v;
                                        });
        CHECK(result.trace.size() == 15);
        for (const auto& rec : result.trace) {
            CHECK(result.best_value.value >= rec.value.value);
        }
        CHECK(result.best_params == std::vector<double>{1.0, 3.0});
    }
    SUBCASE("cap exceeded") {
        CHECK_THROWS_AS(grid_search(space, {100, 3},
                                    [](const std::vector<double>&) { return ObjectiveValue{}; },
                                    100),
                        std::invalid_argument);
    }
}

TEST_CASE("grid incumbent reproduces under reevaluation") {
    TuningSpace space;
    space.dimensions = {{"T_anom", TuningDimension::Kind::continuous, 0.0, 1.0}};
    space.budget = 4;
    auto objective = [](const std::vector<double>& p) {
        ObjectiveValue v;
        v.value = std::sin(p[0] * 3.0) + 1.0;
        return v;
    };
    const auto result = grid_search(space, {17}, objective);
    CHECK(objective(result.best_params).value == result.best_value.value);
}

TEST_CASE("gp_optimize approaches the grid maximum on a smooth 2-D surface") {
    TuningSpace space;
    space.dimensions = {{"T_anom", TuningDimension::Kind::continuous, 0.0, 1.0},
                        {"k", TuningDimension::Kind::integer, 1, 6}};
    space.budget = 25;
    space.seed = 17;
    auto objective = [](const std::vector<double>& p) {
        ObjectiveValue v;
        // Smooth bump around (0.6, 4).
        v.value = std::exp(-8.0 * (p[0] - 0.6) * (p[0] - 0.6)) *
                  std::exp(-0.25 * (p[1] - 4.0) * (p[1] - 4.0));
        return v;
    };
    const auto gp = gp_optimize(space, objective);
    const auto grid = grid_search(space, {20, 6}, objective);
    CHECK(gp.best_value.value >= 0.95 * grid.best_value.value);
}

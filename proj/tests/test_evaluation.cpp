#include <doctest.h>

#include <algorithm>
#include <random>

#include "tdev/evaluation.hpp"
#include "test_helpers.hpp"

using namespace tdev;

namespace {

Alert alert_at(double start_s, double end_s, std::int64_t id = 0) {
    Alert a;
    a.id = id;
    a.start = seconds(start_s);
    a.end = seconds(end_s);
    return a;
}

EventInterval event_at(double start_s, double end_s) {
    return {seconds(start_s), seconds(end_s), EventInterval::Source::human_annotation};
}

DeviationSeries series_of(const std::vector<double>& scores) {
    DeviationSeries series;
    series.measure = Measure::euclidean_slide;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ScoreEntry e;
        e.timestamp = static_cast<TimePoint>(i) * kNanosPerSecond;
        e.score = scores[i];
        e.best_match_ts = e.timestamp;
        series.entries.push_back(e);
    }
    return series;
}

}  // namespace

TEST_CASE("evaluate applies the overlap definitions") {
    const std::vector<EventInterval> events{event_at(10, 20)};
    const std::vector<Alert> alerts{alert_at(12, 15, 0), alert_at(30, 35, 1)};
    const auto report = evaluate(alerts, events, 0);
    CHECK(*report.event_recall == 1.0);
    CHECK(*report.alert_tpr == 0.5);
    CHECK(*report.alert_fpr == 0.5);
    CHECK(report.counts.events_recalled == 1);
    CHECK(report.counts.alerts_true == 1);
    CHECK(report.counts.alerts_false == 1);
}

TEST_CASE("evaluate reports not-applicable on empty denominators") {
    SUBCASE("no alerts") {
        const auto report = evaluate({}, {event_at(0, 5)}, 0);
        CHECK(*report.event_recall == 0.0);
        CHECK(!report.alert_tpr);
        CHECK(!report.alert_fpr);
    }
    SUBCASE("no events") {
        const auto report = evaluate({alert_at(0, 5)}, {}, 0);
        CHECK(!report.event_recall);
        CHECK(*report.alert_fpr == 1.0);
    }
}

TEST_CASE("lead credits pre-event alerts") {
    const std::vector<EventInterval> events{event_at(10, 20)};
    const std::vector<Alert> alerts{alert_at(8, 9)};
    CHECK(*evaluate(alerts, events, 0).event_recall == 0.0);
    const auto credited = evaluate(alerts, events, seconds(2));
    CHECK(*credited.event_recall == 1.0);
    CHECK(*credited.alert_tpr == 1.0);
}

TEST_CASE("one alert can recall several events") {
    const std::vector<EventInterval> events{event_at(0, 5), event_at(8, 12)};
    const std::vector<Alert> alerts{alert_at(4, 9)};
    const auto report = evaluate(alerts, events, 0);
    CHECK(report.counts.events_recalled == 2);
    CHECK(*report.alert_fpr == 0.0);
}

TEST_CASE("every alert is counted exactly once") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Alert> alerts;
        for (int i = 0; i < 10; ++i) {
            const double start = test::urand(rng) * 100;
            alerts.push_back(alert_at(start, start + test::urand(rng) * 10,
                                      static_cast<std::int64_t>(i)));
        }
        std::vector<EventInterval> events;
        double cursor = 0;
        for (int i = 0; i < 4; ++i) {
            cursor += 5 + test::urand(rng) * 20;
            const double end = cursor + 1 + test::urand(rng) * 5;
            events.push_back(event_at(cursor, end));
            cursor = end;
        }
        const auto report = evaluate(alerts, events, 0);
        CHECK(report.counts.alerts_true + report.counts.alerts_false ==
              report.counts.alerts_total);

        // Permutation invariance.
        auto shuffled = alerts;
        std::reverse(shuffled.begin(), shuffled.end());
        const auto again = evaluate(shuffled, events, 0);
        CHECK(again.counts.alerts_true == report.counts.alerts_true);
        CHECK(again.counts.events_recalled == report.counts.events_recalled);
    }
}

TEST_CASE("threshold_sweep endpoints behave") {
    const auto scores = series_of({1, 2, 9, 2, 1});
    const std::vector<EventInterval> events{event_at(1, 3)};

    SUBCASE("threshold below the minimum gives one all-covering alert") {
        const auto sweep = threshold_sweep(scores, events, {0.5}, 0, 0);
        REQUIRE(sweep.size() == 1);
        CHECK(sweep[0].report.counts.alerts_total == 1);
        CHECK(*sweep[0].report.event_recall == 1.0);
    }
    SUBCASE("threshold above the maximum gives no alerts") {
        const auto sweep = threshold_sweep(scores, events, {100.0}, 0, 0);
        CHECK(sweep[0].report.counts.alerts_total == 0);
        CHECK(*sweep[0].report.event_recall == 0.0);
    }
    SUBCASE("separable synthetic attains recall 1 with zero false alerts") {
        const auto sweep = threshold_sweep(series_of({0, 0, 9, 0, 0}),
                                           {event_at(2, 2)}, {1, 5, 10}, 0, 0);
        bool perfect = false;
        for (const auto& point : sweep) {
            if (point.report.event_recall == 1.0 && point.report.alert_fpr == 0.0) perfect = true;
        }
        CHECK(perfect);
    }
    SUBCASE("recall is monotone nonincreasing in the threshold") {
        std::mt19937_64 rng(31);
        std::vector<double> values(60);
        for (auto& v : values) v = test::urand(rng) * 10;
        const auto random_scores = series_of(values);
        std::vector<double> thresholds;
        for (int i = 0; i <= 20; ++i) thresholds.push_back(i * 0.5);
        const auto sweep = threshold_sweep(random_scores, {event_at(5, 12), event_at(30, 41)},
                                           thresholds, 0, 0);
        for (std::size_t i = 1; i < sweep.size(); ++i) {
            CHECK(*sweep[i].report.event_recall <= *sweep[i - 1].report.event_recall);
        }
    }
    SUBCASE("empty or unsorted thresholds are rejected") {
        CHECK_THROWS_AS(threshold_sweep(scores, events, {}, 0, 0), std::invalid_argument);
        CHECK_THROWS_AS(threshold_sweep(scores, events, {2.0, 1.0}, 0, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("rescaling scores leaves the swept (recall, fpr) pairs unchanged") {
    std::mt19937_64 rng(37);
    std::vector<double> values(80);
    for (auto& v : values) v = test::urand(rng) * 10;
    const auto base = series_of(values);
    const std::vector<EventInterval> events{event_at(10, 20), event_at(50, 60)};

    const double scale = 7.5;
    auto scaled = base;
    for (auto& e : scaled.entries) e.score *= scale;

    // Thresholds swept over each series' own range.
    std::vector<double> thresholds, scaled_thresholds;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    for (int i = 0; i < 15; ++i) {
        const double t = *lo + (*hi - *lo) * i / 14.0;
        thresholds.push_back(t);
        scaled_thresholds.push_back(t * scale);
    }
    const auto sweep = threshold_sweep(base, events, thresholds, 0, 0);
    const auto scaled_sweep = threshold_sweep(scaled, events, scaled_thresholds, 0, 0);
    REQUIRE(sweep.size() == scaled_sweep.size());
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        CHECK(sweep[i].report.event_recall == scaled_sweep[i].report.event_recall);
        CHECK(sweep[i].report.alert_fpr == scaled_sweep[i].report.alert_fpr);
    }
}

TEST_CASE("risk_scatter joins and flags records") {
    std::vector<ScorePoint> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back({seconds(i), static_cast<double>(i)});
        b.push_back({seconds(i), static_cast<double>(i)});
    }

    SUBCASE("identical series sit on the diagonal") {
        const auto scatter = risk_scatter(a, b, {});
        REQUIRE(scatter.records.size() == 10);
        for (const auto& r : scatter.records) {
            CHECK(r.score_a == r.score_b);
            CHECK(!r.in_event);
        }
        CHECK(!scatter.upper_half_fraction_a);
    }
    SUBCASE("event flags and percentiles") {
        // Scores rise with time; the event covers the top of the range.
        const auto scatter = risk_scatter(a, b, {event_at(8, 9)});
        std::size_t flagged = 0;
        for (const auto& r : scatter.records) flagged += r.in_event ? 1 : 0;
        CHECK(flagged == 2);
        REQUIRE(scatter.upper_half_fraction_b);
        CHECK(*scatter.upper_half_fraction_b == 1.0);
        for (double pct : scatter.in_event_percentile_b) CHECK(pct >= 90.0);
    }
    SUBCASE("step alignment joins offset grids") {
        std::vector<ScorePoint> coarse{{seconds(0), 5.0}, {seconds(6), 7.0}};
        const auto scatter = risk_scatter(a, coarse, {});
        // Common span is [0, 6]; the union grid has a's 0..6 plus coarse's.
        REQUIRE(scatter.records.size() == 7);
        CHECK(scatter.records[3].score_b == 5.0);  // holds until the next point
        CHECK(scatter.records[6].score_b == 7.0);
    }
    SUBCASE("disjoint spans are rejected") {
        std::vector<ScorePoint> late{{seconds(100), 1.0}, {seconds(101), 1.0}};
        CHECK_THROWS_AS(risk_scatter(a, late, {}), std::invalid_argument);
    }
}

TEST_CASE("scatter puts maximal in-event deviation scores at percentile 100") {
    // Series B models deviation scores: in-event stamps score at the max.
    std::mt19937_64 rng(83);
    std::vector<ScorePoint> a, b;
    const std::vector<EventInterval> events{event_at(20, 24), event_at(40, 44)};
    for (int i = 0; i < 60; ++i) {
        a.push_back({seconds(i), test::urand(rng) * 0.5});
        const bool in_event = (i >= 20 && i <= 24) || (i >= 40 && i <= 44);
        b.push_back({seconds(i), in_event ? 10.0 : 0.1});
    }
    const auto scatter = risk_scatter(a, b, events);
    REQUIRE(!scatter.in_event_percentile_b.empty());
    for (double pct : scatter.in_event_percentile_b) CHECK(pct == 100.0);
    CHECK(*scatter.upper_half_fraction_b == 1.0);
}

#include <random>

#include "doctest.h"
#include "midthink/error.hpp"
#include "midthink/pareto.hpp"
#include "midthink/reference_data.hpp"
#include "oracles.hpp"

using namespace midthink;

TEST_SUITE("pareto") {

TEST_CASE("small example from the definition") {
    const std::vector<ParetoPoint> pts = {{"a", 100, 80}, {"b", 200, 90}, {"c", 150, 70}};
    const auto f = pareto_frontier(pts);
    REQUIRE(f.size() == 2);
    CHECK(f[0].label == "a");
    CHECK(f[1].label == "b");
}

TEST_CASE("single point and duplicates") {
    const std::vector<ParetoPoint> one = {{"x", 5, 5}};
    CHECK(pareto_frontier(one) == one);
    const std::vector<ParetoPoint> dup = {{"x", 5, 5}, {"y", 5, 5}};
    CHECK(pareto_frontier(dup).size() == 2);
    CHECK(pareto_frontier(std::vector<ParetoPoint>{}).empty());
}

TEST_CASE("frontier equals the O(n^2) dominance oracle on random sets") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 500;
        // Coarse grids force ties in both coordinates.
        const int len_levels = 1 + static_cast<int>(rng() % 60);
        const int acc_levels = 1 + static_cast<int>(rng() % 60);
        std::vector<ParetoPoint> pts;
        std::vector<oracle::Pt> raw;
        for (std::size_t i = 0; i < n; ++i) {
            const double len = 100.0 + 10.0 * static_cast<double>(rng() % len_levels);
            const double acc = 0.5 * static_cast<double>(rng() % acc_levels);
            pts.push_back({std::to_string(i), len, acc});
            raw.push_back({len, acc, i});
        }
        const auto got = pareto_frontier(pts);
        const auto want = oracle::dominance_frontier(raw);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k].label == std::to_string(want[k].idx));
            CHECK(got[k].avg_len == want[k].len);
            CHECK(got[k].accuracy == want[k].acc);
        }
        for (const auto& p : got)
            for (const auto& q : pts) CHECK_FALSE(dominates(q, p));
    }
}

TEST_CASE("budget curves need strictly increasing budgets in [0, 1]") {
    CHECK_THROWS_AS(make_curve(std::vector<CurveSample>{{0.5, 1, 1}, {0.5, 2, 2}}), InputError);
    CHECK_THROWS_AS(make_curve(std::vector<CurveSample>{{0.5, 1, 1}, {0.2, 2, 2}}), InputError);
    CHECK_THROWS_AS(make_curve(std::vector<CurveSample>{{1.5, 1, 1}}), InputError);
    const auto c = make_curve(std::vector<CurveSample>{{0, 10, 50}, {1, 20, 60}});
    CHECK(c.as_pareto_points()[1].label == "budget=1");
}

TEST_CASE("classification bands") {
    const auto curve = make_curve(std::vector<CurveSample>{{0.0, 100, 50}, {0.5, 200, 70}, {1.0, 400, 80}});
    SUBCASE("exactly on a segment") {
        const auto c = classify_point({"m", 150, 60}, curve);
        CHECK(c.position == FrontierPosition::on);
        CHECK(c.interpolated_accuracy == doctest::Approx(60.0));
        CHECK_FALSE(c.extrapolated);
    }
    SUBCASE("inside the epsilon band") {
        CHECK(classify_point({"m", 150, 60.4}, curve).position == FrontierPosition::on);
        CHECK(classify_point({"m", 150, 59.6}, curve).position == FrontierPosition::on);
    }
    SUBCASE("above and below") {
        CHECK(classify_point({"m", 300, 80}, curve).position == FrontierPosition::beyond);
        CHECK(classify_point({"m", 300, 70}, curve).position == FrontierPosition::below);
        CHECK(classify_point({"m", 300, 75.5}, curve, 0.0).position == FrontierPosition::beyond);
    }
    SUBCASE("outside the length range uses the nearest endpoint") {
        const auto lo = classify_point({"m", 50, 50}, curve);
        CHECK(lo.extrapolated);
        CHECK(lo.position == FrontierPosition::on);
        const auto hi = classify_point({"m", 900, 79}, curve);
        CHECK(hi.extrapolated);
        CHECK(hi.position == FrontierPosition::below);
    }
    SUBCASE("nearest budget by accuracy, ties to the lower budget") {
        CHECK(classify_point({"m", 150, 69}, curve).nearest_budget == 0.5);
        CHECK(classify_point({"m", 150, 75}, curve).nearest_budget == 0.5);
    }
    CHECK_THROWS_AS(classify_point({"m", 1, 1}, make_curve(std::vector<CurveSample>{{0, 1, 1}})), InputError);
}

TEST_CASE("interpolation agrees with an independent polyline oracle") {
    std::mt19937 rng(5);
    for (int t = 0; t < 200; ++t) {
        std::vector<CurveSample> s;
        std::vector<std::pair<double, double>> poly;
        double len = 50.0;
        const int k = 2 + static_cast<int>(rng() % 8);
        for (int i = 0; i < k; ++i) {
            len += 1.0 + static_cast<double>(rng() % 500);
            const double acc = static_cast<double>(rng() % 1000) / 10.0;
            s.push_back({static_cast<double>(i) / (k - 1), len, acc});
            poly.emplace_back(len, acc);
        }
        const auto curve = make_curve(s);
        const double x = static_cast<double>(rng() % static_cast<unsigned>(len + 200));
        const auto c = classify_point({"p", x, 50.0}, curve);
        CHECK(c.interpolated_accuracy == doctest::Approx(oracle::interpolate(poly, x)));
    }
}

TEST_CASE("published Mid-Think points against published budget curves") {
    const auto gpqa = reference_curve("Qwen3-14B", "GPQA");
    const auto g = classify_point({"mid_think_reason", 1763.0, 53.9}, gpqa);
    CHECK(g.position == FrontierPosition::beyond);
    CHECK_FALSE(g.extrapolated);

    const auto math = reference_curve("Qwen3-14B", "MATH500");
    const auto m = classify_point({"mid_think_reason", 2589.8, 92.1}, math);
    CHECK((m.nearest_budget == 0.4 || m.nearest_budget == 0.5));
}

}

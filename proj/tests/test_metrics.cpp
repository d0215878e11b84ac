#include <stdexcept>
#include <cmath>
#include <random>

#include <doctest.h>

#include "explab/metrics.hpp"
#include "oracles.hpp"

using namespace explab;

TEST_CASE("auroc and auprc worked examples") {
    CHECK(auroc({{0.9, 0.8, 0.4, 0.3}, {1, 1, 0, 0}}) == 1.0);
    CHECK(auroc({{0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}}) == 0.75);
    CHECK(auroc({{0.5, 0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1, 0}}) == 0.5);
    CHECK(auprc({{0.9, 0.1}, {1, 0}}) == 1.0);
    CHECK(auprc({{0.9, 0.1}, {0, 1}}) == 0.5);
    CHECK(auprc({{0.9, 0.8, 0.4, 0.3}, {1, 1, 0, 0}}) == 1.0);
}

TEST_CASE("single-class input names the missing class") {
    try {
        (void)auroc({{0.1, 0.2}, {1, 1}});
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("negative") != std::string::npos);
    }
    try {
        (void)auprc({{0.1, 0.2}, {0, 0}});
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("positive") != std::string::npos);
    }
    CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1}}), std::invalid_argument);
    CHECK_THROWS_AS(auroc({{0.1, 0.2}, {1, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(auroc({{}, {}}), std::invalid_argument);
}

TEST_CASE("metrics agree with brute-force oracles on random instances") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto d = oracle::random_instance(rng, 50);
        CAPTURE(i);
        CHECK(std::abs(auroc(d) - oracle::auroc_pairs(d)) <= 1e-12);
        CHECK(std::abs(auprc(d) - oracle::auprc_walk(d)) <= 1e-12);
        const auto roc = roc_points(d);
        CHECK(std::abs(trapezoid_area(roc) - auroc(d)) <= 1e-12);
    }
}

TEST_CASE("roc and pr curve shapes") {
    const LabeledScores perfect{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}};
    const auto roc = roc_points(perfect);
    CHECK(roc.front().x == 0.0);
    CHECK(roc.front().y == 0.0);
    CHECK(roc.back().x == 1.0);
    CHECK(roc.back().y == 1.0);
    bool corner = false;
    for (const auto& p : roc) corner = corner || (p.x == 0.0 && p.y == 1.0);
    CHECK(corner);

    const auto flat = roc_points({{0.3, 0.3, 0.3}, {1, 0, 1}});
    REQUIRE(flat.size() == 2);
    CHECK(flat[1].x == 1.0);
    CHECK(flat[1].y == 1.0);

    const auto pr = pr_points(perfect);
    REQUIRE(!pr.empty());
    CHECK(pr.back().x == 1.0);
    for (const auto& p : pr) {
        CHECK(p.x >= 0.0);
        CHECK(p.x <= 1.0);
        CHECK(p.y > 0.0);
        CHECK(p.y <= 1.0);
    }
}

TEST_CASE("auroc invariances") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        LabeledScores d;
        for (int i = 0; i < 40; ++i) {
            d.labels.push_back(i % 3 == 0 ? 1 : 0);
            d.scores.push_back(normal(rng) + d.labels.back());
        }
        const double base = auroc(d);
        LabeledScores e = d, a = d, flipped = d;
        for (auto& s : e.scores) s = std::exp(s);
        for (auto& s : a.scores) s = 4.0 * s - 3.0;
        for (auto& l : flipped.labels) l = 1 - l;
        CHECK(auroc(e) == doctest::Approx(base).epsilon(1e-14));
        CHECK(auroc(a) == doctest::Approx(base).epsilon(1e-14));
        CHECK(base + auroc(flipped) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("sorted_quantile interpolates linearly") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(sorted_quantile(v, 0.0) == 1.0);
    CHECK(sorted_quantile(v, 1.0) == 5.0);
    CHECK(sorted_quantile(v, 0.5) == 3.0);
    CHECK(sorted_quantile(v, 0.125) == 1.5);
}

namespace {

LabeledScores gaussian_scores(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    LabeledScores d;
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(static_cast<int>(i % 2));
        d.scores.push_back(normal(rng) + 0.8 * d.labels.back());
    }
    return d;
}

} // namespace

TEST_CASE("bootstrap intervals") {
    const LabeledScores perfect{{0.9, 0.8, 0.7, 0.3, 0.2, 0.1}, {1, 1, 1, 0, 0, 0}};
    const auto p = bootstrap_ci(perfect, Metric::Auroc, {.n_boot = 500, .seed = 1});
    CHECK(p.point == 1.0);
    CHECK(p.ci_low == 1.0);
    CHECK(p.ci_high == 1.0);
    CHECK(p.redrawn > 0);
    CHECK(p.n_boot == 500);

    const auto small = bootstrap_ci(gaussian_scores(200, 1), Metric::Auroc, {.seed = 3});
    const auto large = bootstrap_ci(gaussian_scores(2000, 1), Metric::Auroc, {.seed = 3});
    CHECK(small.ci_high - small.ci_low > large.ci_high - large.ci_low);
    CHECK(small.ci_low <= small.ci_high);

    for (Metric m : {Metric::Auroc, Metric::Auprc}) {
        const auto d = gaussian_scores(300, 5);
        const auto a = bootstrap_ci(d, m, {.n_boot = 200, .seed = 9, .threads = 1});
        const auto b = bootstrap_ci(d, m, {.n_boot = 200, .seed = 9, .threads = 4});
        CHECK(a.point == b.point);
        CHECK(a.ci_low == b.ci_low);
        CHECK(a.ci_high == b.ci_high);
        CHECK(a.redrawn == b.redrawn);
    }
    CHECK_THROWS_AS(bootstrap_ci({{0.1, 0.2}, {1, 1}}, Metric::Auroc), std::invalid_argument);
}

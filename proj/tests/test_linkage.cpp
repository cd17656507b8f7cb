#include <doctest.h>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "parcelsteer/linkage.hpp"
#include "parcelsteer/partition.hpp"
#include "test_support.hpp"

using namespace parcelsteer;

namespace {

std::vector<std::vector<double>> four_point() {
    // items 0,1 at 0.1; items 2,3 at 0.2; every cross pair at 0.9
    std::vector<std::vector<double>> d(4, std::vector<double>(4, 0.9));
    for (int i = 0; i < 4; ++i) d[i][i] = 0.0;
    d[0][1] = d[1][0] = 0.1;
    d[2][3] = d[3][2] = 0.2;
    return d;
}

struct Merge {
    std::vector<std::size_t> a, b;
    double dist;
};

/// Enumerates every complete merge order over n items and keeps the orders
/// in which each step joins a pair at the minimal max-linkage distance.
std::vector<std::vector<Merge>> greedy_orders(const std::vector<std::vector<double>>& d) {
    std::vector<std::vector<Merge>> found;
    std::vector<Merge> path;
    std::function<void(std::vector<std::vector<std::size_t>>)> rec = [&](std::vector<std::vector<std::size_t>> cl) {
        if (cl.size() == 1) {
            found.push_back(path);
            return;
        }
        auto link = [&](const auto& x, const auto& y) {
            double m = 0.0;
            for (auto i : x)
                for (auto j : y) m = std::max(m, d[i][j]);
            return m;
        };
        double best = 1e300;
        for (std::size_t a = 0; a < cl.size(); ++a)
            for (std::size_t b = a + 1; b < cl.size(); ++b) best = std::min(best, link(cl[a], cl[b]));
        for (std::size_t a = 0; a < cl.size(); ++a)
            for (std::size_t b = a + 1; b < cl.size(); ++b) {
                const double l = link(cl[a], cl[b]);
                if (l != best) continue;
                auto next = cl;
                next[a].insert(next[a].end(), cl[b].begin(), cl[b].end());
                next.erase(next.begin() + static_cast<std::ptrdiff_t>(b));
                path.push_back({cl[a], cl[b], l});
                rec(next);
                path.pop_back();
            }
    };
    std::vector<std::vector<std::size_t>> init;
    for (std::size_t i = 0; i < d.size(); ++i) init.push_back({i});
    rec(init);
    return found;
}

} // namespace

TEST_CASE("two items merge once at their distance") {
    DistanceMatrix dm;
    dm.n = 2;
    dm.d = {0.37};
    dm.degenerate = {0, 0};
    const auto steps = complete_linkage(dm);
    REQUIRE(steps.size() == 1);
    CHECK(steps[0] == LinkageStep{0, 1, 0.37, 2});
}

TEST_CASE("four-point example matches the exhaustive merge-order oracle") {
    const auto d = four_point();
    const auto orders = greedy_orders(d);
    REQUIRE(orders.size() == 1);  // distinct distances: exactly one valid order
    const auto& o = orders[0];
    CHECK(o[0].dist == 0.1);
    CHECK(o[1].dist == 0.2);
    CHECK(o[2].dist == 0.9);

    const auto steps = complete_linkage(oracle::condensed(d));
    REQUIRE(steps.size() == 3);
    CHECK(steps[0] == LinkageStep{0, 1, 0.1, 2});
    CHECK(steps[1] == LinkageStep{2, 3, 0.2, 2});
    CHECK(steps[2] == LinkageStep{4, 5, 0.9, 4});
    CHECK(steps == oracle::complete_linkage(d));
}

TEST_CASE("random matrices match the brute-force oracle, ties included") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> size(2, 8);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t n = size(rng);
        const bool ties = trial % 2 == 1;
        const auto d = oracle::random_distances(rng, n, ties);
        const auto steps = complete_linkage(oracle::condensed(d));
        const auto expected = oracle::complete_linkage(d);
        REQUIRE(steps.size() == n - 1);
        CHECK(steps == expected);
        for (std::size_t k = 0; k + 1 < steps.size(); ++k) CHECK(steps[k].distance <= steps[k + 1].distance);
        CHECK(steps.back().size == n);
    }
}

TEST_CASE("all-equal distances merge in index order") {
    std::vector<std::vector<double>> d(5, std::vector<double>(5, 1.0));
    for (int i = 0; i < 5; ++i) d[i][i] = 0.0;
    const auto steps = complete_linkage(oracle::condensed(d));
    CHECK(steps[0] == LinkageStep{0, 1, 1.0, 2});
    CHECK(steps[1] == LinkageStep{5, 2, 1.0, 3});
    CHECK(steps == oracle::complete_linkage(d));
}

TEST_CASE("cut examples") {
    const auto d = four_point();
    const auto steps = complete_linkage(oracle::condensed(d));
    CHECK(cut_at_threshold(steps, 4, 0.0) == std::vector<int>{0, 1, 2, 3});
    CHECK(cut_at_threshold(steps, 4, 2.0) == std::vector<int>{0, 0, 0, 0});
    CHECK(cut_at_threshold(steps, 4, 0.5) == std::vector<int>{0, 0, 1, 1});
    // Inclusive threshold: a step exactly at t is applied.
    CHECK(cut_at_threshold(steps, 4, 0.1) == std::vector<int>{0, 0, 1, 2});
    CHECK(cut_at_threshold(steps, 4, 0.2) == std::vector<int>{0, 0, 1, 1});
    CHECK_THROWS_KIND(cut_at_threshold(steps, 4, -0.01), ErrorKind::ThresholdOutOfRange);
    CHECK_THROWS_KIND(cut_at_threshold(steps, 4, 2.01), ErrorKind::ThresholdOutOfRange);
}

TEST_CASE("cuts at t1 <= t2 refine each other") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> size(2, 30);
    std::uniform_real_distribution<double> thr(0.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = size(rng);
        const auto steps = complete_linkage(oracle::condensed(oracle::random_distances(rng, n, trial % 3 == 0)));
        double t1 = thr(rng), t2 = thr(rng);
        if (t1 > t2) std::swap(t1, t2);
        const auto fine = cut_at_threshold(steps, n, t1);
        const auto coarse = cut_at_threshold(steps, n, t2);
        CHECK(refines(fine, coarse));
        const auto singles = cut_at_threshold(steps, n, 0.0);
        const auto one = cut_at_threshold(steps, n, 2.0);
        CHECK(*std::max_element(one.begin(), one.end()) == 0);
        // Random distances are positive off the diagonal except on the tie grid.
        if (trial % 3 != 0) CHECK(static_cast<std::size_t>(*std::max_element(singles.begin(), singles.end())) == n - 1);
    }
}

TEST_CASE("refines detects violations") {
    CHECK(refines(std::vector<int>{0, 1, 2}, std::vector<int>{0, 0, 1}));
    CHECK_FALSE(refines(std::vector<int>{0, 0, 1}, std::vector<int>{0, 1, 1}));
}

TEST_CASE("adjusted Rand index matches the pair-counting oracle") {
    CHECK(adjusted_rand_index(std::vector<int>{0, 0, 1, 1}, std::vector<int>{5, 5, 2, 2}) == 1.0);
    CHECK(adjusted_rand_index(std::vector<int>{0, 0, 0}, std::vector<int>{1, 1, 1}) == 1.0);
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> n_items(2, 25), k(1, 6);
        const int n = n_items(rng);
        std::uniform_int_distribution<int> la(0, k(rng) - 1), lb(0, k(rng) - 1);
        std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (auto& v : a) v = la(rng);
        for (auto& v : b) v = lb(rng);
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::adjusted_rand_index(a, b)).epsilon(1e-12));
    }
}

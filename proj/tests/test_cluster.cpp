#include <algorithm>
#include <random>

#include <doctest.h>

#include "cdl/cluster.hpp"
#include "cdl/error.hpp"
#include "oracles.hpp"

using namespace cdl;

namespace {

std::map<int, double> as_values(const std::vector<double>& v) {
    std::map<int, double> values;
    for (std::size_t i = 0; i < v.size(); ++i) values[static_cast<int>(i)] = v[i];
    return values;
}

std::size_t count_df(const StrategyProfile& profile) {
    std::size_t n = 0;
    for (auto s : profile) n += s == Strategy::DF ? 1 : 0;
    return n;
}

// Merge clusters j and j+1 of an assignment, shifting higher labels down.
ClusterAssignment merge_adjacent(const ClusterAssignment& a, std::size_t j) {
    ClusterAssignment merged = a;
    merged.k = a.k - 1;
    for (auto& [id, cluster] : merged.labels) {
        (void)id;
        if (cluster > j) --cluster;
    }
    merged.centers.clear(); // not needed for the strategy rule
    return merged;
}

} // namespace

TEST_CASE("k equal to the point count gives singletons with zero ss") {
    const auto values = as_values({3.0, -1.0, 7.5, 2.25});
    const auto a = kmeans_1d(values, 4);
    CHECK(a.within_cluster_ss == 0.0);
    std::vector<bool> used(4, false);
    for (const auto& [id, cluster] : a.labels) {
        (void)id;
        used[cluster] = true;
    }
    CHECK(std::all_of(used.begin(), used.end(), [](bool b) { return b; }));
}

TEST_CASE("identical values collapse to zero ss for any k") {
    const auto values = as_values({2.0, 2.0, 2.0, 2.0});
    CHECK(kmeans_1d(values, 1).within_cluster_ss == 0.0);
    CHECK(kmeans_1d(values, 1).centers == std::vector<double>{2.0});
    CHECK(kmeans_1d(values, 3).within_cluster_ss == 0.0);
}

TEST_CASE("the {1,2,10,11} example splits at the wide gap") {
    const auto values = as_values({1.0, 2.0, 10.0, 11.0});
    const auto a = kmeans_1d(values, 2);
    CHECK(a.labels.at(0) == 0);
    CHECK(a.labels.at(1) == 0);
    CHECK(a.labels.at(2) == 1);
    CHECK(a.labels.at(3) == 1);
    CHECK(a.within_cluster_ss == doctest::Approx(1.0));
    CHECK(a.centers[0] == doctest::Approx(1.5));
    CHECK(a.centers[1] == doctest::Approx(10.5));

    // brute force over the 3 contiguous splits agrees
    CHECK(a.within_cluster_ss == oracle::kmeans_brute_force({1.0, 2.0, 10.0, 11.0}, 2));
}

TEST_CASE("dynamic programming matches exhaustive search") {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 60; ++trial) {
        std::uniform_int_distribution<std::size_t> n_dist(2, 12);
        const std::size_t n = n_dist(rng);
        std::uniform_int_distribution<std::size_t> k_dist(1, std::min<std::size_t>(4, n));
        const std::size_t k = k_dist(rng);
        std::vector<double> raw(n);
        for (auto& v : raw) v = dist(rng);

        const auto a = kmeans_1d(as_values(raw), k);
        std::sort(raw.begin(), raw.end());
        CHECK(a.within_cluster_ss == oracle::kmeans_brute_force(raw, k));
    }
}

TEST_CASE("exact cost ties break toward the smaller left cluster") {
    const auto a = kmeans_1d(as_values({0.0, 1.0, 2.0}), 2);
    CHECK(a.labels.at(0) == 0); // {0} | {1,2}, not {0,1} | {2}
    CHECK(a.labels.at(1) == 1);
    CHECK(a.labels.at(2) == 1);
}

TEST_CASE("cluster structure is affine invariant") {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::map<int, double> values, scaled;
        for (int i = 0; i < 9; ++i) {
            const double v = dist(rng);
            values[i] = v;
            scaled[i] = 2.5 * v + 17.0;
        }
        for (std::size_t k = 1; k <= 4; ++k) {
            CHECK(kmeans_1d(values, k).labels == kmeans_1d(scaled, k).labels);
        }
    }
}

TEST_CASE("k outside [1, n] is rejected") {
    const auto values = as_values({1.0, 2.0});
    CHECK_THROWS_AS(kmeans_1d(values, 0), ContractViolation);
    CHECK_THROWS_AS(kmeans_1d(values, 3), ContractViolation);
}

TEST_CASE("choose_k finds two tight, far-apart groups") {
    const auto values = as_values({0.0, 0.1, 10.0, 10.1});
    CHECK(choose_k(values, 3) == 2);

    // hand silhouette for k = 2: outer points have a = 0.1, b = (10 + 10.1)/2;
    // inner points have a = 0.1, b = (9.9 + 10)/2
    const double outer = (10.05 - 0.1) / 10.05;
    const double inner = (9.95 - 0.1) / 9.95;
    const double hand = (2.0 * outer + 2.0 * inner) / 4.0;
    CHECK(mean_silhouette(values, kmeans_1d(values, 2)) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("choose_k on one tight group still reports its best k") {
    const auto values = as_values({0.0, 0.001, 0.002});
    CHECK(choose_k(values, 2) == 2); // only candidate, low silhouette
    CHECK(mean_silhouette(values, kmeans_1d(values, 2)) < 0.5);
}

TEST_CASE("fewer than three values force k = 1") {
    CHECK(choose_k(as_values({1.0, 9.0}), 5) == 1);
    CHECK(choose_k(as_values({4.0}), 5) == 1);
}

TEST_CASE("fair strategy cooperates inside shared clusters only") {
    SUBCASE("everyone together: All-CP") {
        const auto a = kmeans_1d(as_values({1.0, 1.1, 1.2, 0.9}), 1);
        const auto profile = fair_strategy(a);
        CHECK(count_df(profile) == 0);
    }
    SUBCASE("everyone apart: All-DF") {
        const auto a = kmeans_1d(as_values({1.0, 2.0, 4.0, 8.0}), 4);
        const auto profile = fair_strategy(a);
        CHECK(count_df(profile) == 4);
    }
    SUBCASE("an 8-member cluster and two singletons: 80% cooperation") {
        std::map<int, double> values;
        for (int i = 0; i < 8; ++i) values[i] = 1.0 + 0.01 * i;
        values[8] = 5.0;
        values[9] = 9.0;
        const auto a = kmeans_1d(values, 3);
        const auto profile = fair_strategy(a);
        REQUIRE(profile.size() == 10);
        for (int i = 0; i < 8; ++i) CHECK(profile[static_cast<std::size_t>(i)] == Strategy::CP);
        CHECK(profile[8] == Strategy::DF);
        CHECK(profile[9] == Strategy::DF);
    }
}

TEST_CASE("defector count equals the number of singleton clusters") {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::map<int, double> values;
        for (int i = 0; i < 8; ++i) values[i] = dist(rng);
        std::uniform_int_distribution<std::size_t> k_dist(1, 8);
        const auto a = kmeans_1d(values, k_dist(rng));
        std::size_t singletons = 0;
        for (std::size_t size : a.cluster_sizes()) singletons += size == 1 ? 1 : 0;
        CHECK(count_df(fair_strategy(a)) == singletons);
    }
}

TEST_CASE("merging clusters never creates defectors") {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::map<int, double> values;
        for (int i = 0; i < 7; ++i) values[i] = dist(rng);
        const auto a = kmeans_1d(values, 4);
        const std::size_t df_before = count_df(fair_strategy(a));
        for (std::size_t j = 0; j + 1 < a.k; ++j) {
            CHECK(count_df(fair_strategy(merge_adjacent(a, j))) <= df_before);
        }
    }
}

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cdl/strategy.hpp"

namespace cdl {

struct ClusterAssignment {
    std::size_t k = 0;
    std::map<int, std::size_t> labels; // participant id -> cluster index in [0, k)
    std::vector<double> centers;       // ascending; index matches cluster index
    double within_cluster_ss = 0.0;

    std::vector<std::size_t> cluster_sizes() const;
};

// Globally optimal 1-D k-means by dynamic programming over the sorted values
// (O(k n^2) with prefix sums). Deterministic; cost ties in boundary placement
// break toward the smaller left cluster. Equal values are ordered by id.
ClusterAssignment kmeans_1d(const std::map<int, double>& values, std::size_t k);

// Mean silhouette of an assignment over the same values (singleton clusters
// contribute 0).
double mean_silhouette(const std::map<int, double>& values, const ClusterAssignment& assignment);

// k maximizing mean silhouette over [2, min(k_max, n-1)], smallest k on ties;
// fewer than 3 values force k = 1.
std::size_t choose_k(const std::map<int, double>& values, std::size_t k_max);

// Cooperate iff your cluster holds at least one other participant. Choices are
// ordered by ascending participant id.
StrategyProfile fair_strategy(const ClusterAssignment& assignment);

} // namespace cdl

#include "cdl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cdl/error.hpp"

namespace cdl {

namespace {

// Within-cluster sum of squared deviations of sorted[first..last], computed
// the plain way (mean first, then squared deviations, left to right).
double segment_ss(const std::vector<double>& sorted, std::size_t first, std::size_t last) {
    double sum = 0.0;
    for (std::size_t i = first; i <= last; ++i) sum += sorted[i];
    const double mean = sum / static_cast<double>(last - first + 1);
    double ss = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        const double d = sorted[i] - mean;
        ss += d * d;
    }
    return ss;
}

} // namespace

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (const auto& [id, cluster] : labels) {
        (void)id;
        sizes[cluster]++;
    }
    return sizes;
}

ClusterAssignment kmeans_1d(const std::map<int, double>& values, std::size_t k) {
    const std::size_t n = values.size();
    if (k < 1 || k > n) {
        throw ContractViolation("kmeans_1d: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }

    std::vector<std::pair<double, int>> order; // (value, id), sorted
    order.reserve(n);
    for (const auto& [id, v] : values) {
        if (!std::isfinite(v)) throw ContractViolation("kmeans_1d: non-finite value for id " + std::to_string(id));
        order.emplace_back(v, id);
    }
    std::sort(order.begin(), order.end());
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = order[i].first;

    // Prefix sums give O(1) segment costs for the DP sweep.
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + sorted[i];
        pre2[i + 1] = pre2[i] + sorted[i] * sorted[i];
    }
    auto cost = [&](std::size_t first, std::size_t last) {
        const double cnt = static_cast<double>(last - first + 1);
        const double s = pre[last + 1] - pre[first];
        const double s2 = pre2[last + 1] - pre2[first];
        const double ss = s2 - s * s / cnt;
        return ss > 0.0 ? ss : 0.0;
    };

    // dp[j][m]: best cost of splitting sorted[0..m] into j+1 clusters.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(k, std::vector<double>(n, inf));
    std::vector<std::vector<std::size_t>> split(k, std::vector<std::size_t>(n, 0));
    for (std::size_t m = 0; m < n; ++m) dp[0][m] = cost(0, m);
    for (std::size_t j = 1; j < k; ++j) {
        for (std::size_t m = j; m < n; ++m) {
            // t = first index of the last cluster; scanned ascending so exact
            // ties keep the smaller left side
            for (std::size_t t = j; t <= m; ++t) {
                const double cand = dp[j - 1][t - 1] + cost(t, m);
                if (cand < dp[j][m]) {
                    dp[j][m] = cand;
                    split[j][m] = t;
                }
            }
        }
    }

    // Backtrack boundaries, then relabel in ascending-value order.
    std::vector<std::size_t> starts(k);
    {
        std::size_t m = n - 1;
        for (std::size_t j = k; j-- > 0;) {
            const std::size_t t = j == 0 ? 0 : split[j][m];
            starts[j] = t;
            if (j > 0) m = t - 1;
        }
    }

    ClusterAssignment out;
    out.k = k;
    out.centers.resize(k);
    double total_ss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t first = starts[j];
        const std::size_t last = j + 1 < k ? starts[j + 1] - 1 : n - 1;
        double sum = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            out.labels[order[i].second] = j;
            sum += sorted[i];
        }
        out.centers[j] = sum / static_cast<double>(last - first + 1);
        total_ss += segment_ss(sorted, first, last);
    }
    out.within_cluster_ss = total_ss;
    return out;
}

double mean_silhouette(const std::map<int, double>& values, const ClusterAssignment& assignment) {
    const std::size_t n = values.size();
    if (n == 0 || assignment.k < 2) return 0.0;

    std::vector<double> value_of;
    std::vector<std::size_t> cluster_of;
    value_of.reserve(n);
    cluster_of.reserve(n);
    for (const auto& [id, v] : values) {
        value_of.push_back(v);
        cluster_of.push_back(assignment.labels.at(id));
    }
    const auto sizes = assignment.cluster_sizes();

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[cluster_of[i]] < 2) continue; // singleton: s = 0
        std::vector<double> dist_sum(assignment.k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[cluster_of[j]] += std::fabs(value_of[i] - value_of[j]);
        }
        const double a = dist_sum[cluster_of[i]] / static_cast<double>(sizes[cluster_of[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < assignment.k; ++c) {
            if (c == cluster_of[i] || sizes[c] == 0) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

std::size_t choose_k(const std::map<int, double>& values, std::size_t k_max) {
    const std::size_t n = values.size();
    if (n < 3) return 1;
    const std::size_t hi = std::min(k_max, n - 1);
    if (hi < 2) return 1;

    std::size_t best_k = 2;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= hi; ++k) {
        const double score = mean_silhouette(values, kmeans_1d(values, k));
        if (score > best_score) { // strict: ties keep the smallest k
            best_score = score;
            best_k = k;
        }
    }
    return best_k;
}

StrategyProfile fair_strategy(const ClusterAssignment& assignment) {
    const auto sizes = assignment.cluster_sizes();
    StrategyProfile profile;
    profile.reserve(assignment.labels.size());
    for (const auto& [id, cluster] : assignment.labels) { // std::map: ascending id
        (void)id;
        profile.push_back(sizes[cluster] >= 2 ? Strategy::CP : Strategy::DF);
    }
    return profile;
}

} // namespace cdl

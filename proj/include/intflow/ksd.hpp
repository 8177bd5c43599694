#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "intflow/kernels.hpp"
#include "intflow/parallel.hpp"

namespace intflow {

struct KsdResult {
    double ustat;
    double bandwidth;
    int n_samples;
};

namespace detail {

// Exact k-th smallest (0-based) of the multiset of pairwise squared
// distances, without materializing it: bisection over the bit ordering of
// nonnegative doubles, counting pairs at or below the probe.  Returns the
// count at the located value as well, so a caller can tell whether the next
// order statistic coincides with it.
inline std::pair<double, std::size_t> kth_pair_distance_sq(const Eigen::MatrixXd& pts,
                                                           std::size_t k, double max_sq) {
    const int count = static_cast<int>(pts.rows());
    auto count_leq = [&](double t) {
        std::size_t c = 0;
        for (int i = 0; i < count; ++i)
            for (int j = i + 1; j < count; ++j)
                if ((pts.row(i) - pts.row(j)).squaredNorm() <= t) ++c;
        return c;
    };
    std::uint64_t lo = 0, hi = std::bit_cast<std::uint64_t>(max_sq);
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (count_leq(std::bit_cast<double>(mid)) >= k + 1)
            hi = mid;
        else
            lo = mid + 1;
    }
    const double value = std::bit_cast<double>(lo);
    return {value, count_leq(value)};
}

}  // namespace detail

// Median of the N(N-1)/2 pairwise Euclidean distances; an even count takes
// the mean of the two central order statistics.  Up to max_stored_pairs the
// distances are materialized and selected directly; beyond that an exact
// counting selection runs in O(N^2) memory-free passes.
inline double median_bandwidth(const Eigen::MatrixXd& points,
                               std::size_t max_stored_pairs = 20'000'000) {
    const int count = static_cast<int>(points.rows());
    if (count < 2) throw std::invalid_argument("median_bandwidth: need at least two points");
    if (!points.allFinite())
        throw std::invalid_argument("median_bandwidth: non-finite points");
    const std::size_t pairs = std::size_t(count) * (count - 1) / 2;
    const std::size_t lower = pairs / 2 - (pairs % 2 == 0 ? 1 : 0);

    double lo_sq, hi_sq;
    if (pairs <= max_stored_pairs) {
        std::vector<double> d2;
        d2.reserve(pairs);
        for (int i = 0; i < count; ++i)
            for (int j = i + 1; j < count; ++j)
                d2.push_back((points.row(i) - points.row(j)).squaredNorm());
        std::nth_element(d2.begin(), d2.begin() + lower, d2.end());
        lo_sq = d2[lower];
        if (pairs % 2 == 0) {
            hi_sq = *std::min_element(d2.begin() + lower + 1, d2.end());
        } else {
            hi_sq = lo_sq;
        }
    } else {
        double max_sq = 0.0;
        for (int i = 0; i < count; ++i)
            for (int j = i + 1; j < count; ++j)
                max_sq = std::max(max_sq, (points.row(i) - points.row(j)).squaredNorm());
        auto [value, at_or_below] = detail::kth_pair_distance_sq(points, lower, max_sq);
        lo_sq = value;
        if (pairs % 2 == 0 && at_or_below < lower + 2) {
            // The next order statistic is strictly larger: the smallest
            // squared distance above lo_sq.
            double next = max_sq;
            for (int i = 0; i < count; ++i)
                for (int j = i + 1; j < count; ++j) {
                    const double d = (points.row(i) - points.row(j)).squaredNorm();
                    if (d > lo_sq) next = std::min(next, d);
                }
            hi_sq = next;
        } else {
            hi_sq = lo_sq;
        }
    }
    if (lo_sq == 0.0 && hi_sq == 0.0) {
        double max_sq = 0.0;
        for (int i = 0; i < count && max_sq == 0.0; ++i)
            for (int j = i + 1; j < count; ++j)
                max_sq = std::max(max_sq, (points.row(i) - points.row(j)).squaredNorm());
        if (max_sq == 0.0) throw std::domain_error("median_bandwidth: all points coincident");
    }
    return pairs % 2 == 0 ? 0.5 * (std::sqrt(lo_sq) + std::sqrt(hi_sq)) : std::sqrt(lo_sq);
}

// One symmetric Stein-kernel term for the RBF kernel:
//   s_x.k.s_y + s_x.grad_y k + grad_x k.s_y + tr(grad_x grad_y k).
inline double stein_pair_term(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& sx, const Eigen::VectorXd& sy,
                              const RbfBandwidth& bw) {
    const int n = static_cast<int>(x.size());
    const double inv_s2 = 1.0 / (bw.sigma * bw.sigma);
    const Eigen::VectorXd d = x - y;
    const double r2 = d.squaredNorm();
    const double k = std::exp(-0.5 * r2 * inv_s2);
    return k * (sx.dot(sy) + inv_s2 * (sx.dot(d) - sy.dot(d)) +
                inv_s2 * (n - r2 * inv_s2));
}

// U-statistic of the kernelized Stein discrepancy:
//   (1/(N(N-1))) sum_{i != j} h(x_i, x_j)
// with h the symmetric term above, so the sum runs over unordered pairs and
// doubles.  Pairs are visited in a canonical order of the point set, making
// the result bit-identical under sample permutation and worker count.
template <class Score>
KsdResult ksd_ustat(const Eigen::MatrixXd& points, Score&& score, const RbfBandwidth& bw,
                    int n_threads = 1) {
    const int count = static_cast<int>(points.rows());
    const int n = static_cast<int>(points.cols());
    if (count < 2) throw std::invalid_argument("ksd_ustat: need at least two samples");
    if (!points.allFinite()) throw std::invalid_argument("ksd_ustat: non-finite points");

    Eigen::MatrixXd scores(count, n);
    for (int i = 0; i < count; ++i)
        scores.row(i) = score(Eigen::VectorXd(points.row(i).transpose())).transpose();
    if (!scores.allFinite()) throw std::invalid_argument("ksd_ustat: non-finite score values");

    std::vector<int> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (int c = 0; c < n; ++c)
            if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
        for (int c = 0; c < n; ++c)
            if (scores(a, c) != scores(b, c)) return scores(a, c) < scores(b, c);
        return false;
    });

    const double inv_s2 = 1.0 / (bw.sigma * bw.sigma);
    std::vector<double> partial(count, 0.0);
    parallel_for(0, count, n_threads, [&](int a) {
        const int i = order[a];
        double acc = 0.0;
        for (int b = a + 1; b < count; ++b) {
            const int j = order[b];
            double r2 = 0.0, ss = 0.0, sd = 0.0, ds = 0.0;
            for (int c = 0; c < n; ++c) {
                const double d = points(i, c) - points(j, c);
                r2 += d * d;
                ss += scores(i, c) * scores(j, c);
                sd += scores(i, c) * d;
                ds += scores(j, c) * d;
            }
            const double k = std::exp(-0.5 * r2 * inv_s2);
            acc += k * (ss + inv_s2 * (sd - ds) + inv_s2 * (n - r2 * inv_s2));
        }
        partial[a] = acc;
    });

    double total = 0.0;
    for (int a = 0; a < count; ++a) total += partial[a];
    KsdResult result;
    result.ustat = 2.0 * total / (double(count) * (count - 1));
    result.bandwidth = bw.sigma;
    result.n_samples = count;
    return result;
}

}  // namespace intflow

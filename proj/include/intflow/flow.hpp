#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "intflow/kernels.hpp"
#include "intflow/parallel.hpp"
#include "intflow/samples.hpp"

namespace intflow {

// Velocity vectors at the sample locations.  Magnitudes are meaningful only
// up to a positive constant (the density normalizer is unknown);
// scale_convention records which constant this build fixes.
struct FlowField {
    Eigen::MatrixXd vectors;
    std::vector<std::uint8_t> clipped;
    long long skipped_pairs = 0;
    std::string scale_convention = "coefficient-one";
};

namespace detail {

// Order samples by coordinates (ties broken by the channels).  Inner sums
// follow this order, so permuting input rows permutes the output bit for bit.
inline std::vector<int> canonical_order(const SampleSet& samples) {
    std::vector<int> order(samples.points.rows());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (Eigen::Index c = 0; c < samples.points.cols(); ++c) {
            if (samples.points(a, c) != samples.points(b, c))
                return samples.points(a, c) < samples.points(b, c);
        }
        if (samples.ell[a] != samples.ell[b]) return samples.ell[a] < samples.ell[b];
        return samples.delta_ell[a] < samples.delta_ell[b];
    });
    return order;
}

}  // namespace detail

// Pairwise Green's-function estimate of the transporting flow at the samples:
//   v_i = [ (N-1) exp(ell_i) ]^{-1} sum_{j != i} w_j G_n(x_j - x_i),
// with w the centered delta-ell channel.  The orientation x_j - x_i makes the
// resulting v p satisfy div(v p) = -delta p, which is the continuity equation
// for a density growing by delta p.  Pairs closer than pair_distance_floor
// are skipped and tallied.  exp(ell) is evaluated relative to max ell and the
// constant restored at the end, so a large common offset in ell cannot
// overflow; results are identical for any worker count.
inline FlowField estimate_flow(const SampleSet& samples, const Dim& dim,
                               double pair_distance_floor, int n_threads = 1) {
    validate(samples);
    const int count = static_cast<int>(samples.points.rows());
    const int n = dim.n;
    if (count < 2) throw std::invalid_argument("estimate_flow: need at least two samples");
    if (samples.points.cols() != n)
        throw std::invalid_argument("estimate_flow: point dimension does not match dim");
    if (!(pair_distance_floor > 0.0))
        throw std::invalid_argument("estimate_flow: pair_distance_floor must be positive");

    const std::vector<int> order = detail::canonical_order(samples);

    // Center delta-ell as residuals to the canonical first element minus
    // their mean; a constant channel gives exactly zero weights.
    const double base = samples.delta_ell[order[0]];
    double residual_mean = 0.0;
    for (int idx = 0; idx < count; ++idx) residual_mean += samples.delta_ell[order[idx]] - base;
    residual_mean /= count;
    Eigen::VectorXd w(count);
    for (int j = 0; j < count; ++j) w[j] = (samples.delta_ell[j] - base) - residual_mean;

    const double ell_max = samples.ell.maxCoeff();
    const double floor_sq = pair_distance_floor * pair_distance_floor;
    const auto& pts = samples.points;

    FlowField field;
    field.vectors.resize(count, n);
    field.clipped.assign(count, 0);
    std::vector<long long> skips(count, 0);

    parallel_for(0, count, n_threads, [&](int i) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        long long local_skips = 0;
        for (int idx = 0; idx < count; ++idx) {
            const int j = order[idx];
            if (j == i) continue;
            double r2 = 0.0;
            for (int a = 0; a < n; ++a) {
                const double d = pts(j, a) - pts(i, a);
                r2 += d * d;
            }
            if (r2 < floor_sq) {
                ++local_skips;
                continue;
            }
            const double scale = w[j] * dim.inv_sphere_area * std::pow(r2, -0.5 * n);
            for (int a = 0; a < n; ++a) acc[a] += scale * (pts(j, a) - pts(i, a));
        }
        const double coef = std::exp(ell_max - samples.ell[i]) / (count - 1);
        field.vectors.row(i) = (coef * acc).transpose();
        skips[i] = local_skips;
    });

    field.vectors *= std::exp(-ell_max);
    for (long long s : skips) field.skipped_pairs += s;
    return field;
}

// Monte Carlo form for a known normalized density:
//   v(x_i) = (1/p(x_i)) mean_j [ delta_p(z_j) / p(z_j) ] G_n(z_j - x_i),
// averaging over the source points actually used (coincident pairs within
// pair_distance_floor are skipped).
inline FlowField estimate_flow_normalized(const Eigen::MatrixXd& points,
                                          const Eigen::VectorXd& density_values,
                                          const Eigen::MatrixXd& source_points,
                                          const Eigen::VectorXd& source_density_values,
                                          const Eigen::VectorXd& delta_p_values, const Dim& dim,
                                          double pair_distance_floor = 1e-9) {
    const int count = static_cast<int>(points.rows());
    const int sources = static_cast<int>(source_points.rows());
    const int n = dim.n;
    if (count < 1 || sources < 1)
        throw std::invalid_argument("estimate_flow_normalized: empty input");
    if (points.cols() != n || source_points.cols() != n)
        throw std::invalid_argument("estimate_flow_normalized: dimension mismatch");
    if (density_values.size() != count || source_density_values.size() != sources ||
        delta_p_values.size() != sources)
        throw std::invalid_argument("estimate_flow_normalized: channel length mismatch");
    if (!(density_values.minCoeff() > 0.0) || !(source_density_values.minCoeff() > 0.0))
        throw std::invalid_argument("estimate_flow_normalized: densities must be positive");
    if (!points.allFinite() || !source_points.allFinite() || !delta_p_values.allFinite())
        throw std::invalid_argument("estimate_flow_normalized: non-finite input");

    const double floor_sq = pair_distance_floor * pair_distance_floor;
    FlowField field;
    field.vectors.resize(count, n);
    field.clipped.assign(count, 0);

    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
        int kept = 0;
        for (int j = 0; j < sources; ++j) {
            double r2 = 0.0;
            for (int a = 0; a < n; ++a) {
                const double d = source_points(j, a) - points(i, a);
                r2 += d * d;
            }
            if (r2 < floor_sq) continue;
            const double scale = (delta_p_values[j] / source_density_values[j]) *
                                 dim.inv_sphere_area * std::pow(r2, -0.5 * n);
            for (int a = 0; a < n; ++a) acc[a] += scale * (source_points(j, a) - points(i, a));
            ++kept;
        }
        if (kept == 0)
            throw std::invalid_argument("estimate_flow_normalized: no usable sources");
        field.vectors.row(i) = (acc / (kept * density_values[i])).transpose();
    }
    return field;
}

// Rescales vectors longer than factor times the median norm down to exactly
// that cap, preserving direction and flagging them.  A zero median (all-zero
// field) leaves the input unchanged.
inline FlowField clip_flow(const FlowField& field, double factor = 10.0) {
    const int count = static_cast<int>(field.vectors.rows());
    if (count < 1) throw std::invalid_argument("clip_flow: empty field");
    if (!(factor > 0.0)) throw std::invalid_argument("clip_flow: factor must be positive");

    std::vector<double> norms(count);
    for (int i = 0; i < count; ++i) norms[i] = field.vectors.row(i).norm();
    std::vector<double> sorted = norms;
    std::sort(sorted.begin(), sorted.end());
    const double median = (count % 2 == 1)
                              ? sorted[count / 2]
                              : 0.5 * (sorted[count / 2 - 1] + sorted[count / 2]);
    FlowField out = field;
    if (out.clipped.size() != static_cast<std::size_t>(count)) out.clipped.assign(count, 0);
    if (median == 0.0) return out;

    const double cap = factor * median;
    for (int i = 0; i < count; ++i) {
        if (norms[i] > cap) {
            out.vectors.row(i) *= cap / norms[i];
            out.clipped[i] = 1;
        }
    }
    return out;
}

// x_i + epsilon v_i; pure.
inline Eigen::MatrixXd apply_flow(const Eigen::MatrixXd& points, const FlowField& field,
                                  double epsilon) {
    if (points.rows() != field.vectors.rows() || points.cols() != field.vectors.cols())
        throw std::invalid_argument("apply_flow: shape mismatch");
    return points + epsilon * field.vectors;
}

}  // namespace intflow

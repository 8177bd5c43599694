#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace intflow {

// Cell-centered 2-D lattice: node (i, j) sits at (x(i), y(j)).
class GridSpec {
public:
    double x_min, x_max, y_min, y_max;
    int nx, ny;

    GridSpec(double x_min_, double x_max_, double y_min_, double y_max_, int nx_, int ny_)
        : x_min(x_min_), x_max(x_max_), y_min(y_min_), y_max(y_max_), nx(nx_), ny(ny_) {
        if (!(x_max > x_min) || !(y_max > y_min))
            throw std::invalid_argument("GridSpec: window must have positive extent");
        if (nx < 8 || ny < 8) throw std::invalid_argument("GridSpec: need at least 8 cells per axis");
    }

    double dx() const { return (x_max - x_min) / nx; }
    double dy() const { return (y_max - y_min) / ny; }
    double x(int i) const { return x_min + (i + 0.5) * dx(); }
    double y(int j) const { return y_min + (j + 0.5) * dy(); }
};

struct ScalarGrid {
    GridSpec spec;
    Eigen::MatrixXd values;  // nx x ny
};

struct VectorGrid {
    GridSpec spec;
    Eigen::MatrixXd vx, vy;  // nx x ny each
};

// Gaussian kernel density estimate on the grid nodes.  The kernel separates
// per axis, so the node-by-sample work is two small exp tables and one matrix
// product; no threading is involved and results do not depend on worker
// counts anywhere else in the pipeline.
inline ScalarGrid kde(const Eigen::MatrixXd& points, double bandwidth, const GridSpec& spec) {
    const int count = static_cast<int>(points.rows());
    if (count < 1 || points.cols() != 2) throw std::invalid_argument("kde: need N x 2 points");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
    const double inv_two_s2 = 1.0 / (2.0 * bandwidth * bandwidth);

    Eigen::MatrixXd ex(spec.nx, count), ey(spec.ny, count);
    for (int s = 0; s < count; ++s) {
        for (int i = 0; i < spec.nx; ++i) {
            const double d = spec.x(i) - points(s, 0);
            ex(i, s) = std::exp(-d * d * inv_two_s2);
        }
        for (int j = 0; j < spec.ny; ++j) {
            const double d = spec.y(j) - points(s, 1);
            ey(j, s) = std::exp(-d * d * inv_two_s2);
        }
    }
    const double coef = 1.0 / (count * 2.0 * M_PI * bandwidth * bandwidth);
    return {spec, coef * (ex * ey.transpose())};
}

// (kde(after) - kde(before)) / step: differencing transported samples against
// the originals and undoing the step size turns the pair of density
// estimates into an estimate on the delta-p scale.
inline ScalarGrid kde_difference(const Eigen::MatrixXd& before, const Eigen::MatrixXd& after,
                                 double bandwidth, const GridSpec& spec, double step) {
    if (before.rows() != after.rows() || before.cols() != after.cols())
        throw std::invalid_argument("kde_difference: point sets must match in shape");
    if (!(step > 0.0)) throw std::invalid_argument("kde_difference: step must be positive");
    ScalarGrid b = kde(before, bandwidth, spec);
    ScalarGrid a = kde(after, bandwidth, spec);
    return {spec, (a.values - b.values) / step};
}

// window x window median with truncated neighborhoods at the borders; an
// even truncated neighborhood takes the mean of the central pair.
inline ScalarGrid median_filter(const ScalarGrid& grid, int window = 3) {
    const int nx = static_cast<int>(grid.values.rows());
    const int ny = static_cast<int>(grid.values.cols());
    if (window < 3 || window % 2 == 0 || window > std::min(nx, ny))
        throw std::invalid_argument("median_filter: window must be odd, >= 3, <= grid size");
    const int half = window / 2;
    ScalarGrid out{grid.spec, Eigen::MatrixXd(nx, ny)};
    std::vector<double> buf;
    buf.reserve(std::size_t(window) * window);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            buf.clear();
            for (int a = std::max(0, i - half); a <= std::min(nx - 1, i + half); ++a)
                for (int b = std::max(0, j - half); b <= std::min(ny - 1, j + half); ++b)
                    buf.push_back(grid.values(a, b));
            const std::size_t m = buf.size() / 2;
            std::nth_element(buf.begin(), buf.begin() + m, buf.end());
            if (buf.size() % 2 == 1) {
                out.values(i, j) = buf[m];
            } else {
                const double hi = buf[m];
                out.values(i, j) = 0.5 * (*std::max_element(buf.begin(), buf.begin() + m) + hi);
            }
        }
    }
    return out;
}

namespace detail {

[[noreturn]] inline void bad_grid_value(double x, double y) {
    std::ostringstream msg;
    msg << "evaluate_on_grid: non-finite value at (" << x << ", " << y << ")";
    throw std::runtime_error(msg.str());
}

}  // namespace detail

template <class F>
ScalarGrid evaluate_on_grid(F&& f, const GridSpec& spec) {
    ScalarGrid out{spec, Eigen::MatrixXd(spec.nx, spec.ny)};
    for (int i = 0; i < spec.nx; ++i) {
        for (int j = 0; j < spec.ny; ++j) {
            const double v = f(spec.x(i), spec.y(j));
            if (!std::isfinite(v)) detail::bad_grid_value(spec.x(i), spec.y(j));
            out.values(i, j) = v;
        }
    }
    return out;
}

template <class F>
VectorGrid evaluate_vector_on_grid(F&& f, const GridSpec& spec) {
    VectorGrid out{spec, Eigen::MatrixXd(spec.nx, spec.ny), Eigen::MatrixXd(spec.nx, spec.ny)};
    for (int i = 0; i < spec.nx; ++i) {
        for (int j = 0; j < spec.ny; ++j) {
            const Eigen::Vector2d v = f(spec.x(i), spec.y(j));
            if (!v.allFinite()) detail::bad_grid_value(spec.x(i), spec.y(j));
            out.vx(i, j) = v[0];
            out.vy(i, j) = v[1];
        }
    }
    return out;
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_correlation: need two equal-length series");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0)
        throw std::domain_error("pearson_correlation: constant series");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace intflow

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "intflow/grid.hpp"
#include "intflow/mixture.hpp"
#include "intflow/parallel.hpp"

namespace intflow {

struct ContinuityReport {
    ScalarGrid residual;
    double relative_l2;
};

// Dense quadrature of the transported-mass field:
//   (v p)(g) = sum_cells delta_p(z) G_2(z - g) dA,
// the convolution whose divergence is -delta_p.  The self cell is skipped;
// its principal value vanishes by odd symmetry.
inline VectorGrid quadrature_field(const GaussianMixture& mix, const Perturbation& pert,
                                   const GridSpec& spec, int n_threads = 1) {
    if (mix.dim() != 2)
        throw std::invalid_argument("quadrature_field: 2-D mixtures only");
    mix.check_perturbation(pert);
    ScalarGrid dp = evaluate_on_grid(
        [&](double x, double y) { return mix.delta_p(pert, Eigen::Vector2d(x, y)); }, spec);

    const double cell = spec.dx() * spec.dy();
    const double inv_two_pi = 1.0 / (2.0 * M_PI);
    VectorGrid field{spec, Eigen::MatrixXd(spec.nx, spec.ny),
                     Eigen::MatrixXd(spec.nx, spec.ny)};
    parallel_for(0, spec.nx, n_threads, [&](int gi) {
        const double gx = spec.x(gi);
        for (int gj = 0; gj < spec.ny; ++gj) {
            const double gy = spec.y(gj);
            double ax = 0.0, ay = 0.0;
            for (int zi = 0; zi < spec.nx; ++zi) {
                const double dx = spec.x(zi) - gx;
                for (int zj = 0; zj < spec.ny; ++zj) {
                    if (zi == gi && zj == gj) continue;
                    const double dy = spec.y(zj) - gy;
                    const double w = dp.values(zi, zj) / (dx * dx + dy * dy);
                    ax += w * dx;
                    ay += w * dy;
                }
            }
            field.vx(gi, gj) = ax * inv_two_pi * cell;
            field.vy(gi, gj) = ay * inv_two_pi * cell;
        }
    });
    return field;
}

// Continuity check: residual = div(v p) + delta_p should vanish where the
// density carries mass.  The divergence uses central differences (one-sided
// at the borders); relative_l2 is ||residual|| / ||delta_p|| over cells with
// p > 1e-4 max p, and 0 when both norms vanish (zero perturbation).
inline ContinuityReport continuity_residual(const GaussianMixture& mix,
                                            const Perturbation& pert, const GridSpec& spec,
                                            int n_threads = 1) {
    if (spec.nx < 32 || spec.ny < 32)
        throw std::invalid_argument("continuity_residual: need at least 32 cells per axis");
    VectorGrid field = quadrature_field(mix, pert, spec, n_threads);
    ScalarGrid p = evaluate_on_grid(
        [&](double x, double y) { return std::exp(mix.log_density(Eigen::Vector2d(x, y))); },
        spec);
    ScalarGrid dp = evaluate_on_grid(
        [&](double x, double y) { return mix.delta_p(pert, Eigen::Vector2d(x, y)); }, spec);

    ScalarGrid residual{spec, Eigen::MatrixXd(spec.nx, spec.ny)};
    const double two_dx = 2.0 * spec.dx(), two_dy = 2.0 * spec.dy();
    for (int i = 0; i < spec.nx; ++i) {
        for (int j = 0; j < spec.ny; ++j) {
            double div_x, div_y;
            if (i == 0)
                div_x = (field.vx(1, j) - field.vx(0, j)) / spec.dx();
            else if (i == spec.nx - 1)
                div_x = (field.vx(i, j) - field.vx(i - 1, j)) / spec.dx();
            else
                div_x = (field.vx(i + 1, j) - field.vx(i - 1, j)) / two_dx;
            if (j == 0)
                div_y = (field.vy(i, 1) - field.vy(i, 0)) / spec.dy();
            else if (j == spec.ny - 1)
                div_y = (field.vy(i, j) - field.vy(i, j - 1)) / spec.dy();
            else
                div_y = (field.vy(i, j + 1) - field.vy(i, j - 1)) / two_dy;
            residual.values(i, j) = div_x + div_y + dp.values(i, j);
        }
    }

    const double cut = 1e-4 * p.values.maxCoeff();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < spec.nx; ++i) {
        for (int j = 0; j < spec.ny; ++j) {
            if (p.values(i, j) <= cut) continue;
            num += residual.values(i, j) * residual.values(i, j);
            den += dp.values(i, j) * dp.values(i, j);
        }
    }
    ContinuityReport report{std::move(residual), 0.0};
    if (den == 0.0) {
        if (num != 0.0)
            throw std::domain_error("continuity_residual: zero reference, nonzero residual");
        report.relative_l2 = 0.0;
    } else {
        report.relative_l2 = std::sqrt(num / den);
    }
    return report;
}

}  // namespace intflow

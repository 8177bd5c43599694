#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace intflow {

/** Ambient dimension with the kernel normalization constant cached.
 *
 * inv_sphere_area = Gamma(n/2) / (2 pi^{n/2}), the reciprocal surface area
 * of the unit (n-1)-sphere. It multiplies every Green's-function and
 * Coulomb-kernel evaluation, so it is computed once per Dim.
 */
struct Dim {
    int n;
    double inv_sphere_area;

    explicit Dim(int n_) : n(n_) {
        if (n_ < 2) throw std::invalid_argument("Dim: n must be >= 2");
        inv_sphere_area = std::tgamma(0.5 * n_) / (2.0 * std::pow(M_PI, 0.5 * n_));
    }
};

/// RBF kernel length scale; must be positive and finite.
struct RbfBandwidth {
    double sigma;
    RbfBandwidth(double s) : sigma(s) {
        if (!std::isfinite(s) || s <= 0.0)
            throw std::invalid_argument("RbfBandwidth: sigma must be positive and finite");
    }
};

/** Free-space Green's function of the divergence operator in n dimensions:
 *
 *   G_n(x) = Gamma(n/2) x / (2 pi^{n/2} |x|^n)
 *
 * Points along x-hat with magnitude inv_sphere_area / |x|^{n-1}. Odd in x,
 * equivariant under rotations, and scales as lambda^{1-n} in magnitude.
 */
template <class D>
Eigen::VectorXd greens_function(const Eigen::MatrixBase<D>& x, const Dim& dim) {
    if (!x.allFinite()) throw std::invalid_argument("greens_function: non-finite input");
    const double r = x.norm();
    if (r == 0.0) throw std::invalid_argument("greens_function: evaluated at the singularity");
    const double scale = dim.inv_sphere_area / std::pow(r, dim.n);
    return scale * x;
}

/** Coulomb potential in n >= 3 dimensions:
 *
 *   k_n(x, z) = Gamma(n/2) / (2 (n-2) pi^{n/2} |x-z|^{n-2})
 *
 * Its gradient in the source argument z equals greens_function(x - z).
 * Undefined at n = 2, where the potential is logarithmic (see
 * coulomb_kernel_2d).
 */
template <class DA, class DB>
double coulomb_kernel(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& z,
                      const Dim& dim) {
    if (dim.n == 2)
        throw std::domain_error("coulomb_kernel: n = 2 unsupported, use coulomb_kernel_2d");
    if (!x.allFinite() || !z.allFinite())
        throw std::invalid_argument("coulomb_kernel: non-finite input");
    const double r = (x - z).norm();
    if (r == 0.0) throw std::invalid_argument("coulomb_kernel: coincident points");
    return dim.inv_sphere_area / ((dim.n - 2) * std::pow(r, dim.n - 2));
}

/** Logarithmic potential -log|x-z| / (2 pi), the two-dimensional counterpart
 * of coulomb_kernel: its gradient in z equals greens_function(x - z, n=2).
 */
template <class DA, class DB>
double coulomb_kernel_2d(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& z) {
    if (!x.allFinite() || !z.allFinite())
        throw std::invalid_argument("coulomb_kernel_2d: non-finite input");
    const double r = (x - z).norm();
    if (r == 0.0) throw std::invalid_argument("coulomb_kernel_2d: coincident points");
    return -std::log(r) / (2.0 * M_PI);
}

/// exp(-|x-y|^2 / (2 sigma^2)); symmetric, in (0, 1].
template <class DA, class DB>
double rbf_kernel(const Eigen::MatrixBase<DA>& x, const Eigen::MatrixBase<DB>& y,
                  const RbfBandwidth& bw) {
    if (!x.allFinite() || !y.allFinite())
        throw std::invalid_argument("rbf_kernel: non-finite input");
    return std::exp(-(x - y).squaredNorm() / (2.0 * bw.sigma * bw.sigma));
}

struct RbfDerivatives {
    Eigen::VectorXd grad_x;
    Eigen::VectorXd grad_y;
    double trace_hessian_xy;
};

/** First derivatives and the trace of the mixed second derivative of the RBF
 * kernel:
 *
 *   grad_x = -(x-y)/sigma^2 k,   grad_y = -grad_x,
 *   tr(d^2 k / dx dy) = (n/sigma^2 - |x-y|^2/sigma^4) k
 */
template <class DA, class DB>
RbfDerivatives rbf_kernel_derivatives(const Eigen::MatrixBase<DA>& x,
                                      const Eigen::MatrixBase<DB>& y, const RbfBandwidth& bw) {
    const double k = rbf_kernel(x, y, bw);
    const double inv_s2 = 1.0 / (bw.sigma * bw.sigma);
    RbfDerivatives d;
    d.grad_x = (-inv_s2 * k) * (x - y);
    d.grad_y = -d.grad_x;
    d.trace_hessian_xy = (x.size() * inv_s2 - (x - y).squaredNorm() * inv_s2 * inv_s2) * k;
    return d;
}

}  // namespace intflow

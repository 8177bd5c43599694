#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "intflow/rng.hpp"
#include "intflow/samples.hpp"

namespace intflow {

struct GaussianComponent {
    double weight;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// A perturbation of the mixture parameters: component c's mean moves by
// scale * mean_shifts[c] per unit of fictitious time.
struct Perturbation {
    std::vector<Eigen::VectorXd> mean_shifts;
    double scale = 1.0;
};

// Finite Gaussian mixture with full covariances.  Construction validates the
// parameters (positive weights summing to one, symmetric positive definite
// covariances, consistent dimensions) and caches each component's Cholesky
// factor, inverse, and log-normalizer; all queries afterwards are cheap.
class GaussianMixture {
public:
    explicit GaussianMixture(std::vector<GaussianComponent> components)
        : components_(std::move(components)) {
        if (components_.empty())
            throw std::invalid_argument("GaussianMixture: no components");
        dim_ = static_cast<int>(components_[0].mean.size());
        double weight_sum = 0.0;
        for (const auto& comp : components_) {
            if (!(comp.weight > 0.0))
                throw std::invalid_argument("GaussianMixture: weights must be positive");
            weight_sum += comp.weight;
            if (comp.mean.size() != dim_ || comp.cov.rows() != dim_ || comp.cov.cols() != dim_)
                throw std::invalid_argument("GaussianMixture: inconsistent dimensions");
            if (!comp.mean.allFinite() || !comp.cov.allFinite())
                throw std::invalid_argument("GaussianMixture: non-finite parameters");
            const double scale = comp.cov.cwiseAbs().maxCoeff();
            if ((comp.cov - comp.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw std::invalid_argument("GaussianMixture: covariance not symmetric");
        }
        if (std::abs(weight_sum - 1.0) > 1e-12)
            throw std::invalid_argument("GaussianMixture: weights must sum to one");

        const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);
        for (const auto& comp : components_) {
            Eigen::LLT<Eigen::MatrixXd> llt(comp.cov);
            Eigen::MatrixXd chol = llt.matrixL();
            if (llt.info() != Eigen::Success || !(chol.diagonal().minCoeff() > 0.0))
                throw std::invalid_argument(
                    "GaussianMixture: covariance not positive definite");
            chol_.push_back(chol);
            inv_.push_back(llt.solve(Eigen::MatrixXd::Identity(dim_, dim_)));
            log_norm_.push_back(-dim_ * half_log_2pi - chol.diagonal().array().log().sum());
        }
    }

    int dim() const { return dim_; }
    std::size_t n_components() const { return components_.size(); }
    const GaussianComponent& component(std::size_t c) const { return components_[c]; }

    // Log-density of component c alone (without its weight).
    double component_log_density(std::size_t c, const Eigen::VectorXd& x) const {
        Eigen::VectorXd d = x - components_[c].mean;
        return log_norm_[c] - 0.5 * d.dot(inv_[c] * d);
    }

    double log_density(const Eigen::VectorXd& x) const {
        Eigen::VectorXd terms = weighted_log_terms(x);
        const double m = terms.maxCoeff();
        return m + std::log((terms.array() - m).exp().sum());
    }

    // Posterior component probabilities at x; nonnegative, summing to one.
    Eigen::VectorXd responsibilities(const Eigen::VectorXd& x) const {
        Eigen::VectorXd terms = weighted_log_terms(x);
        const double m = terms.maxCoeff();
        Eigen::VectorXd r = (terms.array() - m).exp();
        return r / r.sum();
    }

    Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r = responsibilities(x);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
        for (std::size_t c = 0; c < components_.size(); ++c)
            g += r[c] * (inv_[c] * (components_[c].mean - x));
        return g;
    }

    // d/dt log p(x) under the mean perturbation, evaluated at t = 0:
    // scale * sum_c r_c(x) shift_c . cov_c^{-1} (x - mean_c).
    double delta_ell(const Perturbation& pert, const Eigen::VectorXd& x) const {
        check_perturbation(pert);
        Eigen::VectorXd r = responsibilities(x);
        double total = 0.0;
        for (std::size_t c = 0; c < components_.size(); ++c)
            total += r[c] * pert.mean_shifts[c].dot(inv_[c] * (x - components_[c].mean));
        return pert.scale * total;
    }

    // d/dt p(x) = p(x) * delta_ell(x); the mean perturbation moves no mass in
    // or out, so this integrates to zero.
    double delta_p(const Perturbation& pert, const Eigen::VectorXd& x) const {
        return std::exp(log_density(x)) * delta_ell(pert, x);
    }

    struct Draw {
        Eigen::MatrixXd points;
        std::vector<int> component;
    };

    // Ancestral sampling: categorical component choice, then mean + L z with
    // z standard normal.  Single-threaded; a fixed seed fixes every byte.
    Draw sample_with_components(int count, std::uint64_t seed) const {
        if (count <= 0) throw std::invalid_argument("sample: count must be positive");
        std::mt19937_64 engine = make_engine(seed);
        std::vector<double> weights;
        for (const auto& comp : components_) weights.push_back(comp.weight);
        std::discrete_distribution<int> pick(weights.begin(), weights.end());
        std::normal_distribution<double> normal(0.0, 1.0);

        Draw draw;
        draw.points.resize(count, dim_);
        draw.component.resize(count);
        Eigen::VectorXd z(dim_);
        for (int i = 0; i < count; ++i) {
            const int c = pick(engine);
            for (int a = 0; a < dim_; ++a) z[a] = normal(engine);
            draw.points.row(i) = (components_[c].mean + chol_[c] * z).transpose();
            draw.component[i] = c;
        }
        return draw;
    }

    Eigen::MatrixXd sample(int count, std::uint64_t seed) const {
        return sample_with_components(count, seed).points;
    }

    // Axis-aligned box holding every component mean with a margin of k_std
    // standard deviations (largest covariance eigenvalue per component).
    std::pair<Eigen::VectorXd, Eigen::VectorXd> bounding_box(double k_std) const {
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim_, std::numeric_limits<double>::max());
        Eigen::VectorXd hi = -lo;
        for (std::size_t c = 0; c < components_.size(); ++c) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(components_[c].cov);
            const double margin = k_std * std::sqrt(eig.eigenvalues().maxCoeff());
            lo = lo.cwiseMin((components_[c].mean.array() - margin).matrix());
            hi = hi.cwiseMax((components_[c].mean.array() + margin).matrix());
        }
        return {lo, hi};
    }

    void check_perturbation(const Perturbation& pert) const {
        if (pert.mean_shifts.size() != components_.size())
            throw std::invalid_argument("Perturbation: one mean shift per component required");
        for (const auto& s : pert.mean_shifts)
            if (s.size() != dim_ || !s.allFinite())
                throw std::invalid_argument("Perturbation: shift dimension mismatch");
        if (!std::isfinite(pert.scale))
            throw std::invalid_argument("Perturbation: scale must be finite");
    }

private:
    Eigen::VectorXd weighted_log_terms(const Eigen::VectorXd& x) const {
        if (x.size() != dim_) throw std::invalid_argument("GaussianMixture: point dimension");
        Eigen::VectorXd terms(components_.size());
        for (std::size_t c = 0; c < components_.size(); ++c)
            terms[c] = std::log(components_[c].weight) + component_log_density(c, x);
        return terms;
    }

    std::vector<GaussianComponent> components_;
    std::vector<Eigen::MatrixXd> chol_;
    std::vector<Eigen::MatrixXd> inv_;
    std::vector<double> log_norm_;
    int dim_ = 0;
};

// The mixture whose means have moved a parameter-time epsilon along the
// perturbation: mean_c + epsilon * scale * shift_c.  Weights and covariances
// are unchanged.
inline GaussianMixture perturbed_mixture(const GaussianMixture& mix, const Perturbation& pert,
                                         double epsilon) {
    mix.check_perturbation(pert);
    std::vector<GaussianComponent> comps;
    for (std::size_t c = 0; c < mix.n_components(); ++c) {
        GaussianComponent comp = mix.component(c);
        comp.mean += epsilon * pert.scale * pert.mean_shifts[c];
        comps.push_back(std::move(comp));
    }
    return GaussianMixture(std::move(comps));
}

// One uniformly random unit mean shift per component.
inline Perturbation random_perturbation(const GaussianMixture& mix, double scale,
                                        std::uint64_t seed) {
    std::mt19937_64 engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Perturbation pert;
    pert.scale = scale;
    for (std::size_t c = 0; c < mix.n_components(); ++c) {
        Eigen::VectorXd s(mix.dim());
        do {
            for (int a = 0; a < mix.dim(); ++a) s[a] = normal(engine);
        } while (s.norm() == 0.0);
        pert.mean_shifts.push_back(s / s.norm());
    }
    return pert;
}

// Default perturbation magnitude: a tenth of the smallest component
// standard deviation, so the perturbed density stays close to the base.
inline double default_perturbation_scale(const GaussianMixture& mix) {
    double min_var = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < mix.n_components(); ++c) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mix.component(c).cov);
        min_var = std::min(min_var, eig.eigenvalues().minCoeff());
    }
    return 0.1 * std::sqrt(min_var);
}

// Draws count samples and evaluates both log-density channels at them.
inline SampleSet make_sample_set(const GaussianMixture& mix, const Perturbation& pert, int count,
                                 std::uint64_t seed) {
    SampleSet set;
    set.points = mix.sample(count, seed);
    set.ell.resize(count);
    set.delta_ell.resize(count);
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd x = set.points.row(i).transpose();
        set.ell[i] = mix.log_density(x);
        set.delta_ell[i] = mix.delta_ell(pert, x);
    }
    set.seed = seed;
    return set;
}

}  // namespace intflow

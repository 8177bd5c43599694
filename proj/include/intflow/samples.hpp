#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace intflow {

// A draw from the base density together with the per-point log-density
// channels the flow estimator consumes.  points is count x dim, row i is
// one sample; ell[i] and delta_ell[i] belong to row i.
struct SampleSet {
    Eigen::MatrixXd points;
    Eigen::VectorXd ell;
    Eigen::VectorXd delta_ell;
    std::uint64_t seed = 0;
};

inline void validate(const SampleSet& set) {
    if (set.points.rows() == 0) throw std::invalid_argument("SampleSet: empty");
    if (set.ell.size() != set.points.rows() || set.delta_ell.size() != set.points.rows())
        throw std::invalid_argument("SampleSet: channel lengths do not match points");
    if (!set.points.allFinite() || !set.ell.allFinite() || !set.delta_ell.allFinite())
        throw std::invalid_argument("SampleSet: non-finite entries");
}

}  // namespace intflow

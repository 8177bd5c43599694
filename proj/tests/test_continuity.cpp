#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cstring>

#include "intflow/continuity.hpp"

using intflow::GridSpec;

namespace {

intflow::GaussianMixture std_normal() {
    return intflow::GaussianMixture(
        {{1.0, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()}});
}

}  // namespace

TEST_CASE("zero perturbation gives a zero residual") {
    auto mix = std_normal();
    intflow::Perturbation zero{{Eigen::Vector2d::Zero()}, 1.0};
    auto report = intflow::continuity_residual(mix, zero, GridSpec(-5, 5, -5, 5, 48, 48));
    CHECK(report.residual.values.isZero(0.0));
    CHECK(report.relative_l2 == 0.0);
}

TEST_CASE("transported mass balances the density change") {
    auto mix = std_normal();
    intflow::Perturbation shift{{Eigen::Vector2d(1.0, 0.0)}, 1.0};
    auto report =
        intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 200, 200));
    CHECK(report.relative_l2 < 0.05);
}

TEST_CASE("doubling the resolution shrinks the residual") {
    auto mix = std_normal();
    intflow::Perturbation shift{{Eigen::Vector2d(0.6, 0.8)}, 0.5};
    auto coarse = intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 64, 64));
    auto fine = intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 128, 128));
    CHECK(fine.relative_l2 < coarse.relative_l2);
}

TEST_CASE("coarse grids are rejected") {
    auto mix = std_normal();
    intflow::Perturbation shift{{Eigen::Vector2d(1.0, 0.0)}, 1.0};
    CHECK_THROWS_AS(
        intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 16, 48)),
        std::invalid_argument);
}

TEST_CASE("worker count does not change the residual") {
    auto mix = std_normal();
    intflow::Perturbation shift{{Eigen::Vector2d(1.0, 0.0)}, 1.0};
    auto a = intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 48, 48), 1);
    auto b = intflow::continuity_residual(mix, shift, GridSpec(-5, 5, -5, 5, 48, 48), 4);
    CHECK(std::memcmp(a.residual.values.data(), b.residual.values.data(),
                      sizeof(double) * a.residual.values.size()) == 0);
    CHECK(a.relative_l2 == b.relative_l2);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qslab/rng.hpp"
#include "qslab/tilting.hpp"

using namespace qslab;

namespace {

const LatticePmf kRademacher = from_point_masses({{-1, 1.0}, {1, 1.0}});
const LatticePmf kQ3 = from_point_masses({{2, 1.0}, {3, 2.0}});

bool pointwise_close(const LatticePmf& a, const LatticePmf& b, double rel) {
    if (a.offset() != b.offset() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.probs()[i], y = b.probs()[i];
        if (std::fabs(x - y) > rel * std::max({std::fabs(x), std::fabs(y), 1e-300}))
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("tilt of the symmetric two-point law by ln 3") {
    const auto res = tilt(kRademacher, std::log(3.0));
    CHECK(res.gamma == Catch::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(res.tilted.at(1) == Catch::Approx(0.9).epsilon(1e-14));
    CHECK(res.tilted.at(-1) == Catch::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("tilt by zero is the exact identity") {
    const auto res = tilt(kQ3, 0.0);
    CHECK(res.gamma == 1.0);
    CHECK(res.log_gamma == 0.0);
    REQUIRE(res.tilted.size() == kQ3.size());
    for (std::size_t i = 0; i < kQ3.size(); ++i)
        CHECK(res.tilted.probs()[i] == kQ3.probs()[i]);
}

TEST_CASE("point masses are tilt invariant") {
    const auto res = tilt(LatticePmf::delta(3), 2.0);
    CHECK(res.tilted.size() == 1);
    CHECK(res.tilted.at(3) == 1.0);
    CHECK(res.gamma == Catch::Approx(std::exp(6.0)).epsilon(1e-14));
}

TEST_CASE("tilt overflow raises range_error") {
    const auto wide = from_point_masses({{0, 1.0}, {2000, 1.0}});
    CHECK_THROWS_AS(tilt(wide, 1.0), std::range_error);
    // gamma = e^{alpha k} beyond double range for a far point mass
    CHECK_THROWS_AS(tilt(LatticePmf::delta(2000), 1.0), std::range_error);
}

TEST_CASE("tilt composition matches a single tilt") {
    const auto one = tilt(tilt(kQ3, 0.35).tilted, 0.4);
    const auto two = tilt(kQ3, 0.75);
    CHECK(pointwise_close(one.tilted, two.tilted, 1e-12));
}

TEST_CASE("tilt commutes with convolution") {
    const auto p = from_point_masses({{-2, 1.0}, {0, 2.0}, {1, 3.0}});
    const auto q = from_point_masses({{-1, 2.0}, {3, 1.0}});
    const double alpha = 0.6;
    const auto lhs = tilt(convolve(p, q), alpha).tilted;
    const auto rhs = convolve(tilt(p, alpha).tilted, tilt(q, alpha).tilted);
    CHECK(pointwise_close(lhs, rhs, 1e-12));
}

TEST_CASE("tilted mean is increasing with derivative equal to tilted variance") {
    const auto p = from_point_masses({{-3, 1.0}, {-1, 2.0}, {0, 1.0}, {2, 2.0}, {4, 1.0}});
    const double h = 1e-4;
    double prev = -1e300;
    for (int i = 0; i <= 20; ++i) {
        const double alpha = -1.0 + 0.1 * i;
        const double mean = moments(tilt(p, alpha).tilted).mean;
        CHECK(mean > prev);
        prev = mean;
        const double mean_hi = moments(tilt(p, alpha + h).tilted).mean;
        const double mean_lo = moments(tilt(p, alpha - h).tilted).mean;
        const double derivative = (mean_hi - mean_lo) / (2.0 * h);
        const double variance = moments(tilt(p, alpha).tilted).variance;
        CHECK(derivative == Catch::Approx(variance).epsilon(1e-6));
    }
}

TEST_CASE("solve_tilt inverts the two-point tilt") {
    const double alpha = solve_tilt(kRademacher, 0.8, 1e-12);
    CHECK(alpha == Catch::Approx(std::log(3.0)).margin(1e-10));
    CHECK(moments(tilt(kRademacher, alpha).tilted).mean == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("solve_tilt at the current mean returns zero") {
    const double alpha = solve_tilt(kQ3, 8.0 / 3.0, 1e-12);
    CHECK(std::fabs(alpha) < 1e-10);
}

TEST_CASE("solve_tilt round trip on law(Q3)") {
    const double target = 8.0 / 3.0 + 0.25;
    const double alpha = solve_tilt(kQ3, target, 1e-10);
    CHECK(moments(tilt(kQ3, alpha).tilted).mean == Catch::Approx(target).margin(1e-10));
}

TEST_CASE("solve_tilt infeasible targets") {
    CHECK_THROWS_AS(solve_tilt(kQ3, 3.5, 1e-9), infeasible_error);
    CHECK_THROWS_AS(solve_tilt(LatticePmf::delta(5), 4.0, 1e-9), infeasible_error);
    CHECK(solve_tilt(LatticePmf::delta(5), 5.0, 1e-9) == 0.0);
}

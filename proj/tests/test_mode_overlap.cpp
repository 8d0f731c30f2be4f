#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fiberphase/mode_overlap.hpp"

using namespace fiberphase;
using Catch::Approx;

TEST_CASE("gaussian overlap ratio is exactly one half for every width") {
    for (double w : {0.3, 1.0, 2.6, 10.0}) {
        ModeProfile m;
        m.kind = ModeProfile::Kind::gaussian;
        m.width = w;
        REQUIRE(overlap_ratio(m).ratio == 0.5);
    }
}

TEST_CASE("nonlinearity parameter on the gaussian mode") {
    ModeProfile m;
    m.kind = ModeProfile::Kind::gaussian;
    m.width = 1.0;
    m.k0 = 1.0;
    m.beta0 = 1.0;
    REQUIRE(nonlinearity_parameter(1.0, m) == Approx(3.0 / 16.0));
    REQUIRE(nonlinearity_parameter(0.0, m) == 0.0);
    m.k0 = 2.0;
    m.beta0 = 4.0;
    // 3 * 4 / (8 * 4) * chi * 1/2
    REQUIRE(nonlinearity_parameter(2.0, m) == Approx(3.0 * 4.0 / 32.0 * 2.0 * 0.5));
}

TEST_CASE("tabulated gaussian quadrature reproduces the analytic ratio") {
    const auto m = tabulated_gaussian(1.0, 6.0, 513);
    const auto res = overlap_ratio(m, 1e-10);
    REQUIRE(std::abs(res.ratio - 0.5) < 1e-10);
    REQUIRE(res.error_estimate < 1e-10);
}

TEST_CASE("observed convergence order on refining grids is at least second order") {
    // Sample in the resolution band where the quadrature error is measurable:
    // the error against the analytic 1/2 must fall at order >= 2 per halving.
    const double w = 1.0, extent = 5.0;
    std::vector<double> errs;
    for (std::size_t n : {17u, 25u, 33u}) {
        const auto m = tabulated_gaussian(w, extent, n);
        const auto res = overlap_ratio(m, 1.0); // tolerance disabled for the study
        errs.push_back(std::abs(res.ratio - 0.5));
    }
    REQUIRE(errs[0] > errs[1]);
    REQUIRE(errs[1] > errs[2]);
    const double order = std::log(errs[0] / errs[2]) / std::log(2.0); // h halves from 17 to 33
    INFO("errors " << errs[0] << " " << errs[1] << " " << errs[2] << ", order " << order);
    REQUIRE(order >= 2.0);
}

TEST_CASE("a grid too coarse for the tolerance is a resolution error") {
    const auto m = tabulated_gaussian(1.0, 5.0, 9);
    REQUIRE_THROWS_WITH(overlap_ratio(m, 1e-10), Catch::Matchers::ContainsSubstring("too coarse"));
}

TEST_CASE("tabulated grids must be square, normalized and of valid size") {
    auto m = tabulated_gaussian(1.0, 5.0, 17);
    m.grid[8 * 17 + 8] = 2.0; // break the peak normalization
    REQUIRE_THROWS_AS(overlap_ratio(m), Error);

    auto odd = tabulated_gaussian(1.0, 5.0, 16); // (n-1) % 4 != 0
    REQUIRE_THROWS_AS(overlap_ratio(odd), Error);

    ModeProfile bad;
    bad.kind = ModeProfile::Kind::tabulated;
    bad.n = 3;
    bad.extent = 1.0;
    bad.grid = {1.0, 1.0, 1.0};
    REQUIRE_THROWS_AS(overlap_ratio(bad), Error);
}

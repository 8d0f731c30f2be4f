#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fiberphase/loop.hpp"

using namespace fiberphase;
using Catch::Approx;

namespace {

std::vector<Vec3> ellipse_nodes(std::size_t n, bool close) {
    std::vector<Vec3> v;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        v.push_back(Vec3{2.0 + 0.5 * std::cos(t), 0.3 * std::sin(t), 2.0 - 0.4 * std::cos(t)});
    }
    if (close) v.push_back(v.front());
    return v;
}

} // namespace

TEST_CASE("open paths are rejected, closed paths resampled to at least 512 nodes") {
    REQUIRE_THROWS_AS(ParameterLoop::from_nodes(ellipse_nodes(64, false)), Error);
    const auto loop = ParameterLoop::from_nodes(ellipse_nodes(64, true));
    REQUIRE(loop.size() >= 512);

    // arc-length uniformity of the resampled ring
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const double d = norm(loop.node(i + 1) - loop.node(i));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    REQUIRE(hi / lo < 1.05);
}

TEST_CASE("catmull-rom schedule interpolates the ring periodically") {
    const auto loop = ParameterLoop::from_nodes(ellipse_nodes(128, true), 512);
    const Vec3 p0 = loop.position(0.0);
    const Vec3 p1 = loop.position(1.0);
    REQUIRE(norm(p1 - p0) < 1e-12);
    REQUIRE(norm(p0 - loop.node(0)) < 1e-12);
    // interpolant stays near the polyline
    for (double s : {0.123, 0.5, 0.987})
        REQUIRE(discriminant_of(loop.position(s)) > 0.0);
}

TEST_CASE("hyperbolic cap family has constant discriminant") {
    const double omega = 1.3, chi = 0.6;
    const auto loop = ParameterLoop::hyperbolic_cap(omega, chi, 1024);
    REQUIRE(loop.cap_family().has_value());
    for (const auto& x : loop.nodes())
        REQUIRE(discriminant_of(x) == Approx(omega * omega).epsilon(1e-4));
    REQUIRE(loop.min_gamma() > 0.0);
}

TEST_CASE("planar circle family lies in the alpha + gamma plane with rim discriminant h^2 - r^2") {
    const double h = std::sqrt(2.0), r = 1.0;
    const auto loop = ParameterLoop::planar_circle(h, r, 512);
    for (const auto& x : loop.nodes()) {
        REQUIRE(x[0] + x[2] == Approx(2.0 * h).margin(1e-12));
        REQUIRE(discriminant_of(x) >= h * h - r * r - 1e-9);
    }
    REQUIRE(loop.min_discriminant_on_path() == Approx(h * h - r * r).margin(1e-4));
}

TEST_CASE("reversal preserves the node set and the anchor") {
    const auto loop = ParameterLoop::from_nodes(ellipse_nodes(64, true));
    const auto rev = loop.reversed();
    REQUIRE(rev.size() == loop.size());
    REQUIRE(norm(rev.node(0) - loop.node(0)) == 0.0);
    REQUIRE(norm(rev.node(1) - loop.node(loop.size() - 1)) == 0.0);
}

TEST_CASE("degenerate point loop is representable") {
    std::vector<Vec3> pts(8, Vec3{2.0, 0.1, 2.0});
    const auto loop = ParameterLoop::from_nodes(pts);
    REQUIRE(loop.size() >= 512);
    REQUIRE(norm(loop.position(0.37) - Vec3{2.0, 0.1, 2.0}) < 1e-12);
    const auto fan = build_planar_fan(loop);
    for (const auto& t : fan.triangles) REQUIRE(norm(t.vector_area()) == 0.0);
}

TEST_CASE("planar fan spans the loop with traversal-oriented triangles") {
    const auto loop = ParameterLoop::planar_circle(2.0, 1.0, 512);
    const auto fan = build_planar_fan(loop);
    REQUIRE(fan.triangles.size() == loop.size());
    // planar loop: all area vectors share the (1, 0, 1) normal direction
    for (const auto& t : fan.triangles) {
        const Vec3 a = t.vector_area();
        REQUIRE(a[0] == Approx(a[2]).margin(1e-12));
        REQUIRE(std::abs(a[1]) < 1e-12);
    }
    REQUIRE(fan.min_vertex_discriminant == Approx(3.0).epsilon(1e-3));
}

TEST_CASE("analytic cap shares the rim with the loop and stays on the hyperboloid") {
    const auto loop = ParameterLoop::hyperbolic_cap(1.0, 0.5, 512);
    const auto cap = build_analytic_cap(loop, 32);
    REQUIRE(cap.min_vertex_discriminant == Approx(1.0).epsilon(1e-3));
    REQUIRE_THROWS_AS(build_analytic_cap(ParameterLoop::planar_circle(2.0, 1.0), 8), Error);
}

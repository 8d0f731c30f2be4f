#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fiberphase/emt.hpp"

using namespace fiberphase;
using Catch::Approx;

namespace {

IsotropicCompositeSpec spec_of(double e1, double e2, double f, double g = 1.0 / 3.0, double chi = 1.0) {
    IsotropicCompositeSpec s;
    s.eps1 = e1;
    s.eps2 = e2;
    s.f = f;
    s.g = g;
    s.chi = chi;
    return s;
}

} // namespace

TEST_CASE("spherical-inclusion effective permittivity") {
    SECTION("host-only and inclusion-only limits") {
        REQUIRE(emt_isotropic(spec_of(12.0, 2.1, 0.0)) == Approx(2.1).epsilon(1e-12));
        REQUIRE(emt_isotropic(spec_of(12.0, 2.1, 1.0)) == Approx(12.0).epsilon(1e-12));
        REQUIRE(emt_isotropic(spec_of(5.5, 5.5, 0.37)) == Approx(5.5).epsilon(1e-12));
    }
    SECTION("silicon-in-silica working point") {
        // closed form: eps = (u + sqrt(u^2 + 8 e1 e2))/4, u = (3f-1)e1 + (2-3f)e2
        const double u = (3.0 * 0.2 - 1.0) * 12.0 + (2.0 - 3.0 * 0.2) * 2.1;
        const double expected = 0.25 * (u + std::sqrt(u * u + 8.0 * 12.0 * 2.1));
        const double got = emt_isotropic(spec_of(12.0, 2.1, 0.2));
        REQUIRE(got == Approx(expected).epsilon(1e-14));
        REQUIRE(got == Approx(3.115).epsilon(1e-3));
    }
    SECTION("residual certification on random specs") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> ue(0.5, 20.0), uf(0.0, 1.0);
        for (int i = 0; i < 200; ++i) {
            const auto s = spec_of(ue(rng), ue(rng), uf(rng));
            const double e = emt_isotropic(s);
            REQUIRE(std::abs(bruggeman_residual(s.eps1, s.eps2, s.f, 1.0 / 3.0, e)) < 1e-12);
        }
    }
}

TEST_CASE("general depolarization factor") {
    SECTION("reduces to the spherical closed form at g = 1/3") {
        std::mt19937_64 rng(32);
        std::uniform_real_distribution<double> ue(0.5, 20.0), uf(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const auto s = spec_of(ue(rng), ue(rng), uf(rng));
            REQUIRE(emt_general_g(s) == Approx(emt_isotropic(s)).epsilon(1e-14));
        }
    }
    SECTION("f = 0 returns the host for any g") {
        for (double g : {0.1, 0.25, 0.5, 0.8})
            REQUIRE(emt_general_g(spec_of(4.0, 2.0, 0.0, g)) == Approx(2.0).epsilon(1e-13));
    }
    SECTION("positive root with certified residual at g = 0.2") {
        const auto s = spec_of(4.0, 2.0, 0.5, 0.2);
        const double e = emt_general_g(s);
        REQUIRE(e > 0.0);
        REQUIRE(std::abs(bruggeman_residual(4.0, 2.0, 0.5, 0.2, e)) < 1e-12);
    }
}

TEST_CASE("monotonicity and bounds in the volume fraction") {
    auto scan = [](double e1, double e2) {
        double prev = emt_isotropic(spec_of(e1, e2, 0.0));
        for (int i = 1; i < 100; ++i) {
            const double f = static_cast<double>(i) / 99.0;
            const double e = emt_isotropic(spec_of(e1, e2, f));
            REQUIRE(e >= std::min(e1, e2) - 1e-12);
            REQUIRE(e <= std::max(e1, e2) + 1e-12);
            if (e1 > e2) REQUIRE(e > prev);
            if (e1 < e2) REQUIRE(e < prev);
            prev = e;
        }
    };
    scan(12.0, 2.1);
    scan(2.1, 12.0);
}

TEST_CASE("analytic derivative against the finite-difference cross-check") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> ue(0.5, 20.0), uf(0.01, 0.99), ug(0.1, 0.9);
    for (int i = 0; i < 100; ++i) {
        const auto s = spec_of(ue(rng), ue(rng), uf(rng), ug(rng));
        const double a = emt_derivative_eps1(s);
        const double fd = emt_derivative_eps1_fd(s);
        REQUIRE(a == Approx(fd).epsilon(1e-8).margin(1e-10));
    }
}

TEST_CASE("effective third-order susceptibility") {
    SECTION("f = 1 passes the inclusion chi through") {
        REQUIRE(chi3_effective_isotropic(spec_of(12.0, 2.1, 1.0, 1.0 / 3.0, 0.7)) == Approx(0.7).epsilon(1e-10));
    }
    SECTION("uniform medium gives the volume-fraction scaling f * chi") {
        for (double f : {0.1, 0.5, 0.9})
            REQUIRE(chi3_effective_isotropic(spec_of(3.3, 3.3, f, 1.0 / 3.0, 2.0)) ==
                    Approx(2.0 * f).epsilon(1e-8));
    }
    SECTION("f = 0 is undefined") {
        REQUIRE_THROWS_AS(chi3_effective_isotropic(spec_of(12.0, 2.1, 0.0)), Error);
    }
    SECTION("dilute limit recovers the squared Lorentz local-field factor") {
        const double e1 = 12.0, e2 = 2.1, f = 1e-6;
        const double lorentz = 3.0 * e2 / (e1 + 2.0 * e2);
        const double d = emt_derivative_eps1(spec_of(e1, e2, f));
        REQUIRE(d / f == Approx(lorentz * lorentz).epsilon(1e-4));
    }
}

TEST_CASE("field moment") {
    REQUIRE(field_moment(1.0, 1.0, 1.0) == Approx(1.0));
    // uniform-field limit: derivative = f gives <E^2> = applied^2
    REQUIRE(field_moment(0.3, 0.3, 2.0) == Approx(4.0));
    REQUIRE_THROWS_AS(field_moment(0.5, 0.0, 1.0), Error);
}

TEST_CASE("uniaxial crystallite dielectric tensor rotation") {
    UniaxialInclusionSpec u;
    u.eps_perp = 4.0;
    u.eps_par = 6.0;
    u.f = 0.3;
    u.eps_host = 2.0;

    SECTION("axis along z: diagonal") {
        u.theta = 0.0;
        const auto m = rotate_dielectric_tensor(u);
        REQUIRE(m[0][0] == Approx(4.0));
        REQUIRE(m[1][1] == Approx(4.0));
        REQUIRE(m[2][2] == Approx(6.0));
        REQUIRE(m[0][1] == Approx(0.0).margin(1e-14));
        REQUIRE(m[0][2] == Approx(0.0).margin(1e-14));
    }
    SECTION("axis along x") {
        u.theta = std::acos(0.0); // pi/2
        u.phi = 0.0;
        const auto m = rotate_dielectric_tensor(u);
        REQUIRE(m[0][0] == Approx(6.0));
        REQUIRE(m[1][1] == Approx(4.0));
        REQUIRE(m[2][2] == Approx(4.0).epsilon(1e-12));
    }
    SECTION("45-degree tilt puts (eps_par - eps_perp)/2 in the xz entry") {
        u.theta = std::acos(std::sqrt(0.5)); // pi/4
        u.phi = 0.0;
        const auto m = rotate_dielectric_tensor(u);
        REQUIRE(m[0][2] == Approx((6.0 - 4.0) / 2.0).epsilon(1e-12));
    }
    SECTION("trace, second invariant, determinant preserved for random angles") {
        std::mt19937_64 rng(34);
        std::uniform_real_distribution<double> ut(0.0, std::acos(-1.0)), up(0.0, 2.0 * std::acos(-1.0));
        const double tr_want = 2.0 * u.eps_perp + u.eps_par;
        const double det_want = u.eps_perp * u.eps_perp * u.eps_par;
        const double minor_want = u.eps_perp * u.eps_perp + 2.0 * u.eps_perp * u.eps_par;
        for (int i = 0; i < 100; ++i) {
            u.theta = ut(rng);
            u.phi = up(rng);
            const auto m = rotate_dielectric_tensor(u);
            const double tr = m[0][0] + m[1][1] + m[2][2];
            const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            const double minor = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) +
                                 (m[0][0] * m[2][2] - m[0][2] * m[2][0]) +
                                 (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
            REQUIRE(tr == Approx(tr_want).epsilon(1e-12));
            REQUIRE(det == Approx(det_want).epsilon(1e-11));
            REQUIRE(minor == Approx(minor_want).epsilon(1e-11));
        }
    }
}

TEST_CASE("aligned uniaxial effective medium") {
    UniaxialInclusionSpec u;
    u.eps_perp = 4.0;
    u.eps_par = 6.0;
    u.g = 1.0 / 3.0;
    u.eps_host = 2.0;

    SECTION("f = 1 recovers the inclusion tensor") {
        u.f = 1.0;
        const auto r = emt_uniaxial_aligned(u);
        REQUIRE(r.eps_e[0] == Approx(4.0).epsilon(1e-12));
        REQUIRE(r.eps_e[1] == Approx(4.0).epsilon(1e-12));
        REQUIRE(r.eps_e[2] == Approx(6.0).epsilon(1e-12));
    }
    SECTION("f = 0 recovers the host") {
        u.f = 0.0;
        const auto r = emt_uniaxial_aligned(u);
        for (int i = 0; i < 3; ++i) REQUIRE(r.eps_e[i] == Approx(2.0).epsilon(1e-12));
    }
    SECTION("isotropic collapse eps_perp = eps_par matches the scalar route") {
        u.f = 0.4;
        u.eps_par = u.eps_perp;
        const auto r = emt_uniaxial_aligned(u);
        const double iso = emt_general_g(spec_of(4.0, 2.0, 0.4, 1.0 / 3.0));
        for (int i = 0; i < 3; ++i) REQUIRE(r.eps_e[i] == Approx(iso).epsilon(1e-12));
    }
    SECTION("x-aligned permutes the axes") {
        u.f = 0.4;
        const auto rz = emt_uniaxial_aligned(u, AlignedAxis::z);
        const auto rx = emt_uniaxial_aligned(u, AlignedAxis::x);
        REQUIRE(rx.eps_e[0] == Approx(rz.eps_e[2]));
        REQUIRE(rx.eps_e[1] == Approx(rz.eps_e[0]));
        REQUIRE(rx.eps_e[2] == Approx(rz.eps_e[0]));
    }
    SECTION("per-axis residual certification") {
        u.f = 0.37;
        const auto r = emt_uniaxial_aligned(u);
        REQUIRE(std::abs(bruggeman_residual(u.eps_perp, u.eps_host, u.f, u.g, r.eps_e[0])) < 1e-12);
        REQUIRE(std::abs(bruggeman_residual(u.eps_par, u.eps_host, u.f, u.g, r.eps_e[2])) < 1e-12);
    }
    SECTION("worked point: f = 1, g = 1/3, eps_perp = 4, host = 2") {
        u.f = 1.0;
        // u_perp = (1 - 1/3)*4 + (1 - 1/3 - 1)*2 = 2; sqrt(4 + 64/9) = 10/3;
        // (2 + 10/3)/(4/3) = 4
        const auto r = emt_uniaxial_aligned(u);
        REQUIRE(r.eps_e[0] == Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("angle normalization lands in the canonical ranges") {
    UniaxialInclusionSpec u;
    u.eps_perp = 4.0;
    u.eps_par = 6.0;
    u.eps_host = 2.0;
    u.theta = -0.4;
    u.phi = 7.0;
    const auto n = u.normalized();
    REQUIRE(n.theta >= 0.0);
    REQUIRE(n.theta <= std::acos(-1.0));
    REQUIRE(n.phi >= 0.0);
    REQUIRE(n.phi < 2.0 * std::acos(-1.0));
    // same physical axis: the rotated tensor is unchanged
    const auto m1 = rotate_dielectric_tensor(u);
    const auto m2 = rotate_dielectric_tensor(n);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE(m1[i][j] == Approx(m2[i][j]).margin(1e-12));
}

TEST_CASE("input validation rejects unphysical specs") {
    REQUIRE_THROWS_AS(emt_isotropic(spec_of(-1.0, 2.0, 0.5)), Error);
    REQUIRE_THROWS_AS(emt_isotropic(spec_of(1.0, 2.0, 1.5)), Error);
    REQUIRE_THROWS_AS(emt_general_g(spec_of(1.0, 2.0, 0.5, 1.2)), Error);
}

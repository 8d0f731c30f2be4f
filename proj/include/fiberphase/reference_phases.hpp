#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fiberphase/errors.hpp"
#include "fiberphase/ode.hpp"

namespace fiberphase {

/// Point on the Poincare sphere in spherical coordinates,
/// theta in [0, pi], phi in [0, 2 pi).
struct SpherePoint {
    double theta = 0.0;
    double phi = 0.0;

    std::array<double, 3> unit() const {
        return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    }

    static SpherePoint normalized(double theta, double phi) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        theta = std::fmod(theta, two_pi);
        if (theta < 0.0) theta += two_pi;
        if (theta > std::numbers::pi) {
            theta = two_pi - theta;
            phi += std::numbers::pi;
        }
        phi = std::fmod(phi, two_pi);
        if (phi < 0.0) phi += two_pi;
        return SpherePoint{theta, phi};
    }
};

inline double reduce_principal(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(angle, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

namespace detail {

inline double triangle_solid_angle(const std::array<double, 3>& a, const std::array<double, 3>& b,
                                   const std::array<double, 3>& c) {
    const double triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                          a[2] * (b[0] * c[1] - b[1] * c[0]);
    const double ab = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const double bc = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
    const double ca = c[0] * a[0] + c[1] * a[1] + c[2] * a[2];
    const double den = 1.0 + ab + bc + ca;
    if (std::abs(triple) < 1e-14 && std::abs(den) < 1e-14)
        throw geometry_error("solid angle: triangulation hit an undefined geodesic (antipodal pair)");
    return 2.0 * std::atan2(triple, den);
}

} // namespace detail

/// Signed solid angle of a geodesic polygon, fan-triangulated from vertex 0.
/// Positive for counterclockwise traversal seen from outside the sphere.
inline double geodesic_polygon_solid_angle(std::span<const SpherePoint> vertices) {
    if (vertices.size() < 3) throw invalid_input_error("solid angle: need at least 3 vertices");
    std::vector<std::array<double, 3>> u;
    u.reserve(vertices.size());
    for (const auto& v : vertices) u.push_back(v.unit());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto& a = u[i];
        const auto& b = u[(i + 1) % u.size()];
        const double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        if (d < -1.0 + 1e-12)
            throw geometry_error("solid angle: adjacent vertices are antipodal; geodesic undefined");
    }
    double total = 0.0;
    for (std::size_t i = 1; i + 1 < u.size(); ++i)
        total += detail::triangle_solid_angle(u[0], u[i], u[i + 1]);
    return total;
}

/// Pancharatnam phase for a closed geodesic circuit: -Omega/2.
inline double pancharatnam_phase(std::span<const SpherePoint> vertices) {
    return -0.5 * geodesic_polygon_solid_angle(vertices);
}

/// Berry phase of the birefringent/gyrotropic waveguide axes for a full
/// phi circuit at fixed theta:
///   gamma(theta) = +/- 2 pi (1 - 2 cos(theta) / sqrt(sigma^2 sin^4 theta + 4 cos^2 theta)).
/// Both sign branches are returned (helicity eigenstates).
inline std::array<double, 2> berry_phase_gyrotropic(double theta, double sigma) {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double radicand = sigma * sigma * st * st * st * st + 4.0 * ct * ct;
    if (radicand <= 1e-24 * (sigma * sigma + 4.0))
        throw singularity_error("berry_phase_gyrotropic: radicand vanishes (degenerate axes)");
    const double val = 2.0 * std::numbers::pi * (1.0 - 2.0 * ct / std::sqrt(radicand));
    return {val, -val};
}

/// Pancharatnam-Berry phase of a retarder between optical-axis orientations
/// theta1, theta2 with retardation delta:
///   arg[cos^2(delta/2) + sin^2(delta/2) e^{2i(theta2 - theta1)}], principal value.
inline double pb_retarder_phase(double theta1, double theta2, double delta) {
    const double c2 = std::cos(0.5 * delta) * std::cos(0.5 * delta);
    const double s2 = std::sin(0.5 * delta) * std::sin(0.5 * delta);
    const std::complex<double> z = c2 + s2 * std::exp(std::complex<double>{0.0, 2.0 * (theta2 - theta1)});
    return std::arg(z); // (-pi, pi]
}

/// Nonlinear two-state system with Hamiltonian function H = n * Htilde(p),
/// p = |psi_2|^2 / n. p is a constant of motion and the evolution is
///   psi_k(t) = c_k exp(-i omega_k(p) t),
///   omega_1 = Htilde(p) - p Htilde'(p), omega_2 = Htilde(p) + (1 - p) Htilde'(p).
struct TwoStateSystem {
    std::function<double(double)> h;       // Htilde(p)
    std::function<double(double)> h_prime; // d Htilde / d p

    static TwoStateSystem polynomial(double k0, double k1, double k2) {
        return TwoStateSystem{[=](double p) { return k0 + k1 * p + k2 * p * p; },
                              [=](double p) { return k1 + 2.0 * k2 * p; }};
    }
};

struct TwoStateEvolution {
    std::complex<double> psi1, psi2;
    double p = 0.0;
    double omega1 = 0.0, omega2 = 0.0;
};

inline TwoStateEvolution weinberg_two_state(std::complex<double> c1, std::complex<double> c2,
                                            const TwoStateSystem& sys, double t) {
    const double n = std::norm(c1) + std::norm(c2);
    if (!(n > 0.0)) throw invalid_input_error("weinberg_two_state: zero norm");
    TwoStateEvolution ev;
    ev.p = std::norm(c2) / n;
    const double h = sys.h(ev.p), hp = sys.h_prime(ev.p);
    ev.omega1 = h - ev.p * hp;
    ev.omega2 = h + (1.0 - ev.p) * hp;
    ev.psi1 = c1 * std::exp(std::complex<double>{0.0, -ev.omega1 * t});
    ev.psi2 = c2 * std::exp(std::complex<double>{0.0, -ev.omega2 * t});
    return ev;
}

/// Direct ODE integration of i d(psi_k)/dt = dH/d(psi_k^*); cross-validates
/// the closed form.
inline TwoStateEvolution weinberg_two_state_ode(std::complex<double> c1, std::complex<double> c2,
                                                const TwoStateSystem& sys, double t,
                                                const OdeOptions& opt = OdeOptions{1e-12, 1e-12}) {
    const double n = std::norm(c1) + std::norm(c2);
    if (!(n > 0.0)) throw invalid_input_error("weinberg_two_state_ode: zero norm");
    auto rhs = [&](double, const std::array<double, 4>& y, std::array<double, 4>& dy) {
        const std::complex<double> p1{y[0], y[1]}, p2{y[2], y[3]};
        const double nn = std::norm(p1) + std::norm(p2);
        const double p = std::norm(p2) / nn;
        const double h = sys.h(p), hp = sys.h_prime(p);
        const std::complex<double> d1 = std::complex<double>{0.0, -1.0} * ((h - p * hp) * p1);
        const std::complex<double> d2 = std::complex<double>{0.0, -1.0} * ((h + (1.0 - p) * hp) * p2);
        dy = {d1.real(), d1.imag(), d2.real(), d2.imag()};
    };
    std::array<double, 4> y{c1.real(), c1.imag(), c2.real(), c2.imag()};
    TwoStateEvolution ev;
    if (t != 0.0) {
        const std::array<double, 2> grid{0.0, t};
        integrate_sampled<4>(rhs, grid, y, opt, [&](std::size_t, double, const std::array<double, 4>& s) {
            y = s;
        });
    }
    ev.psi1 = {y[0], y[1]};
    ev.psi2 = {y[2], y[3]};
    const double nn = std::norm(ev.psi1) + std::norm(ev.psi2);
    ev.p = std::norm(ev.psi2) / nn;
    return ev;
}

} // namespace fiberphase

#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fiberphase/errors.hpp"
#include "fiberphase/gho.hpp"
#include "fiberphase/loop.hpp"

namespace fiberphase {

/// Oriented tangent bivector, expressed on the basis
/// (dbeta^dgamma, dgamma^dalpha, dalpha^dbeta).
struct Bivector {
    double bg = 0.0;
    double ga = 0.0;
    double ab = 0.0;
};

namespace detail {

/// Flux density of the angle 2-form: W paired with a unit bivector equals
/// F(x) . n with F(x) = (alpha, beta, gamma) / (4 (alpha gamma - beta^2)^{3/2}).
inline Vec3 two_form_flux(const Vec3& x, double min_disc) {
    const double disc = discriminant_of(x);
    if (disc <= 0.0)
        throw singularity_error("angle 2-form evaluated at the critical surface near (alpha, beta, gamma) = (" +
                                std::to_string(x[0]) + ", " + std::to_string(x[1]) + ", " +
                                std::to_string(x[2]) + "): alpha*gamma - beta^2 = " + std::to_string(disc));
    if (disc < min_disc)
        throw singularity_error("angle 2-form evaluation below the configured discriminant floor");
    const double den = 4.0 * disc * std::sqrt(disc);
    return {x[0] / den, x[1] / den, x[2] / den};
}

} // namespace detail

/// Pairing of the angle 2-form with an oriented bivector at a point.
inline double angle_two_form(const OscillatorParams& p, const Bivector& b) {
    const Vec3 f = detail::two_form_flux(Vec3{p.alpha, p.beta, p.gamma}, 0.0);
    return f[0] * b.bg + f[1] * b.ga + f[2] * b.ab;
}

struct SurfaceIntegralOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    std::size_t max_triangles = 2'000'000;
    double min_discriminant = 0.0; // extra guard floor; 0 disables
};

struct SurfaceIntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t triangles = 0;
};

namespace detail {

// Degree-5, 7-point symmetric triangle rule (barycentric points/weights).
struct TriRule {
    static constexpr int n = 7;
    static constexpr double w[7] = {
        0.225,
        0.13239415278850618, 0.13239415278850618, 0.13239415278850618,
        0.12593918054482715, 0.12593918054482715, 0.12593918054482715,
    };
    static constexpr double b1[7] = {
        1.0 / 3.0,
        0.05971587178976982, 0.47014206410511508, 0.47014206410511508,
        0.79742698535308731, 0.10128650732345633, 0.10128650732345633,
    };
    static constexpr double b2[7] = {
        1.0 / 3.0,
        0.47014206410511508, 0.05971587178976982, 0.47014206410511508,
        0.10128650732345633, 0.79742698535308731, 0.10128650732345633,
    };
};

inline double triangle_flux(const Triangle& t, double min_disc) {
    const Vec3 area = t.vector_area();
    if (area[0] == 0.0 && area[1] == 0.0 && area[2] == 0.0) return 0.0;
    Vec3 acc{0.0, 0.0, 0.0};
    for (int i = 0; i < TriRule::n; ++i) {
        const double l1 = TriRule::b1[i], l2 = TriRule::b2[i], l3 = 1.0 - l1 - l2;
        const Vec3 x = l1 * t.a + l2 * t.b + l3 * t.c;
        const Vec3 f = two_form_flux(x, min_disc);
        acc = acc + TriRule::w[i] * f;
    }
    return dot(acc, area);
}

inline std::array<Triangle, 4> split4(const Triangle& t) {
    const Vec3 mab = 0.5 * (t.a + t.b);
    const Vec3 mbc = 0.5 * (t.b + t.c);
    const Vec3 mca = 0.5 * (t.c + t.a);
    return {Triangle{t.a, mab, mca}, Triangle{mab, t.b, mbc}, Triangle{mca, mbc, t.c},
            Triangle{mab, mbc, mca}};
}

} // namespace detail

/// Adaptive surface quadrature of the angle 2-form over a triangulated
/// spanning surface. Each triangle's contribution is the 7-point rule on its
/// four children; the discrepancy against the parent rule drives refinement
/// of the worst triangles until the summed estimate meets the tolerance.
/// Throws a singularity error if any evaluation point reaches the critical
/// surface (the gate-soundness runtime assertion).
inline SurfaceIntegralResult hannay_surface_integral(const Surface& surface,
                                                     const SurfaceIntegralOptions& opt = {}) {
    struct Item {
        double contribution; // refined (children-sum) value
        double err;
        std::size_t seq;
        Triangle tri;
        std::array<Triangle, 4> kids;
        std::array<double, 4> kidq;
    };
    struct Cmp {
        bool operator()(const Item& a, const Item& b) const {
            if (a.err != b.err) return a.err < b.err;
            return a.seq > b.seq;
        }
    };

    if (surface.triangles.empty()) throw geometry_error("surface has no triangles");

    std::size_t seq = 0;
    double total = 0.0, total_err = 0.0;
    std::priority_queue<Item, std::vector<Item>, Cmp> heap;

    auto make_item = [&](const Triangle& t) {
        Item it;
        it.tri = t;
        it.seq = seq++;
        const double parent = detail::triangle_flux(t, opt.min_discriminant);
        it.kids = detail::split4(t);
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            it.kidq[k] = detail::triangle_flux(it.kids[k], opt.min_discriminant);
            sum += it.kidq[k];
        }
        it.contribution = sum;
        it.err = std::abs(parent - sum);
        return it;
    };

    std::size_t count = surface.triangles.size();
    for (const auto& t : surface.triangles) {
        Item it = make_item(t);
        total += it.contribution;
        total_err += it.err;
        heap.push(std::move(it));
    }

    auto tol = [&]() { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (total_err > tol() && !heap.empty()) {
        if (count > opt.max_triangles)
            throw numerical_error("surface quadrature did not converge within the triangle budget");
        Item worst = heap.top();
        heap.pop();
        if (worst.err <= 0.0) break;
        total -= worst.contribution;
        total_err -= worst.err;
        for (int k = 0; k < 4; ++k) {
            Item it = make_item(worst.kids[k]);
            total += it.contribution;
            total_err += it.err;
            heap.push(std::move(it));
            ++count;
        }
    }

    return SurfaceIntegralResult{total, total_err, count};
}

/// Line-integral route: gamma_H = loop integral of the potential 1-form
/// A = (beta / (2 gamma)) d(gamma / omega), whose exterior derivative is the
/// angle 2-form wherever gamma != 0 and the dynamics is stable. Requires a
/// fixed sign of gamma along the loop.
inline double hannay_line_integral(const ParameterLoop& loop, double tol = 1e-13) {
    const auto& nodes = loop.nodes();
    const double gmin = loop.min_gamma(), gmax = loop.max_gamma();
    if (gmin <= 0.0 && gmax >= 0.0)
        throw chart_error("gamma changes sign (or vanishes) on the loop; the line-integral potential is "
                          "invalid there - use the surface integral");

    double total = 0.0;
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 x0 = nodes[i];
        const Vec3 d = nodes[(i + 1) % n] - x0;
        auto integrand = [&](double t) {
            const Vec3 x = x0 + t * d;
            const double disc = discriminant_of(x);
            if (disc <= 0.0)
                throw singularity_error("line integral crossed the critical surface at segment " +
                                        std::to_string(i));
            const double w = std::sqrt(disc);
            const double dw = (d[0] * x[2] + x[0] * d[2] - 2.0 * x[1] * d[1]) / (2.0 * w);
            const double dg_over_w = (d[2] * w - x[2] * dw) / disc;
            return 0.5 * (x[1] / x[2]) * dg_over_w;
        };
        total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, 10, tol);
    }
    return total;
}

} // namespace fiberphase

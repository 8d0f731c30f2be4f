#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fiberphase/errors.hpp"
#include "fiberphase/gho.hpp"

namespace fiberphase {

/// Point in (alpha, beta, gamma) parameter space.
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline OscillatorParams params_from(const Vec3& x) { return OscillatorParams{x[0], x[1], x[2]}; }
inline double discriminant_of(const Vec3& x) { return x[0] * x[2] - x[1] * x[1]; }

/// Named analytic loop families.
struct CapFamily {
    double omega = 1.0; // constant oscillation frequency on the loop
    double chi = 0.5;   // hyperbolic cap opening
};

/// A closed, piecewise-smooth path in (alpha, beta, gamma) space.
///
/// Nodes are stored arc-length-uniform without a duplicated endpoint; the
/// curve closes from nodes.back() to nodes.front(). position(s) evaluates a
/// periodic Catmull-Rom interpolant through the nodes, used as the smooth
/// traversal schedule for adiabatic sweeps.
class ParameterLoop {
  public:
    static constexpr std::size_t min_nodes = 512;

    static ParameterLoop from_nodes(const std::vector<Vec3>& raw, std::size_t target_nodes = min_nodes) {
        if (raw.size() < 4) throw geometry_error("parameter loop needs at least 3 distinct nodes plus closure");
        std::vector<Vec3> pts = raw;
        double scale = 0.0;
        for (const auto& p : pts) scale = std::max({scale, std::abs(p[0]), std::abs(p[1]), std::abs(p[2])});
        // Paths are supplied as lambda(s), s in [0,1], with path(0) = path(1).
        const double close_tol = 1e-12 * std::max(1.0, scale);
        if (norm(pts.front() - pts.back()) > close_tol)
            throw geometry_error("parameter loop is not closed: endpoint gap " +
                                 std::to_string(norm(pts.front() - pts.back())));
        pts.pop_back();
        if (pts.size() < 3) throw geometry_error("parameter loop needs at least 3 distinct nodes");
        ParameterLoop loop;
        loop.nodes_ = resample_uniform(pts, std::max(target_nodes, pts.size()));
        return loop;
    }

    /// alpha = W(cosh chi + sinh chi cos phi), beta = W sinh chi sin phi,
    /// gamma = W(cosh chi - sinh chi cos phi); constant discriminant W^2.
    static ParameterLoop hyperbolic_cap(double omega, double chi, std::size_t n = 1024) {
        if (!(omega > 0.0)) throw invalid_input_error("hyperbolic_cap: omega must be positive");
        if (!(chi > 0.0)) throw invalid_input_error("hyperbolic_cap: chi must be positive");
        const double ch = std::cosh(chi), sh = std::sinh(chi);
        std::vector<Vec3> pts;
        const std::size_t dense = 4 * n;
        pts.reserve(dense);
        for (std::size_t i = 0; i < dense; ++i) {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(dense);
            pts.push_back(Vec3{omega * (ch + sh * std::cos(phi)), omega * sh * std::sin(phi),
                               omega * (ch - sh * std::cos(phi))});
        }
        ParameterLoop loop;
        loop.nodes_ = resample_uniform(pts, n);
        loop.cap_ = CapFamily{omega, chi};
        return loop;
    }

    /// Circle of radius r in the plane alpha + gamma = 2h; the spanned disk
    /// has minimum discriminant h^2 - r^2 on its rim.
    static ParameterLoop planar_circle(double h, double r, std::size_t n = 1024) {
        if (!(r > 0.0)) throw invalid_input_error("planar_circle: radius must be positive");
        std::vector<Vec3> pts;
        const std::size_t dense = 4 * n;
        pts.reserve(dense);
        for (std::size_t i = 0; i < dense; ++i) {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(dense);
            pts.push_back(Vec3{h + r * std::cos(phi), r * std::sin(phi), h - r * std::cos(phi)});
        }
        ParameterLoop loop;
        loop.nodes_ = resample_uniform(pts, n);
        return loop;
    }

    const std::vector<Vec3>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    const std::optional<CapFamily>& cap_family() const { return cap_; }

    Vec3 node(std::size_t i) const { return nodes_[i % nodes_.size()]; }

    /// Periodic Catmull-Rom interpolant, s in [0, 1] with position(0) == position(1).
    Vec3 position(double s) const {
        const std::size_t n = nodes_.size();
        double t = (s - std::floor(s)) * static_cast<double>(n);
        std::size_t i = static_cast<std::size_t>(t);
        if (i >= n) i = n - 1;
        const double u = t - static_cast<double>(i);
        const Vec3& p0 = node(i + n - 1);
        const Vec3& p1 = node(i);
        const Vec3& p2 = node(i + 1);
        const Vec3& p3 = node(i + 2);
        Vec3 out;
        for (int k = 0; k < 3; ++k) {
            const double a = -p0[k] + 3.0 * p1[k] - 3.0 * p2[k] + p3[k];
            const double b = 2.0 * p0[k] - 5.0 * p1[k] + 4.0 * p2[k] - p3[k];
            const double c = -p0[k] + p2[k];
            out[k] = 0.5 * (2.0 * p1[k] + u * (c + u * (b + u * a)));
        }
        return out;
    }

    double min_discriminant_on_path() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& p : nodes_) m = std::min(m, discriminant_of(p));
        return m;
    }

    double min_gamma() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& p : nodes_) m = std::min(m, p[2]);
        return m;
    }

    double max_gamma() const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& p : nodes_) m = std::max(m, p[2]);
        return m;
    }

    double max_frequency() const {
        double m = 0.0;
        for (const auto& p : nodes_) m = std::max(m, std::sqrt(std::max(0.0, discriminant_of(p))));
        return m;
    }

    double arc_length() const {
        double len = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) len += norm(node(i + 1) - node(i));
        return len;
    }

    Vec3 centroid() const {
        Vec3 c{0.0, 0.0, 0.0};
        for (const auto& p : nodes_) c = c + p;
        return (1.0 / static_cast<double>(nodes_.size())) * c;
    }

    ParameterLoop reversed() const {
        ParameterLoop rev;
        rev.nodes_.reserve(nodes_.size());
        rev.nodes_.push_back(nodes_.front());
        for (std::size_t i = nodes_.size(); i-- > 1;) rev.nodes_.push_back(nodes_[i]);
        rev.cap_ = cap_;
        return rev;
    }

  private:
    ParameterLoop() = default;

    static std::vector<Vec3> resample_uniform(const std::vector<Vec3>& pts, std::size_t n) {
        const std::size_t m = pts.size();
        std::vector<double> cum(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) cum[i + 1] = cum[i] + norm(pts[(i + 1) % m] - pts[i]);
        const double total = cum[m];
        std::vector<Vec3> out;
        out.reserve(n);
        if (total <= 0.0) {
            // degenerate (point) loop
            out.assign(n, pts.front());
            return out;
        }
        std::size_t seg = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double target = total * static_cast<double>(k) / static_cast<double>(n);
            while (seg + 1 < m && cum[seg + 1] <= target) ++seg;
            const double seg_len = cum[seg + 1] - cum[seg];
            const double u = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
            out.push_back(pts[seg] + u * (pts[(seg + 1) % m] - pts[seg]));
        }
        return out;
    }

    std::vector<Vec3> nodes_;
    std::optional<CapFamily> cap_;
};

struct Triangle {
    Vec3 a, b, c;

    Vec3 vector_area() const { return 0.5 * cross(b - a, c - a); }
};

enum class SurfacePolicy { planar_fan, analytic_cap };

/// Triangulated spanning surface of a loop. Orientation follows the loop
/// traversal by the right-hand rule: every boundary edge (node_i -> node_{i+1})
/// appears in exactly one triangle with that direction.
struct Surface {
    std::vector<Triangle> triangles;
    double min_vertex_discriminant = std::numeric_limits<double>::infinity();
};

inline Surface build_planar_fan(const ParameterLoop& loop) {
    Surface s;
    const Vec3 c = loop.centroid();
    const std::size_t n = loop.size();
    s.triangles.reserve(n);
    s.min_vertex_discriminant = discriminant_of(c);
    for (std::size_t i = 0; i < n; ++i) {
        s.triangles.push_back(Triangle{c, loop.node(i), loop.node(i + 1)});
        s.min_vertex_discriminant = std::min(s.min_vertex_discriminant, discriminant_of(loop.node(i)));
    }
    return s;
}

/// Cap spanning surface on the hyperboloid alpha*gamma - beta^2 = omega^2;
/// only available for hyperbolic-cap loops. The rim ring coincides with the
/// loop nodes exactly so both surface policies span the same boundary.
inline Surface build_analytic_cap(const ParameterLoop& loop, std::size_t rings = 48) {
    if (!loop.cap_family())
        throw geometry_error("analytic-cap surface requires a hyperbolic-cap loop family");
    const CapFamily fam = *loop.cap_family();
    const double om = fam.omega;
    const std::size_t n = loop.size();

    // Recover the (s, phi) chart coordinates of each rim node.
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 p = loop.node(i);
        phi[i] = std::atan2(p[1], 0.5 * (p[0] - p[2]));
    }

    auto cap_point = [&](double sc, double ph) {
        const double ch = std::cosh(sc), sh = std::sinh(sc);
        return Vec3{om * (ch + sh * std::cos(ph)), om * sh * std::sin(ph), om * (ch - sh * std::cos(ph))};
    };

    Surface s;
    s.triangles.reserve(2 * rings * n);
    auto ring_point = [&](std::size_t k, std::size_t i) -> Vec3 {
        const double frac = static_cast<double>(k) / static_cast<double>(rings);
        if (k == rings) return loop.node(i); // rim matches loop nodes bit-exactly
        return cap_point(fam.chi * frac, phi[i % n]);
    };
    for (std::size_t k = 0; k < rings; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 p00 = ring_point(k, i);
            const Vec3 p01 = ring_point(k, i + 1);
            const Vec3 p10 = ring_point(k + 1, i);
            const Vec3 p11 = ring_point(k + 1, i + 1);
            if (k == 0) {
                // apex ring collapses to a point
                s.triangles.push_back(Triangle{p00, p10, p11});
            } else {
                s.triangles.push_back(Triangle{p00, p10, p11});
                s.triangles.push_back(Triangle{p00, p11, p01});
            }
        }
    }
    for (const auto& t : s.triangles)
        for (const Vec3* v : {&t.a, &t.b, &t.c})
            s.min_vertex_discriminant = std::min(s.min_vertex_discriminant, discriminant_of(*v));
    return s;
}

inline Surface spanning_surface(const ParameterLoop& loop, SurfacePolicy policy) {
    switch (policy) {
    case SurfacePolicy::planar_fan: return build_planar_fan(loop);
    case SurfacePolicy::analytic_cap: return build_analytic_cap(loop);
    }
    throw internal_error("unknown surface policy");
}

} // namespace fiberphase

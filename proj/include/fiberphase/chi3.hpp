#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fiberphase/errors.hpp"
#include "fiberphase/polarization.hpp"

namespace fiberphase {

/// Transverse (x, y) block of a third-order susceptibility tensor with
/// tetragonal symmetry (classes 4, 4bar, 4/m): sixteen nonzero elements, of
/// which eight are independent. The remaining eight follow from
///   xxyy = yyxx, xyxy = yxyx, xyyx = yxxy, xxxx = yyyy,
///   yyxy = -xxyx, yxyy = -xyxx, xyyy = -yxxx, xxxy = -yyyx.
struct Chi3TensorTetragonal {
    double xxxx = 0.0;
    double xxyy = 0.0;
    double xyxy = 0.0;
    double xyyx = 0.0;
    double yyxy = 0.0;
    double yxyy = 0.0;
    double xyyy = 0.0;
    double xxxy = 0.0;

    /// Full element lookup; indices 0 = x, 1 = y.
    double element(int i, int j, int k, int l) const {
        const int code = (i << 3) | (j << 2) | (k << 1) | l;
        switch (code) {
        case 0b0000: return xxxx;
        case 0b1111: return xxxx;  // yyyy
        case 0b0011: return xxyy;
        case 0b1100: return xxyy;  // yyxx
        case 0b0101: return xyxy;
        case 0b1010: return xyxy;  // yxyx
        case 0b0110: return xyyx;
        case 0b1001: return xyyx;  // yxxy
        case 0b1101: return yyxy;
        case 0b0010: return -yyxy; // xxyx
        case 0b1011: return yxyy;
        case 0b0100: return -yxyy; // xyxx
        case 0b0111: return xyyy;
        case 0b1000: return -xyyy; // yxxx
        case 0b0001: return xxxy;
        case 0b1110: return -xxxy; // yyyx
        }
        throw invalid_input_error("chi3 element: indices must be 0 or 1");
    }

    Chi3TensorTetragonal scaled(double s) const {
        return Chi3TensorTetragonal{s * xxxx, s * xxyy, s * xyxy, s * xyyx,
                                    s * yyxy, s * yxyy, s * xyyy, s * xxxy};
    }
};

/// Full 2x2x2x2 transverse tensor block without symmetry assumptions.
struct Chi3Full {
    std::array<double, 16> v{}; // index (i j k l) packed as above

    double& at(int i, int j, int k, int l) { return v[(i << 3) | (j << 2) | (k << 1) | l]; }
    double at(int i, int j, int k, int l) const { return v[(i << 3) | (j << 2) | (k << 1) | l]; }

    static Chi3Full from_tetragonal(const Chi3TensorTetragonal& t) {
        Chi3Full f;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    for (int l = 0; l < 2; ++l)
                        f.at(i, j, k, l) = t.element(i, j, k, l);
        return f;
    }

    /// Checks the eight tetragonal relations; throws naming the first broken
    /// one. Tolerance is relative to the largest element magnitude.
    Chi3TensorTetragonal to_tetragonal(double rel_tol = 1e-12) const {
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        const double tol = rel_tol * std::max(1.0, scale);
        struct Relation {
            int a[4];
            int b[4];
            double sign;
            const char* name;
        };
        static constexpr Relation relations[] = {
            {{0, 0, 1, 1}, {1, 1, 0, 0}, 1.0, "xxyy = yyxx"},
            {{0, 1, 0, 1}, {1, 0, 1, 0}, 1.0, "xyxy = yxyx"},
            {{0, 1, 1, 0}, {1, 0, 0, 1}, 1.0, "xyyx = yxxy"},
            {{0, 0, 0, 0}, {1, 1, 1, 1}, 1.0, "xxxx = yyyy"},
            {{1, 1, 0, 1}, {0, 0, 1, 0}, -1.0, "yyxy = -xxyx"},
            {{1, 0, 1, 1}, {0, 1, 0, 0}, -1.0, "yxyy = -xyxx"},
            {{0, 1, 1, 1}, {1, 0, 0, 0}, -1.0, "xyyy = -yxxx"},
            {{0, 0, 0, 1}, {1, 1, 1, 0}, -1.0, "xxxy = -yyyx"},
        };
        for (const auto& r : relations) {
            const double lhs = at(r.a[0], r.a[1], r.a[2], r.a[3]);
            const double rhs = r.sign * at(r.b[0], r.b[1], r.b[2], r.b[3]);
            if (std::abs(lhs - rhs) > tol)
                throw structure_error(std::string("tensor symmetry violated: ") + r.name +
                                      " fails by " + std::to_string(lhs - rhs));
        }
        Chi3TensorTetragonal t;
        t.xxxx = at(0, 0, 0, 0);
        t.xxyy = at(0, 0, 1, 1);
        t.xyxy = at(0, 1, 0, 1);
        t.xyyx = at(0, 1, 1, 0);
        t.yyxy = at(1, 1, 0, 1);
        t.yxyy = at(1, 0, 1, 1);
        t.xyyy = at(0, 1, 1, 1);
        t.xxxy = at(0, 0, 0, 1);
        return t;
    }
};

/// Rotates the transverse tensor block by psi about the fiber axis:
/// chi'_pqrs = R_pi R_qj R_rk R_sl chi_ijkl. Tetragonal symmetry is closed
/// under this rotation, as is the integrability combination d + c.
inline Chi3TensorTetragonal rotate_inplane(const Chi3TensorTetragonal& chi, double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    const double R[2][2] = {{c, s}, {-s, c}};
    Chi3Full out;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
            for (int r = 0; r < 2; ++r)
                for (int t = 0; t < 2; ++t) {
                    double acc = 0.0;
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            for (int k = 0; k < 2; ++k)
                                for (int l = 0; l < 2; ++l)
                                    acc += R[p][i] * R[q][j] * R[r][k] * R[t][l] * chi.element(i, j, k, l);
                    out.at(p, q, r, t) = acc;
                }
    return out.to_tetragonal(1e-10);
}

struct Chi3EffectiveResult {
    Chi3Full full{};
    bool tetragonal = false;              // relations hold exactly (equal transverse derivatives)
    double max_relation_violation = 0.0;
    std::vector<std::string> negative_ij_products; // components where the unsigned (i,j) pair went negative
};

/// Decoupling-approximation effective susceptibility:
/// chi^e_ijkl = (chi_ijkl / f) sqrt((d_i d_j) |d_k d_l|),
/// with d_i = d eps_i^e / d eps_i. The (i,j) product is taken literally (no
/// absolute value); negative products are flagged, and the affected
/// components are reported as NaN rather than silently patched.
inline Chi3EffectiveResult chi3_effective_anisotropic(const Chi3TensorTetragonal& chi,
                                                      const std::array<double, 3>& derivs, double f) {
    if (!(f > 0.0)) throw invalid_input_error("chi3_effective_anisotropic: undefined at f = 0");
    for (double d : derivs)
        if (!std::isfinite(d)) throw invalid_input_error("chi3_effective_anisotropic: non-finite derivative");

    static constexpr char axis_name[2] = {'x', 'y'};
    Chi3EffectiveResult res;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) {
                    const double ij = derivs[i] * derivs[j];
                    const double kl = std::abs(derivs[k] * derivs[l]);
                    double factor;
                    if (ij < 0.0) {
                        res.negative_ij_products.push_back(std::string{axis_name[i], axis_name[j],
                                                                       axis_name[k], axis_name[l]});
                        factor = std::numeric_limits<double>::quiet_NaN();
                    } else {
                        factor = std::sqrt(ij * kl) / f;
                    }
                    res.full.at(i, j, k, l) = chi.element(i, j, k, l) * factor;
                }

    // Report whether the output still satisfies the tetragonal relations.
    if (res.negative_ij_products.empty()) {
        static constexpr int rel[8][9] = {
            // lhs indices, rhs indices, sign
            {0, 0, 1, 1, 1, 1, 0, 0, +1}, {0, 1, 0, 1, 1, 0, 1, 0, +1},
            {0, 1, 1, 0, 1, 0, 0, 1, +1}, {0, 0, 0, 0, 1, 1, 1, 1, +1},
            {1, 1, 0, 1, 0, 0, 1, 0, -1}, {1, 0, 1, 1, 0, 1, 0, 0, -1},
            {0, 1, 1, 1, 1, 0, 0, 0, -1}, {0, 0, 0, 1, 1, 1, 1, 0, -1},
        };
        double worst = 0.0;
        for (const auto& r : rel) {
            const double lhs = res.full.at(r[0], r[1], r[2], r[3]);
            const double rhs = static_cast<double>(r[8]) * res.full.at(r[4], r[5], r[6], r[7]);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        res.max_relation_violation = worst;
        double scale = 0.0;
        for (double x : res.full.v) scale = std::max(scale, std::abs(x));
        res.tetragonal = worst <= 1e-12 * std::max(1.0, scale);
    }
    return res;
}

/// Coefficient extraction from the nonlinearity-parameter tensor:
/// a = g_xxxx, b = (g_xxyy + g_xyxy + g_xyyx)/3,
/// c = (g_xxyx + g_xyxx + g_xxxy)/3, d = g_xyyy.
/// The y-row values follow from the tetragonal relations (a_y = a, b_y = b,
/// c_y = -c, d_y = -d).
struct CoefficientExtraction {
    TetragonalCoefficients coeffs;
    bool projected = false;    // (c, d) symmetrically projected onto d = -c
    double violation = 0.0;    // |d + c| before projection
};

struct IntegrabilityPolicy {
    double exact_tol = 1e-12;      // |d + c| <= exact_tol * max(1, |c|): already integrable
    double project_tol = 0.01;     // project when |d + c| <= project_tol * max(|a|, |b|, |c|, |d|)
    bool allow_projection = false;
};

inline CoefficientExtraction coefficients_from_chi3(const Chi3TensorTetragonal& g,
                                                    const IntegrabilityPolicy& policy = {}) {
    CoefficientExtraction out;
    TetragonalCoefficients& k = out.coeffs;
    k.a = g.element(0, 0, 0, 0);
    k.b = (g.element(0, 0, 1, 1) + g.element(0, 1, 0, 1) + g.element(0, 1, 1, 0)) / 3.0;
    k.c = (g.element(0, 0, 1, 0) + g.element(0, 1, 0, 0) + g.element(0, 0, 0, 1)) / 3.0;
    k.d = g.element(0, 1, 1, 1);
    out.violation = std::abs(k.d + k.c);

    if (out.violation <= policy.exact_tol * std::max(1.0, std::abs(k.c))) return out;
    // measured against the largest coupling so the gate is stable when the
    // rotating exotic part passes through zero
    const double rel_scale = std::max({std::abs(k.a), std::abs(k.b), std::abs(k.c), std::abs(k.d), 1e-300});
    if (policy.allow_projection && out.violation <= policy.project_tol * rel_scale) {
        const double ci = 0.5 * (k.c - k.d);
        k.c = ci;
        k.d = -ci;
        out.projected = true;
        return out;
    }
    throw structure_error("coefficients_from_chi3: integrability d = -c violated (d + c = " +
                          std::to_string(k.d + k.c) + ")");
}

} // namespace fiberphase

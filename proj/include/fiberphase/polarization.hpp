#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>

#include "fiberphase/errors.hpp"
#include "fiberphase/gho.hpp"

namespace fiberphase {

using Complex = std::complex<double>;

/// The two slowly varying polarization envelopes (u_x, u_y).
struct PolarizationAmplitudes {
    Complex ux{0.0, 0.0};
    Complex uy{0.0, 0.0};

    double norm_sq() const { return std::norm(ux) + std::norm(uy); }

    bool finite() const {
        return std::isfinite(ux.real()) && std::isfinite(ux.imag()) &&
               std::isfinite(uy.real()) && std::isfinite(uy.imag());
    }
};

/// Stokes parameters (S0, Sx, Sy, Sz). For states built from amplitudes,
/// sx^2 + sy^2 + sz^2 = s0^2 holds to round-off.
struct StokesVector {
    double s0 = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double sz = 0.0;

    double transverse_norm_sq() const { return sx * sx + sy * sy + sz * sz; }
};

/// Nonlinear coupling parameters of the tetragonal coupled-mode equations:
///   i du_j/dz = -xi_j/2 u_j - a|u_j|^2 u_j - b(2|u_k|^2 u_j + u_k^2 u_j*)
///               -/+ c(2|u_j|^2 u_k + u_j^2 u_k*) -/+ d |u_k|^2 u_k,
/// with the upper sign for j = x and the lower sign for j = y.
struct TetragonalCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    Complex xi_x{0.0, 0.0};
    Complex xi_y{0.0, 0.0};

    bool finite() const {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d) &&
               std::isfinite(xi_x.real()) && std::isfinite(xi_x.imag()) &&
               std::isfinite(xi_y.real()) && std::isfinite(xi_y.imag());
    }

    bool xi_is_zero() const { return xi_x == Complex{0.0, 0.0} && xi_y == Complex{0.0, 0.0}; }

    /// Integrability gate: d = -c within tolerance and xi = 0.
    /// |d + c| <= 1e-12 * max(1, |c|) by default.
    bool is_integrable(double tol = 1e-12) const {
        return std::abs(d + c) <= tol * std::max(1.0, std::abs(c)) && xi_is_zero();
    }
};

/// Coefficients of the Stokes-space Hamiltonian
///   H = -1/2 (c0 S0^2 + cz Sz^2 + 2 c Sz Sx + cx Sx^2),
/// with c0 = (a+b)/2, cz = (a-b)/2, cx = b. Obtain through reduce().
struct ReducedCoefficients {
    double c0 = 0.0;
    double cz = 0.0;
    double cx = 0.0;
    double c = 0.0;
};

inline ReducedCoefficients reduce(const TetragonalCoefficients& k) {
    return ReducedCoefficients{0.5 * (k.a + k.b), 0.5 * (k.a - k.b), k.b, k.c};
}

inline StokesVector stokes_from_amplitudes(const PolarizationAmplitudes& amps) {
    if (!amps.finite()) throw invalid_input_error("stokes_from_amplitudes: non-finite amplitudes");
    const Complex cross = std::conj(amps.ux) * amps.uy;
    StokesVector s;
    s.s0 = std::norm(amps.ux) + std::norm(amps.uy);
    s.sz = std::norm(amps.ux) - std::norm(amps.uy);
    s.sx = 2.0 * cross.real();
    s.sy = 2.0 * cross.imag();
    return s;
}

/// Right-hand side of the coupled-mode equations: returns (du_x/dz, du_y/dz).
inline std::array<Complex, 2> coupled_mode_rhs(const PolarizationAmplitudes& amps,
                                               const TetragonalCoefficients& k) {
    if (!amps.finite() || !k.finite()) throw invalid_input_error("coupled_mode_rhs: non-finite input");
    const Complex ux = amps.ux, uy = amps.uy;
    const double nx = std::norm(ux), ny = std::norm(uy);
    const Complex i_unit{0.0, 1.0};
    // i du_x/dz = RHSx  =>  du_x/dz = -i RHSx
    const Complex rhs_x = -0.5 * k.xi_x * ux - k.a * nx * ux - k.b * (2.0 * ny * ux + uy * uy * std::conj(ux)) -
                          k.c * (2.0 * nx * uy + ux * ux * std::conj(uy)) - k.d * ny * uy;
    const Complex rhs_y = -0.5 * k.xi_y * uy - k.a * ny * uy - k.b * (2.0 * nx * uy + ux * ux * std::conj(uy)) +
                          k.c * (2.0 * ny * ux + uy * uy * std::conj(ux)) + k.d * nx * ux;
    return {-i_unit * rhs_x, -i_unit * rhs_y};
}

/// Stokes-space equations of motion for fixed reduced coefficients.
/// S0 is conserved identically.
inline StokesVector stokes_rhs(const StokesVector& s, const ReducedCoefficients& rc) {
    StokesVector ds;
    const double gx = rc.c * s.sx + rc.cz * s.sz;
    const double gz = rc.cx * s.sx + rc.c * s.sz;
    ds.s0 = 0.0;
    ds.sx = 2.0 * s.sy * gx;
    ds.sy = 2.0 * s.sz * gz - 2.0 * s.sx * gx;
    ds.sz = -2.0 * s.sy * gz;
    return ds;
}

inline double hamiltonian_value(const StokesVector& s, const ReducedCoefficients& rc) {
    return -0.5 * (rc.c0 * s.s0 * s.s0 + rc.cz * s.sz * s.sz + 2.0 * rc.c * s.sz * s.sx + rc.cx * s.sx * s.sx);
}

inline double hamiltonian_amplitude(const PolarizationAmplitudes& amps, const TetragonalCoefficients& k) {
    return hamiltonian_value(stokes_from_amplitudes(amps), reduce(k));
}

/// Second integral of motion (valid for fixed coefficients):
/// cz Sz^2 + 2 c Sz Sx + cx Sx^2.
inline double second_invariant(const StokesVector& s, const ReducedCoefficients& rc) {
    return rc.cz * s.sz * s.sz + 2.0 * rc.c * s.sz * s.sx + rc.cx * s.sx * s.sx;
}

struct StructureCheckOptions {
    double fd_step = 1e-6;
    double residual_bound = 1e-6;
    double integrability_tol = 1e-12;
};

struct StructureCheckReport {
    bool pass = false;
    double max_residual = 0.0;
};

/// Verifies the Hamiltonian structure i du_j/dz = dH/du_j* against a central
/// finite-difference gradient of the amplitude-form Hamiltonian.
/// Requires d = -c and xi = 0; otherwise throws naming the failed relation.
inline StructureCheckReport check_hamiltonian_structure(const TetragonalCoefficients& k,
                                                        std::span<const PolarizationAmplitudes> states,
                                                        const StructureCheckOptions& opt = {}) {
    if (!k.xi_is_zero())
        throw structure_error("hamiltonian structure requires xi_x = xi_y = 0");
    if (std::abs(k.d + k.c) > opt.integrability_tol * std::max(1.0, std::abs(k.c)))
        throw structure_error("hamiltonian structure violated: d = -c fails (d + c = " +
                              std::to_string(k.d + k.c) + ")");

    StructureCheckReport report;
    const double h = opt.fd_step;
    for (const auto& st : states) {
        auto rhs = coupled_mode_rhs(st, k);
        // dH/du* = 1/2 (dH/dRe + i dH/dIm) per component.
        std::array<Complex, 2> grad;
        for (int j = 0; j < 2; ++j) {
            auto perturbed = [&](double dre, double dim) {
                PolarizationAmplitudes p = st;
                Complex& u = (j == 0) ? p.ux : p.uy;
                u += Complex{dre, dim};
                return hamiltonian_amplitude(p, k);
            };
            const double d_re = (perturbed(h, 0.0) - perturbed(-h, 0.0)) / (2.0 * h);
            const double d_im = (perturbed(0.0, h) - perturbed(0.0, -h)) / (2.0 * h);
            grad[j] = 0.5 * Complex{d_re, d_im};
        }
        const Complex i_unit{0.0, 1.0};
        double scale = std::max({1.0, std::abs(rhs[0]), std::abs(rhs[1])});
        for (int j = 0; j < 2; ++j) {
            // du/dz = -i dH/du*
            double resid = std::abs(rhs[j] - (-i_unit * grad[j])) / scale;
            report.max_residual = std::max(report.max_residual, resid);
        }
    }
    report.pass = report.max_residual < opt.residual_bound;
    return report;
}

enum class Pole { plus_y, minus_y };

struct PoleLinearization {
    OscillatorParams params;
    Pole pole;
    // Canonical identification in the tangent plane: q = Sx, p = Sz.
};

/// Generalized-harmonic-oscillator parameters of the linearized dynamics near
/// the (0, +/-1, 0) fixed points: (alpha, beta, gamma) = +/-(2 cx, 2 c, 2 cz).
inline PoleLinearization linearize_at_pole(const ReducedCoefficients& rc, Pole pole) {
    const double sign = (pole == Pole::plus_y) ? 1.0 : -1.0;
    return PoleLinearization{OscillatorParams{sign * 2.0 * rc.cx, sign * 2.0 * rc.c, sign * 2.0 * rc.cz}, pole};
}

} // namespace fiberphase

#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fiberphase/errors.hpp"

namespace fiberphase {

/// Binary composite with isotropic constituents: inclusion permittivity eps1,
/// host permittivity eps2, volume fraction f, inclusion third-order
/// susceptibility chi, depolarization factor g (1/3 for spheres).
/// Permittivities are relative (dimensionless) and real; lossy (complex)
/// media are outside this model.
struct IsotropicCompositeSpec {
    double eps1 = 1.0;
    double eps2 = 1.0;
    double f = 0.0;
    double chi = 0.0;
    double g = 1.0 / 3.0;

    void validate() const {
        if (!(eps1 > 0.0) || !std::isfinite(eps1)) throw invalid_input_error("eps1 must be positive and finite");
        if (!(eps2 > 0.0) || !std::isfinite(eps2)) throw invalid_input_error("eps2 must be positive and finite");
        if (!(f >= 0.0 && f <= 1.0)) throw invalid_input_error("volume fraction f must lie in [0, 1]");
        if (!(g > 0.0 && g < 1.0)) throw invalid_input_error("depolarization factor g must lie in (0, 1)");
        if (!std::isfinite(chi)) throw invalid_input_error("chi must be finite");
    }
};

namespace detail {

/// Positive root of the Bruggeman quadratic
///   (1-g) e^2 - B e - g eps1 eps2 = 0,  B = (1-g)(f eps1 + (1-f) eps2) - g((1-f) eps1 + f eps2),
/// evaluated in the cancellation-free form for either sign of B.
inline double bruggeman_root(double eps1, double eps2, double f, double g) {
    const double B = (1.0 - g) * (f * eps1 + (1.0 - f) * eps2) - g * ((1.0 - f) * eps1 + f * eps2);
    const double C = 4.0 * g * (1.0 - g) * eps1 * eps2;
    const double S = std::sqrt(B * B + C);
    if (B >= 0.0) return (B + S) / (2.0 * (1.0 - g));
    return 2.0 * g * eps1 * eps2 / (S - B); // = (B + S)/(2(1-g)) without cancellation
}

inline double bruggeman_root_derivative_eps1(double eps1, double eps2, double f, double g) {
    const double B = (1.0 - g) * (f * eps1 + (1.0 - f) * eps2) - g * ((1.0 - f) * eps1 + f * eps2);
    const double Bp = (1.0 - g) * f - g * (1.0 - f);
    const double S = std::sqrt(B * B + 4.0 * g * (1.0 - g) * eps1 * eps2);
    const double Sp = (B * Bp + 2.0 * g * (1.0 - g) * eps2) / S;
    return (Bp + Sp) / (2.0 * (1.0 - g));
}

} // namespace detail

/// Bruggeman self-consistency residual; certifies every EMT output.
inline double bruggeman_residual(double eps1, double eps2, double f, double g, double eps_e) {
    const double d1 = eps_e + g * (eps1 - eps_e);
    const double d2 = eps_e + g * (eps2 - eps_e);
    return f * (eps1 - eps_e) / d1 + (1.0 - f) * (eps2 - eps_e) / d2;
}

/// Effective permittivity for spherical inclusions (g = 1/3):
/// eps_e = (u + sqrt(u^2 + 8 eps1 eps2))/4 with u = (3f-1) eps1 + (2-3f) eps2.
inline double emt_isotropic(const IsotropicCompositeSpec& spec) {
    spec.validate();
    return detail::bruggeman_root(spec.eps1, spec.eps2, spec.f, 1.0 / 3.0);
}

/// Effective permittivity with a general depolarization factor.
inline double emt_general_g(const IsotropicCompositeSpec& spec) {
    spec.validate();
    const double e = detail::bruggeman_root(spec.eps1, spec.eps2, spec.f, spec.g);
    if (!(e > 0.0) || !std::isfinite(e))
        throw internal_error("Bruggeman root is not positive; invalid solver state");
    return e;
}

/// Analytic derivative of the effective permittivity with respect to the
/// inclusion permittivity.
inline double emt_derivative_eps1(const IsotropicCompositeSpec& spec) {
    spec.validate();
    return detail::bruggeman_root_derivative_eps1(spec.eps1, spec.eps2, spec.f, spec.g);
}

/// Central-difference cross-check of emt_derivative_eps1.
inline double emt_derivative_eps1_fd(const IsotropicCompositeSpec& spec, double rel_step = 1e-6) {
    spec.validate();
    const double h = rel_step * spec.eps1;
    IsotropicCompositeSpec up = spec, dn = spec;
    up.eps1 += h;
    dn.eps1 -= h;
    return (emt_general_g(up) - emt_general_g(dn)) / (2.0 * h);
}

/// Effective third-order susceptibility of the isotropic composite:
/// chi_e = (1/f) (d eps_e / d eps1) |d eps_e / d eps1| chi.
/// The analytic derivative is primary; the finite-difference value is a
/// mandatory cross-check and a mismatch is an error, not a fallback.
inline double chi3_effective_isotropic(const IsotropicCompositeSpec& spec, double crosscheck_tol = 1e-8) {
    spec.validate();
    if (!(spec.f > 0.0)) throw invalid_input_error("chi3_effective_isotropic: undefined at f = 0 (no inclusions)");
    const double d = emt_derivative_eps1(spec);
    const double d_fd = emt_derivative_eps1_fd(spec);
    if (std::abs(d - d_fd) > crosscheck_tol * std::max(1.0, std::abs(d)))
        throw internal_error("EMT derivative cross-check failed: analytic " + std::to_string(d) +
                             " vs finite-difference " + std::to_string(d_fd));
    return (d * std::abs(d) / spec.f) * spec.chi;
}

/// Mean-square local field inside the inclusions in the linear limit:
/// <E_i^2> = (1/f) (d eps_i^e / d eps_i) E_applied^2.
inline double field_moment(double deriv, double f, double applied_field) {
    if (!(f > 0.0)) throw invalid_input_error("field_moment: undefined at f = 0");
    return deriv * applied_field * applied_field / f;
}

/// Uniaxial crystallite inclusions in an isotropic host.
struct UniaxialInclusionSpec {
    double eps_perp = 1.0;
    double eps_par = 1.0;
    double theta = 0.0; // polar angle of the crystal axis
    double phi = 0.0;   // azimuthal angle
    double f = 0.0;
    double g = 1.0 / 3.0;
    double eps_host = 1.0;

    void validate() const {
        if (!(eps_perp > 0.0) || !(eps_par > 0.0) || !(eps_host > 0.0))
            throw invalid_input_error("uniaxial permittivities must be positive");
        if (!(f >= 0.0 && f <= 1.0)) throw invalid_input_error("volume fraction f must lie in [0, 1]");
        if (!(g > 0.0 && g < 1.0)) throw invalid_input_error("depolarization factor g must lie in (0, 1)");
        if (!std::isfinite(theta) || !std::isfinite(phi))
            throw invalid_input_error("orientation angles must be finite");
    }

    /// Canonical angle ranges: theta in [0, pi], phi in [0, 2 pi).
    UniaxialInclusionSpec normalized() const {
        UniaxialInclusionSpec s = *this;
        const double two_pi = 2.0 * 3.14159265358979323846;
        s.theta = std::fmod(s.theta, two_pi);
        if (s.theta < 0.0) s.theta += two_pi;
        if (s.theta > 0.5 * two_pi) {
            s.theta = two_pi - s.theta;
            s.phi += 0.5 * two_pi;
        }
        s.phi = std::fmod(s.phi, two_pi);
        if (s.phi < 0.0) s.phi += two_pi;
        return s;
    }
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Dielectric tensor of a uniaxial crystallite whose axis points along
/// (theta, phi): eps_perp I + (eps_par - eps_perp) * (axis outer axis).
inline Matrix3 rotate_dielectric_tensor(const UniaxialInclusionSpec& spec) {
    spec.validate();
    const double a = spec.eps_par - spec.eps_perp;
    const double st = std::sin(spec.theta), ct = std::cos(spec.theta);
    const double sp = std::sin(spec.phi), cp = std::cos(spec.phi);
    Matrix3 m{};
    m[0][0] = spec.eps_perp + a * cp * cp * st * st;
    m[0][1] = -0.5 * a * std::sin(2.0 * spec.phi) * st * st;
    m[0][2] = 0.5 * a * cp * std::sin(2.0 * spec.theta);
    m[1][0] = m[0][1];
    m[1][1] = spec.eps_perp + a * sp * sp * st * st;
    m[1][2] = -0.5 * a * sp * std::sin(2.0 * spec.theta);
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];
    m[2][2] = spec.eps_perp + a * ct * ct;
    return m;
}

enum class AlignedAxis { z, x };

struct UniaxialEmtResult {
    std::array<double, 3> eps_e{};   // effective permittivity per axis (x, y, z)
    std::array<double, 3> deriv{};   // d eps_i^e / d eps_i of the inclusion constituent
};

/// Effective tensor for inclusions aligned along z (or x): each principal
/// axis obeys the scalar Bruggeman equation with the inclusion permittivity
/// seen along that axis (eps_par on the axis, eps_perp across it).
inline UniaxialEmtResult emt_uniaxial_aligned(const UniaxialInclusionSpec& spec,
                                              AlignedAxis axis = AlignedAxis::z) {
    spec.validate();
    auto component = [&](double eps_inc) {
        const double e = detail::bruggeman_root(eps_inc, spec.eps_host, spec.f, spec.g);
        const double d = detail::bruggeman_root_derivative_eps1(eps_inc, spec.eps_host, spec.f, spec.g);
        return std::array<double, 2>{e, d};
    };
    const auto perp = component(spec.eps_perp);
    const auto par = component(spec.eps_par);
    UniaxialEmtResult r;
    if (axis == AlignedAxis::z) {
        r.eps_e = {perp[0], perp[0], par[0]};
        r.deriv = {perp[1], perp[1], par[1]};
    } else {
        r.eps_e = {par[0], perp[0], perp[0]};
        r.deriv = {par[1], perp[1], perp[1]};
    }
    return r;
}

} // namespace fiberphase

#pragma once

#include <cmath>
#include <string>

#include "fiberphase/errors.hpp"

namespace fiberphase {

enum class Stability { stable, critical, unstable };

/// Generalized harmonic oscillator H = (alpha q^2 + 2 beta p q + gamma p^2)/2.
/// Stable (elliptic) iff alpha*gamma - beta^2 > 0.
struct OscillatorParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    double discriminant() const { return alpha * gamma - beta * beta; }

    double scale() const { return std::max({std::abs(alpha), std::abs(beta), std::abs(gamma)}); }

    Stability classify(double tol = 1e-12) const {
        const double disc = discriminant();
        const double s = scale();
        if (std::abs(disc) <= tol * std::max(1.0, s * s)) return Stability::critical;
        return disc > 0.0 ? Stability::stable : Stability::unstable;
    }
};

/// Oscillation frequency omega = sqrt(alpha*gamma - beta^2).
inline double frequency(const OscillatorParams& p) {
    const double disc = p.discriminant();
    if (disc < 0.0)
        throw singularity_error("unstable regime: alpha*gamma - beta^2 = " + std::to_string(disc) + " < 0");
    return std::sqrt(disc);
}

struct ActionAngleState {
    double action = 0.0; // I >= 0
    double angle = 0.0;  // radians
};

struct CanonicalPair {
    double q = 0.0;
    double p = 0.0;
};

inline double oscillator_energy(const CanonicalPair& s, const OscillatorParams& par) {
    return 0.5 * (par.alpha * s.q * s.q + 2.0 * par.beta * s.p * s.q + par.gamma * s.p * s.p);
}

/// Action-angle chart of the stable positive-definite GHO:
///   q = sqrt(2 gamma I / omega) cos(theta),
///   p = -sqrt(2 gamma I / omega) ((beta/gamma) cos(theta) + (omega/gamma) sin(theta)),
/// so that E = I*omega and theta advances at rate +omega.
inline CanonicalPair action_angle_to_pq(const ActionAngleState& st, const OscillatorParams& par) {
    if (st.action < 0.0) throw invalid_input_error("action_angle_to_pq: action must be >= 0");
    const double w = frequency(par);
    if (w == 0.0) throw singularity_error("action_angle_to_pq: critical parameters (omega = 0)");
    if (par.gamma == 0.0)
        throw chart_error("action_angle_to_pq: gamma = 0 is outside this chart; use the mirrored chart");
    if (par.gamma < 0.0)
        throw chart_error("action_angle_to_pq: gamma < 0 (negative-definite form); "
                          "negate the parameters before using this chart");
    const double amp = std::sqrt(2.0 * par.gamma * st.action / w);
    CanonicalPair s;
    s.q = amp * std::cos(st.angle);
    s.p = -(amp / par.gamma) * (par.beta * std::cos(st.angle) + w * std::sin(st.angle));
    return s;
}

/// Chart used to seed and read the oscillation angle along adiabatic runs.
/// The gamma-based chart above fails near gamma = 0, where loops may still be
/// perfectly stable; the mirrored chart exchanges the roles of q and p and
/// uses the alpha-based amplitude. Both define theta so that d(theta)/dz = +omega.
struct AngleChart {
    enum class Kind { gamma_based, alpha_based };
    Kind kind = Kind::gamma_based;

    static AngleChart select(const OscillatorParams& par, double swap_ratio = 0.1) {
        AngleChart c;
        if (std::abs(par.gamma) < swap_ratio * par.scale()) c.kind = Kind::alpha_based;
        return c;
    }

    double angle_from(const CanonicalPair& s, const OscillatorParams& par) const {
        const double w = frequency(par);
        if (kind == Kind::gamma_based)
            return std::atan2(-(par.beta * s.q + par.gamma * s.p) / w, s.q);
        return std::atan2((par.alpha * s.q + par.beta * s.p) / w, s.p);
    }

    /// Signed instantaneous action E/omega.
    double action_from(const CanonicalPair& s, const OscillatorParams& par) const {
        return oscillator_energy(s, par) / frequency(par);
    }

    CanonicalPair pq_from(const ActionAngleState& st, const OscillatorParams& par) const {
        if (kind == Kind::gamma_based) return action_angle_to_pq(st, par);
        if (par.alpha <= 0.0)
            throw chart_error("mirrored chart requires alpha > 0");
        const double w = frequency(par);
        const double amp = std::sqrt(2.0 * par.alpha * st.action / w);
        CanonicalPair s;
        s.p = amp * std::cos(st.angle);
        s.q = -(amp / par.alpha) * (par.beta * std::cos(st.angle) - w * std::sin(st.angle));
        return s;
    }
};

} // namespace fiberphase

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "fiberphase/ode.hpp"
#include "fiberphase/polarization.hpp"

namespace fiberphase {

/// Coefficient schedule along the fiber. Fixed schedules are flagged so the
/// invariant report knows the second integral of motion applies.
struct CoefficientSchedule {
    std::function<TetragonalCoefficients(double)> at;
    bool fixed = false;

    static CoefficientSchedule constant(const TetragonalCoefficients& k) {
        return CoefficientSchedule{[k](double) { return k; }, true};
    }
};

struct IntegrationRequest {
    double z_begin = 0.0;
    double z_end = 10.0;
    std::size_t samples = 1001; // output grid size (>= 2), uniform in z
    OdeOptions ode;
};

struct Trajectory {
    std::vector<double> z;
    std::vector<PolarizationAmplitudes> amplitudes; // empty for Stokes-form runs
    std::vector<StokesVector> stokes;
    bool amplitude_form = true;
    bool fixed_coefficients = false;
    OdeStats stats;
};

inline std::vector<double> uniform_grid(double z0, double z1, std::size_t n) {
    if (!(z1 > z0) || !std::isfinite(z0) || !std::isfinite(z1))
        throw invalid_input_error("integration span must be finite with z_end > z_begin");
    if (n < 2) throw invalid_input_error("need at least two samples");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = z0 + (z1 - z0) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.back() = z1;
    return g;
}

inline Trajectory integrate_amplitudes(const PolarizationAmplitudes& init,
                                       const CoefficientSchedule& schedule,
                                       const IntegrationRequest& req) {
    if (!init.finite() || init.norm_sq() <= 0.0)
        throw invalid_input_error("integrate_amplitudes: initial state must be finite and nonzero");
    auto grid = uniform_grid(req.z_begin, req.z_end, req.samples);

    Trajectory traj;
    traj.amplitude_form = true;
    traj.fixed_coefficients = schedule.fixed;
    traj.z.reserve(grid.size());
    traj.amplitudes.reserve(grid.size());
    traj.stokes.reserve(grid.size());

    auto rhs = [&schedule](double z, const std::array<double, 4>& y, std::array<double, 4>& dy) {
        const TetragonalCoefficients k = schedule.at(z);
        const PolarizationAmplitudes amps{Complex{y[0], y[1]}, Complex{y[2], y[3]}};
        const auto d = coupled_mode_rhs(amps, k);
        dy[0] = d[0].real();
        dy[1] = d[0].imag();
        dy[2] = d[1].real();
        dy[3] = d[1].imag();
    };

    std::array<double, 4> y0{init.ux.real(), init.ux.imag(), init.uy.real(), init.uy.imag()};
    traj.stats = integrate_sampled<4>(rhs, grid, y0, req.ode,
                                      [&](std::size_t, double z, const std::array<double, 4>& y) {
                                          PolarizationAmplitudes a{Complex{y[0], y[1]}, Complex{y[2], y[3]}};
                                          traj.z.push_back(z);
                                          traj.amplitudes.push_back(a);
                                          traj.stokes.push_back(stokes_from_amplitudes(a));
                                      });
    return traj;
}

struct ReducedSchedule {
    std::function<ReducedCoefficients(double)> at;
    bool fixed = false;

    static ReducedSchedule constant(const ReducedCoefficients& rc) {
        return ReducedSchedule{[rc](double) { return rc; }, true};
    }
};

inline Trajectory integrate_stokes(const StokesVector& init, const ReducedSchedule& schedule,
                                   const IntegrationRequest& req) {
    if (!(init.s0 > 0.0)) throw invalid_input_error("integrate_stokes: s0 must be positive");
    auto grid = uniform_grid(req.z_begin, req.z_end, req.samples);

    Trajectory traj;
    traj.amplitude_form = false;
    traj.fixed_coefficients = schedule.fixed;
    const double s0 = init.s0;

    auto rhs = [&schedule, s0](double z, const std::array<double, 3>& y, std::array<double, 3>& dy) {
        const ReducedCoefficients rc = schedule.at(z);
        const StokesVector s{s0, y[0], y[1], y[2]};
        const StokesVector d = stokes_rhs(s, rc);
        dy[0] = d.sx;
        dy[1] = d.sy;
        dy[2] = d.sz;
    };

    std::array<double, 3> y0{init.sx, init.sy, init.sz};
    traj.stats = integrate_sampled<3>(rhs, grid, y0, req.ode,
                                      [&](std::size_t, double z, const std::array<double, 3>& y) {
                                          traj.z.push_back(z);
                                          traj.stokes.push_back(StokesVector{s0, y[0], y[1], y[2]});
                                      });
    return traj;
}

/// Max drift of the two integrals of motion along a trajectory.
///
/// s0_sq_drift is relative to S0(0)^2. The second invariant is measured
/// against the natural magnitude (|cz| + 2|c| + |cx|) S0(0)^2 of its terms,
/// which keeps the report meaningful at fixed points where the invariant
/// starts at zero.
struct InvariantReport {
    double s0_sq_drift = 0.0;
    double second_invariant_drift = 0.0;
    bool second_invariant_applicable = true; // only for fixed coefficients
};

inline InvariantReport invariants(const Trajectory& traj, const ReducedCoefficients& rc) {
    if (traj.stokes.empty()) throw invalid_input_error("invariants: empty trajectory");
    InvariantReport rep;
    rep.second_invariant_applicable = traj.fixed_coefficients;

    auto s0_sq = [&](const StokesVector& s) {
        return traj.amplitude_form ? s.s0 * s.s0 : s.transverse_norm_sq();
    };
    const double s00 = s0_sq(traj.stokes.front());
    const double inv0 = second_invariant(traj.stokes.front(), rc);
    const double inv_scale = (std::abs(rc.cz) + 2.0 * std::abs(rc.c) + std::abs(rc.cx)) * s00;
    const double scale2 = inv_scale > 0.0 ? inv_scale : 1.0;

    for (const auto& s : traj.stokes) {
        rep.s0_sq_drift = std::max(rep.s0_sq_drift, std::abs(s0_sq(s) - s00) / s00);
        rep.second_invariant_drift =
            std::max(rep.second_invariant_drift, std::abs(second_invariant(s, rc) - inv0) / scale2);
    }
    return rep;
}

/// Global phase lambda = (arg u_x + arg u_y)/2, defined modulo pi, unwrapped
/// by nearest-branch continuation along the samples.
struct GlobalPhase {
    std::vector<double> lambda;
    double max_jump = 0.0; // largest |increment| after branch reduction
};

inline GlobalPhase global_phase(const Trajectory& traj) {
    if (!traj.amplitude_form || traj.amplitudes.empty())
        throw invalid_input_error("global_phase: amplitude-form trajectory required");
    GlobalPhase gp;
    gp.lambda.reserve(traj.z.size());
    constexpr double pi = std::numbers::pi;
    double prev = 0.0;
    for (std::size_t i = 0; i < traj.amplitudes.size(); ++i) {
        const auto& a = traj.amplitudes[i];
        const double floor_sq = 1e-24 * a.norm_sq();
        if (std::norm(a.ux) <= floor_sq || std::norm(a.uy) <= floor_sq)
            throw numerical_error("global_phase: amplitude vanishes at z = " + std::to_string(traj.z[i]) +
                                  "; phase undefined");
        const double raw = 0.5 * (std::arg(a.ux) + std::arg(a.uy));
        if (i == 0) {
            gp.lambda.push_back(raw);
            prev = raw;
            continue;
        }
        double inc = raw - prev;
        inc -= pi * std::round(inc / pi);
        gp.max_jump = std::max(gp.max_jump, std::abs(inc));
        const double next = gp.lambda.back() + inc;
        gp.lambda.push_back(next);
        prev = raw;
    }
    return gp;
}

/// Integrates in amplitude form and refines the sampling until the unwrapped
/// global phase moves by less than pi/2 between adjacent samples.
inline std::pair<Trajectory, GlobalPhase> integrate_with_phase(const PolarizationAmplitudes& init,
                                                               const CoefficientSchedule& schedule,
                                                               IntegrationRequest req,
                                                               int max_refinements = 6) {
    for (int attempt = 0;; ++attempt) {
        Trajectory traj = integrate_amplitudes(init, schedule, req);
        GlobalPhase gp = global_phase(traj);
        if (gp.max_jump < 0.5 * std::numbers::pi || attempt >= max_refinements)
            return {std::move(traj), std::move(gp)};
        req.samples = req.samples * 2 - 1;
    }
}

} // namespace fiberphase

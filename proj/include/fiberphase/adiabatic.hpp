#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fiberphase/dynamics.hpp"
#include "fiberphase/loop.hpp"
#include "fiberphase/ode.hpp"
#include "fiberphase/polarization.hpp"
#include "fiberphase/two_form.hpp"

namespace fiberphase {

/// Inverse of the pole linearization: maps an oscillator-space point back to
/// integrable tetragonal coefficients (+y pole convention):
/// b = alpha/2, c = beta/2, a = gamma + alpha/2, d = -c.
inline TetragonalCoefficients coefficients_from_oscillator(const Vec3& x) {
    TetragonalCoefficients k;
    k.b = 0.5 * x[0];
    k.c = 0.5 * x[1];
    k.a = x[2] + 0.5 * x[0];
    k.d = -k.c;
    return k;
}

struct AdiabaticOptions {
    double base_sweep_length = 300.0; // L; the run repeats at L, 2L, 4L
    double initial_action = 1e-4;     // I0 (Stokes units)
    OdeOptions ode{1e-11, 1e-11};
    int phase_average = 4;        // number of equispaced initial angles averaged per estimate
    int hold_samples = 64;        // endpoint samples over one final period
    double breach_threshold = 0.35;
    double chart_swap_ratio = 0.1;
};

struct AdiabaticSweep {
    double sweep_length = 0.0;
    double dtheta = 0.0;       // angle-variable shift, action-extrapolated to I -> 0
    double lambda_shift = 0.0; // global-phase shift after subtracting the c0 dynamical part
};

struct AdiabaticResult {
    std::vector<AdiabaticSweep> sweeps; // at L, 2L, 4L
    double dtheta_extrapolated = 0.0;
    double lambda_shift_extrapolated = 0.0;
    bool converged = true;          // successive sweep differences decreasing
    double max_action_drift = 0.0;  // max |I(z) - I(0)| / I(0) over all runs
};

namespace detail {

struct SingleRun {
    double dtheta = 0.0;
    double lambda_shift = 0.0;
    double action_drift = 0.0;
};

/// One adiabatic traversal of the loop over z in [0, L], followed by one
/// period at frozen end parameters. The angle deficit
///   theta(z) - theta(0) - integral_0^z omega
/// and the phase deficit
///   lambda(z) - lambda(0) - integral_0^z c0
/// oscillate around their asymptotic values; averaging them over the frozen
/// final period removes the oscillatory part.
inline SingleRun adiabatic_single_run(const ParameterLoop& loop, double L, double action,
                                      double theta0, const AdiabaticOptions& opt,
                                      const AngleChart& chart) {
    const OscillatorParams par0 = params_from(loop.position(0.0));
    const double w_end = frequency(par0);
    if (w_end <= 0.0) throw singularity_error("adiabatic run: loop start is not strictly stable");
    const double hold = 2.0 * std::numbers::pi / w_end;

    // Seed on the Poincare sphere near the +y pole: q = Sx, p = Sz.
    const CanonicalPair pq0 = chart.pq_from(ActionAngleState{action, theta0}, par0);
    const double sy0_sq = 1.0 - pq0.q * pq0.q - pq0.p * pq0.p;
    if (sy0_sq <= 0.0) throw invalid_input_error("adiabatic run: initial action too large for the pole chart");
    const double delta = std::atan2(std::sqrt(sy0_sq), pq0.q); // arg uy - arg ux
    const double mx = std::sqrt(0.5 * (1.0 + pq0.p));
    const double my = std::sqrt(0.5 * (1.0 - pq0.p));
    const Complex ux0 = mx * std::exp(Complex{0.0, -0.5 * delta});
    const Complex uy0 = my * std::exp(Complex{0.0, 0.5 * delta});

    auto position_clamped = [&](double z) { return loop.position(std::min(z, L) / L); };

    // State: Re ux, Im ux, Re uy, Im uy, Phi = int omega, Lam0 = int c0, lambda.
    auto rhs = [&](double z, const std::array<double, 7>& y, std::array<double, 7>& dy) {
        const Vec3 x = position_clamped(z);
        const OscillatorParams par = params_from(x);
        const double disc = par.discriminant();
        if (disc <= 0.0)
            throw singularity_error("adiabatic run: loop left the stable region at z = " + std::to_string(z));
        const TetragonalCoefficients k = coefficients_from_oscillator(x);
        const PolarizationAmplitudes amps{Complex{y[0], y[1]}, Complex{y[2], y[3]}};
        const auto d = coupled_mode_rhs(amps, k);
        dy[0] = d[0].real();
        dy[1] = d[0].imag();
        dy[2] = d[1].real();
        dy[3] = d[1].imag();
        dy[4] = std::sqrt(disc);
        dy[5] = 0.5 * (k.a + k.b);
        const double nx = std::norm(amps.ux), ny = std::norm(amps.uy);
        dy[6] = 0.5 * ((d[0] * std::conj(amps.ux)).imag() / nx + (d[1] * std::conj(amps.uy)).imag() / ny);
    };

    // Sample grid: dense enough to unwrap theta (omega dz < pi/8), with
    // hold_samples covering the frozen final period exactly.
    const double w_max = std::max(loop.max_frequency(), w_end);
    const std::size_t n_main =
        std::max<std::size_t>(2048, static_cast<std::size_t>(std::ceil(L * w_max / (std::numbers::pi / 8.0))));
    std::vector<double> grid;
    grid.reserve(n_main + opt.hold_samples + 2);
    for (std::size_t i = 0; i <= n_main; ++i)
        grid.push_back(L * static_cast<double>(i) / static_cast<double>(n_main));
    for (int j = 1; j <= opt.hold_samples; ++j)
        grid.push_back(L + hold * static_cast<double>(j) / static_cast<double>(opt.hold_samples));

    SingleRun out;
    double theta_prev = 0.0, theta_unwrapped = 0.0, theta_start = 0.0;
    double action_start = 0.0;
    double sum_dtheta = 0.0, sum_dlambda = 0.0;
    std::size_t n_hold_acc = 0;

    std::array<double, 7> y0{ux0.real(), ux0.imag(), uy0.real(), uy0.imag(), 0.0, 0.0, 0.0};
    integrate_sampled<7>(rhs, grid, y0, opt.ode, [&](std::size_t idx, double z, const std::array<double, 7>& y) {
        const PolarizationAmplitudes amps{Complex{y[0], y[1]}, Complex{y[2], y[3]}};
        const StokesVector s = stokes_from_amplitudes(amps);
        if (std::abs(s.sx) > opt.breach_threshold || std::abs(s.sz) > opt.breach_threshold)
            throw numerical_error("nonlinearity breach: trajectory left the linearization neighborhood at z = " +
                                  std::to_string(z));
        const OscillatorParams par = params_from(position_clamped(z));
        const CanonicalPair pq{s.sx, s.sz};
        const double th = chart.angle_from(pq, par);
        if (idx == 0) {
            theta_unwrapped = th;
            theta_start = th;
            action_start = chart.action_from(pq, par);
        } else {
            double inc = th - theta_prev;
            inc -= 2.0 * std::numbers::pi * std::round(inc / (2.0 * std::numbers::pi));
            theta_unwrapped += inc;
        }
        theta_prev = th;
        const double inst_action = chart.action_from(pq, par);
        out.action_drift = std::max(out.action_drift,
                                    std::abs(inst_action - action_start) / std::max(action_start, 1e-300));
        if (z >= L) {
            sum_dtheta += theta_unwrapped - theta_start - y[4];
            sum_dlambda += y[6] - y[5];
            ++n_hold_acc;
        }
    });

    out.dtheta = sum_dtheta / static_cast<double>(n_hold_acc);
    out.lambda_shift = sum_dlambda / static_cast<double>(n_hold_acc);
    return out;
}

inline AngleChart select_chart_for_loop(const ParameterLoop& loop, double swap_ratio) {
    double min_g = std::numeric_limits<double>::infinity();
    double min_a = std::numeric_limits<double>::infinity();
    for (const auto& x : loop.nodes()) {
        const OscillatorParams p = params_from(x);
        const double s = std::max(p.scale(), 1e-300);
        min_g = std::min(min_g, std::abs(p.gamma) / s);
        min_a = std::min(min_a, std::abs(p.alpha) / s);
    }
    AngleChart c;
    if (min_g >= swap_ratio && loop.min_gamma() > 0.0) {
        c.kind = AngleChart::Kind::gamma_based;
    } else if (min_a >= swap_ratio) {
        c.kind = AngleChart::Kind::alpha_based;
    } else {
        throw chart_error("no action-angle chart stays valid along the loop (alpha and gamma both pass "
                          "near zero)");
    }
    return c;
}

/// Quadratic (Neville) extrapolation of samples v(x_i) to x = 0.
inline double extrapolate_to_zero(std::span<const double> x, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double li = 1.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == i) continue;
            li *= (0.0 - x[j]) / (x[i] - x[j]);
        }
        acc += v[i] * li;
    }
    return acc;
}

} // namespace detail

/// Measures the Hannay angle by direct adiabatic simulation of the full
/// nonlinear amplitude dynamics.
///
/// For each sweep length L_k in {L, 2L, 4L} the loop is traversed once. Each
/// estimate averages phase_average initial angles (removing initial-phase
/// beats) and is Richardson-extrapolated in the action from runs at I0 and
/// 2 I0: the sphere's amplitude-dependent frequency shift contributes a
/// secular error proportional to I0 * L that would otherwise dominate. The
/// three per-L values are then extrapolated in 1/L.
inline AdiabaticResult adiabatic_hannay(const ParameterLoop& loop, const AdiabaticOptions& opt = {}) {
    if (!(opt.initial_action > 0.0)) throw invalid_input_error("adiabatic_hannay: initial action must be > 0");
    if (loop.min_discriminant_on_path() <= 0.0)
        throw singularity_error("adiabatic_hannay: loop must stay strictly inside the stable region");

    const AngleChart chart = detail::select_chart_for_loop(loop, opt.chart_swap_ratio);

    AdiabaticResult res;
    std::vector<double> inv_l, vth, vlam;
    for (int k = 0; k < 3; ++k) {
        const double L = opt.base_sweep_length * static_cast<double>(1 << k);
        double v_th[2] = {0.0, 0.0}, v_lam[2] = {0.0, 0.0};
        for (int ai = 0; ai < 2; ++ai) {
            const double action = opt.initial_action * static_cast<double>(ai + 1);
            double acc_th = 0.0, acc_lam = 0.0;
            for (int p = 0; p < opt.phase_average; ++p) {
                const double theta0 =
                    2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(opt.phase_average);
                const auto run = detail::adiabatic_single_run(loop, L, action, theta0, opt, chart);
                acc_th += run.dtheta;
                acc_lam += run.lambda_shift;
                res.max_action_drift = std::max(res.max_action_drift, run.action_drift);
            }
            v_th[ai] = acc_th / opt.phase_average;
            v_lam[ai] = acc_lam / opt.phase_average;
        }
        AdiabaticSweep sweep;
        sweep.sweep_length = L;
        sweep.dtheta = 2.0 * v_th[0] - v_th[1];          // linear extrapolation I -> 0
        sweep.lambda_shift = 2.0 * v_lam[0] - v_lam[1];
        res.sweeps.push_back(sweep);
        inv_l.push_back(1.0 / L);
        vth.push_back(sweep.dtheta);
        vlam.push_back(sweep.lambda_shift);
    }

    res.dtheta_extrapolated = detail::extrapolate_to_zero(inv_l, vth);
    res.lambda_shift_extrapolated = detail::extrapolate_to_zero(inv_l, vlam);
    const double d21 = std::abs(vth[1] - vth[0]);
    const double d32 = std::abs(vth[2] - vth[1]);
    res.converged = d32 <= 1.05 * d21 + 1e-12;
    return res;
}

struct ProbeEntry {
    double epsilon = 0.0; // minimum discriminant over the spanning surface
    double gamma_h = 0.0;
};

/// Quadrature of the angle 2-form over a family of loops approaching the
/// critical surface. Asserts that |gamma_H| strictly increases as the family
/// member's minimum discriminant decreases.
inline std::vector<ProbeEntry> singularity_probe(std::span<const ParameterLoop> family,
                                                 const SurfaceIntegralOptions& opt = {}) {
    if (family.size() < 2) throw invalid_input_error("singularity_probe: need at least two family members");
    std::vector<ProbeEntry> table;
    for (const auto& loop : family) {
        const Surface surf = build_planar_fan(loop);
        if (surf.min_vertex_discriminant <= 0.0)
            throw singularity_error("singularity_probe: family member crosses the critical surface");
        ProbeEntry e;
        e.epsilon = surf.min_vertex_discriminant;
        e.gamma_h = hannay_surface_integral(surf, opt).value;
        table.push_back(e);
    }
    std::vector<ProbeEntry> sorted = table;
    std::sort(sorted.begin(), sorted.end(), [](const ProbeEntry& a, const ProbeEntry& b) {
        return a.epsilon > b.epsilon;
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (!(std::abs(sorted[i].gamma_h) > std::abs(sorted[i - 1].gamma_h)))
            throw numerical_error("singularity_probe: |gamma_H| is not strictly increasing toward the "
                                  "critical surface");
    }
    return table;
}

} // namespace fiberphase

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "fiberphase/errors.hpp"

namespace fiberphase {

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 100'000'000;
};

struct OdeStats {
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    std::size_t rhs_evaluations = 0;
    double smallest_step = std::numeric_limits<double>::infinity();
    double largest_step = 0.0;
};

namespace detail {

template <std::size_t N>
bool all_finite(const std::array<double, N>& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace detail

/// Adaptive embedded Dormand-Prince 5(4) integrator.
///
/// Integrates forward from samples.front() to samples.back() and invokes
/// `observe(index, z, y)` at every entry of `samples` (which must be strictly
/// increasing). Steps are clamped so the state lands exactly on each sample
/// point; no interpolation is involved, so observed states carry the full
/// integration accuracy. Fully deterministic for identical inputs.
///
/// Throws a numerical error when the controller underflows the step size
/// (stiffness) or the state stops being finite (divergence), both with the
/// offending z location.
template <std::size_t N, class Rhs, class Observer>
OdeStats integrate_sampled(Rhs&& rhs, std::span<const double> samples,
                           std::array<double, N> y, const OdeOptions& opt,
                           Observer&& observe) {
    using State = std::array<double, N>;
    if (samples.size() < 2) throw invalid_input_error("integrate_sampled: need at least two sample points");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i] > samples[i - 1]))
            throw invalid_input_error("integrate_sampled: sample grid must be strictly increasing");
    if (!(opt.abs_tol > 0.0) || !(opt.rel_tol > 0.0))
        throw invalid_input_error("integrate_sampled: tolerances must be positive");
    if (!detail::all_finite(y)) throw invalid_input_error("integrate_sampled: non-finite initial state");

    // Dormand-Prince 5(4) tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b*, the embedded error weights (k7 = FSAL stage).
    constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
    constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
    constexpr double e4 = 125.0 / 192 - 393.0 / 640;
    constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
    constexpr double e7 = -1.0 / 40;

    OdeStats stats;
    double z = samples.front();
    const double z_end = samples.back();

    State k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;
    rhs(z, y, k1);
    ++stats.rhs_evaluations;

    // Initial step size: crude norm-based guess, refined by the controller.
    double h;
    {
        double dn = 0.0, yn = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double sc = opt.abs_tol + opt.rel_tol * std::abs(y[i]);
            dn = std::max(dn, std::abs(k1[i]) / sc);
            yn = std::max(yn, std::abs(y[i]) / sc);
        }
        h = (dn > 0.0) ? 0.01 * std::max(yn, 1.0) / dn : 1e-6 * (z_end - z);
        h = std::min({h, z_end - z, opt.max_step});
        h = std::max(h, 1e-12 * (z_end - z));
    }

    std::size_t next_sample = 0;
    observe(next_sample, z, y);
    ++next_sample;

    const double underflow_floor_rel = 16.0 * std::numeric_limits<double>::epsilon();
    std::size_t steps = 0;

    while (next_sample < samples.size()) {
        const double target = samples[next_sample];
        bool clamped = false;
        double h_try = h;
        if (z + h_try >= target) {
            h_try = target - z;
            clamped = true;
        }
        if (h_try > opt.max_step) { h_try = opt.max_step; clamped = false; }

        if (++steps > opt.max_steps)
            throw numerical_error("integration exceeded max_steps at z = " + std::to_string(z));

        // Stage evaluations.
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h_try * a21 * k1[i];
        rhs(z + c2 * h_try, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h_try * (a31 * k1[i] + a32 * k2[i]);
        rhs(z + c3 * h_try, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h_try * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(z + c4 * h_try, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_try * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(z + c5 * h_try, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h_try * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(z + h_try, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h_try * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(z + h_try, ynew, k7);
        stats.rhs_evaluations += 6;

        // Scaled RMS error of the embedded pair.
        double err = 0.0;
        bool finite = detail::all_finite(ynew);
        if (finite) {
            for (std::size_t i = 0; i < N; ++i) {
                double ei = h_try * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                double r = ei / sc;
                err += r * r;
            }
            err = std::sqrt(err / static_cast<double>(N));
        }

        if (finite && err <= 1.0) {
            z = clamped ? target : z + h_try;
            y = ynew;
            k1 = k7; // FSAL
            ++stats.steps_accepted;
            stats.smallest_step = std::min(stats.smallest_step, h_try);
            stats.largest_step = std::max(stats.largest_step, h_try);
            if (clamped) {
                observe(next_sample, z, y);
                ++next_sample;
            }
            // A clamped (grid-shortened) step says nothing about the natural
            // step size; keep h unchanged there instead of feeding its tiny
            // error into the controller.
            if (!clamped) {
                double factor = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
                factor = std::min(5.0, std::max(0.2, factor));
                h = std::min(h_try * factor, opt.max_step);
            }
        } else {
            ++stats.steps_rejected;
            if (!finite) {
                h = 0.25 * h_try;
            } else {
                double factor = 0.9 * std::pow(err, -0.2);
                h = h_try * std::min(0.9, std::max(0.1, factor));
            }
            if (h < underflow_floor_rel * std::max(std::abs(z), 1.0)) {
                if (!finite)
                    throw numerical_error("divergence: state became non-finite at z = " + std::to_string(z));
                throw numerical_error("stiffness: step size underflow at z = " + std::to_string(z));
            }
        }
    }
    return stats;
}

} // namespace fiberphase

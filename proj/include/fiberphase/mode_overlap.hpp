#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fiberphase/errors.hpp"

namespace fiberphase {

/// Transverse mode of the fundamental guided wave. Gaussian modes carry an
/// analytic overlap ratio; tabulated modes are square grids of |F| samples,
/// peak-normalized to 1, spanning [-extent, extent] in both directions.
struct ModeProfile {
    enum class Kind { gaussian, tabulated };
    Kind kind = Kind::gaussian;

    double width = 1.0;  // gaussian 1/e half-width w (F = exp(-r^2/w^2))
    double k0 = 1.0;     // vacuum wavenumber (rad per length)
    double beta0 = 1.0;  // modal propagation constant (rad per length)

    std::vector<double> grid; // row-major n x n samples of F (tabulated case)
    std::size_t n = 0;
    double extent = 0.0;

    void validate() const {
        if (!(k0 > 0.0) || !(beta0 > 0.0)) throw invalid_input_error("mode: k0 and beta0 must be positive");
        if (kind == Kind::gaussian) {
            if (!(width > 0.0)) throw invalid_input_error("mode: gaussian width must be positive");
            return;
        }
        if (n < 5 || grid.size() != n * n) throw invalid_input_error("mode: tabulated grid must be square (n >= 5)");
        if (!(extent > 0.0)) throw invalid_input_error("mode: tabulated grid extent must be positive");
        double peak = 0.0;
        for (double v : grid) peak = std::max(peak, std::abs(v));
        if (std::abs(peak - 1.0) > 1e-9)
            throw invalid_input_error("mode: tabulated grid must be peak-normalized to 1");
    }
};

namespace detail {

/// Composite-Simpson integral of F^p over the tabulated grid, subsampled by
/// `stride` (stride = 1 uses the full grid). The point count per axis after
/// striding must be odd.
inline double grid_power_integral(const ModeProfile& m, int power, std::size_t stride) {
    const std::size_t np = (m.n - 1) / stride + 1;
    const double h = 2.0 * m.extent / static_cast<double>(m.n - 1) * static_cast<double>(stride);
    auto w1d = [np](std::size_t i) -> double {
        if (i == 0 || i == np - 1) return 1.0;
        return (i % 2 == 1) ? 4.0 : 2.0;
    };
    double acc = 0.0;
    for (std::size_t r = 0; r < np; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < np; ++c) {
            const double v = m.grid[r * stride * m.n + c * stride];
            row += w1d(c) * std::pow(std::abs(v), power);
        }
        acc += w1d(r) * row;
    }
    return acc * h * h / 9.0;
}

} // namespace detail

struct OverlapRatioResult {
    double ratio = 0.0;           // integral |F|^4 / integral |F|^2
    double error_estimate = 0.0;  // Richardson estimate from grid halving (tabulated only)
    double observed_order = 0.0;  // convergence order from three grid levels (tabulated only)
};

/// Mode overlap ratio entering the nonlinearity parameters. Gaussian modes
/// use the closed form (the ratio is exactly 1/2 for every width). Tabulated
/// modes use composite-Simpson quadrature on the given samples, with the
/// coarse-grid comparison serving as the error estimate.
inline OverlapRatioResult overlap_ratio(const ModeProfile& mode, double rel_tol = 1e-10) {
    mode.validate();
    OverlapRatioResult res;
    if (mode.kind == ModeProfile::Kind::gaussian) {
        res.ratio = 0.5;
        return res;
    }
    // need (n-1) divisible by 4 so the half-resolution grid stays Simpson-compatible
    if ((mode.n - 1) % 4 != 0)
        throw invalid_input_error("mode: tabulated grid needs n = 4k + 1 points per axis");

    auto ratio_at = [&](std::size_t stride) {
        const double i4 = detail::grid_power_integral(mode, 4, stride);
        const double i2 = detail::grid_power_integral(mode, 2, stride);
        if (!(i2 > 0.0)) throw invalid_input_error("mode: grid has vanishing norm");
        return i4 / i2;
    };
    const double r1 = ratio_at(1); // full grid
    const double r2 = ratio_at(2); // half resolution
    res.ratio = r1;
    res.error_estimate = std::abs(r1 - r2);
    if ((mode.n - 1) % 8 == 0) {
        const double r4 = ratio_at(4); // quarter resolution
        const double d21 = std::abs(r2 - r1), d42 = std::abs(r4 - r2);
        res.observed_order = (d21 > 0.0 && d42 > 0.0) ? std::log2(d42 / d21) : 0.0;
    }
    if (res.error_estimate > rel_tol * std::max(1.0, std::abs(res.ratio)))
        throw numerical_error("mode grid too coarse: overlap-ratio error estimate " +
                              std::to_string(res.error_estimate) + " exceeds the requested tolerance");
    return res;
}

/// Nonlinearity parameter gamma_jklm = (3 k0^2 / (8 beta0)) chi_jklm *
/// (integral |F|^4 / integral |F|^2).
inline double nonlinearity_parameter(double chi_component, const ModeProfile& mode, double rel_tol = 1e-10) {
    const double ratio = overlap_ratio(mode, rel_tol).ratio;
    return 3.0 * mode.k0 * mode.k0 / (8.0 * mode.beta0) * chi_component * ratio;
}

/// Scale factor shared by every tensor component, so whole-tensor conversion
/// preserves the tetragonal relations bit-exactly.
inline double nonlinearity_scale(const ModeProfile& mode, double rel_tol = 1e-10) {
    const double ratio = overlap_ratio(mode, rel_tol).ratio;
    return 3.0 * mode.k0 * mode.k0 / (8.0 * mode.beta0) * ratio;
}

/// Builds a peak-normalized tabulated gaussian grid (mainly a test fixture
/// and a reference for convergence-order measurements).
inline ModeProfile tabulated_gaussian(double width, double extent, std::size_t n, double k0 = 1.0,
                                      double beta0 = 1.0) {
    ModeProfile m;
    m.kind = ModeProfile::Kind::tabulated;
    m.width = width;
    m.k0 = k0;
    m.beta0 = beta0;
    m.n = n;
    m.extent = extent;
    m.grid.resize(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        const double y = -extent + 2.0 * extent * static_cast<double>(r) / static_cast<double>(n - 1);
        for (std::size_t c = 0; c < n; ++c) {
            const double x = -extent + 2.0 * extent * static_cast<double>(c) / static_cast<double>(n - 1);
            m.grid[r * n + c] = std::exp(-(x * x + y * y) / (width * width));
        }
    }
    return m;
}

} // namespace fiberphase

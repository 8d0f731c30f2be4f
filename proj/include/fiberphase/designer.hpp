#pragma once

#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fiberphase/adiabatic.hpp"
#include "fiberphase/chi3.hpp"
#include "fiberphase/dynamics.hpp"
#include "fiberphase/emt.hpp"
#include "fiberphase/errors.hpp"
#include "fiberphase/loop.hpp"
#include "fiberphase/mode_overlap.hpp"
#include "fiberphase/polarization.hpp"
#include "fiberphase/two_form.hpp"

namespace fiberphase {

/// Oscillator-space image of integrable tetragonal coefficients:
/// (alpha, beta, gamma) = (2b, 2c, a - b) at the +y pole, negated at -y.
/// Inverse of coefficients_from_oscillator on stable triples.
inline OscillatorParams oscillator_params_from_coefficients(const TetragonalCoefficients& k,
                                                            Pole pole = Pole::plus_y) {
    if (!k.is_integrable(1e-9))
        throw structure_error("oscillator_params_from_coefficients: coefficients must satisfy d = -c, xi = 0");
    return linearize_at_pole(reduce(k), pole).params;
}

/// One z-station of the physical fiber design. The material is either an
/// isotropic composite or a z-aligned uniaxial crystallite composite; chi is
/// the inclusion's transverse chi3 block in the crystal frame and orientation
/// is the in-plane rotation of the crystallites at this station.
struct ProfileSample {
    double z = 0.0;
    bool uniaxial = false;
    IsotropicCompositeSpec iso;
    UniaxialInclusionSpec uni;
    Chi3TensorTetragonal chi;
    double orientation = 0.0;
};

struct FiberProfile {
    double length = 1.0;
    bool closed = false;
    std::vector<ProfileSample> samples;

    void validate() const {
        if (!(length > 0.0)) throw invalid_input_error("profile: length must be positive");
        if (samples.size() < 4) throw invalid_input_error("profile: need at least 4 z samples");
        if (std::abs(samples.front().z) > 1e-12 * length)
            throw invalid_input_error("profile: first sample must sit at z = 0");
        if (std::abs(samples.back().z - length) > 1e-12 * length)
            throw invalid_input_error("profile: last sample must sit at z = length");
        for (std::size_t i = 1; i < samples.size(); ++i)
            if (!(samples[i].z > samples[i - 1].z))
                throw invalid_input_error("profile: z samples must be strictly increasing");
        const bool endpoints_match = endpoints_equal(1e-10);
        if (closed && !endpoints_match)
            throw invalid_input_error("profile: closure flag set but endpoint materials differ");
        if (!closed && endpoints_match)
            throw invalid_input_error("profile: endpoints match but closure flag is unset");
    }

    /// Endpoint comparison goes through the oriented tensor, so a profile
    /// whose orientation winds by a multiple of the crystal's 4-fold period
    /// still counts as closed.
    bool endpoints_equal(double tol) const {
        const ProfileSample& a = samples.front();
        const ProfileSample& b = samples.back();
        auto near = [tol](double x, double y) { return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)}); };
        if (a.uniaxial != b.uniaxial) return false;
        bool ok = true;
        if (a.uniaxial) {
            ok = near(a.uni.eps_perp, b.uni.eps_perp) && near(a.uni.eps_par, b.uni.eps_par) &&
                 near(a.uni.f, b.uni.f) && near(a.uni.g, b.uni.g) && near(a.uni.eps_host, b.uni.eps_host);
        } else {
            ok = near(a.iso.eps1, b.iso.eps1) && near(a.iso.eps2, b.iso.eps2) && near(a.iso.f, b.iso.f) &&
                 near(a.iso.g, b.iso.g);
        }
        if (!ok) return false;
        const Chi3TensorTetragonal ta = rotate_inplane(a.chi, a.orientation);
        const Chi3TensorTetragonal tb = rotate_inplane(b.chi, b.orientation);
        return near(ta.xxxx, tb.xxxx) && near(ta.xxyy, tb.xxyy) && near(ta.xyxy, tb.xyxy) &&
               near(ta.xyyx, tb.xyyx) && near(ta.yyxy, tb.yyxy) && near(ta.yxyy, tb.yxyy) &&
               near(ta.xyyy, tb.xyyy) && near(ta.xxxy, tb.xxxy);
    }
};

struct PipelinePointResult {
    Vec3 oscillator;                 // (alpha, beta, gamma)
    TetragonalCoefficients coeffs;
    bool projected = false;
    double eps_e_x = 0.0, eps_e_z = 0.0;
};

struct PipelineOptions {
    IntegrabilityPolicy integrability;
    double overlap_tol = 1e-10;
    int threads = 1;
    bool probe_mode = false; // permits loops whose surface touches the critical set
};

/// Material record -> oscillator-space point:
/// effective medium -> local-field derivatives -> decoupling-approximation
/// effective chi3 -> nonlinearity parameters -> coupled-mode coefficients ->
/// (alpha, beta, gamma).
inline PipelinePointResult map_sample(const ProfileSample& sample, const ModeProfile& mode,
                                      const PipelineOptions& opt) {
    std::array<double, 3> derivs{};
    double f = 0.0;
    PipelinePointResult out;
    if (sample.uniaxial) {
        sample.uni.validate();
        const auto r = emt_uniaxial_aligned(sample.uni, AlignedAxis::z);
        derivs = r.deriv;
        f = sample.uni.f;
        out.eps_e_x = r.eps_e[0];
        out.eps_e_z = r.eps_e[2];
    } else {
        sample.iso.validate();
        const double d = emt_derivative_eps1(sample.iso);
        derivs = {d, d, d};
        f = sample.iso.f;
        out.eps_e_x = out.eps_e_z = emt_general_g(sample.iso);
    }
    if (!(f > 0.0)) throw invalid_input_error("profile sample: volume fraction must be positive");

    const Chi3TensorTetragonal oriented = rotate_inplane(sample.chi, sample.orientation);
    const auto eff = chi3_effective_anisotropic(oriented, derivs, f);
    if (!eff.negative_ij_products.empty())
        throw numerical_error("effective chi3: negative derivative product on components");
    if (!eff.tetragonal)
        throw structure_error("effective chi3 lost tetragonal symmetry (transverse derivatives unequal)");
    const Chi3TensorTetragonal chi_e = eff.full.to_tetragonal(1e-12);

    const double scale = nonlinearity_scale(mode, opt.overlap_tol);
    const auto extraction = coefficients_from_chi3(chi_e.scaled(scale), opt.integrability);
    out.coeffs = extraction.coeffs;
    out.projected = extraction.projected;
    out.oscillator = Vec3{2.0 * out.coeffs.b, 2.0 * out.coeffs.c, out.coeffs.a - out.coeffs.b};
    return out;
}

struct ProfileLoopResult {
    ParameterLoop loop;
    std::vector<PipelinePointResult> points;
    std::size_t projected_count = 0;
};

/// Maps every profile sample through the material pipeline (parallel over
/// samples, deterministic ordered assembly) and assembles the closed
/// parameter loop with its planar-fan spanning surface gate.
inline ProfileLoopResult profile_to_loop(const FiberProfile& profile, const ModeProfile& mode,
                                         const PipelineOptions& opt = {}) {
    profile.validate();
    mode.validate();
    if (!profile.closed) throw invalid_input_error("profile_to_loop: profile must be closed");

    const std::size_t n = profile.samples.size();
    std::vector<PipelinePointResult> points(n);
    std::exception_ptr first_error;

    const int threads = std::max(1, opt.threads);
    if (threads == 1 || n < 8) {
        for (std::size_t i = 0; i < n; ++i) points[i] = map_sample(profile.samples[i], mode, opt);
    } else {
        std::vector<std::thread> pool;
        std::mutex err_mutex;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi]() {
                try {
                    for (std::size_t i = lo; i < hi; ++i)
                        points[i] = map_sample(profile.samples[i], mode, opt);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<Vec3> nodes;
    nodes.reserve(n);
    for (const auto& p : points) nodes.push_back(p.oscillator);

    ProfileLoopResult out{ParameterLoop::from_nodes(nodes), std::move(points), 0};
    for (const auto& p : out.points)
        if (p.projected) ++out.projected_count;

    if (!opt.probe_mode) {
        const Surface fan = build_planar_fan(out.loop);
        if (!(fan.min_vertex_discriminant > 0.0)) {
            // name the offending z range for the error message
            double z_lo = profile.length, z_hi = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (discriminant_of(out.points[i].oscillator) <= 0.0) {
                    z_lo = std::min(z_lo, profile.samples[i].z);
                    z_hi = std::max(z_hi, profile.samples[i].z);
                }
            }
            throw singularity_error("profile loop touches the critical surface (z in [" +
                                    std::to_string(z_lo) + ", " + std::to_string(z_hi) + "])");
        }
    }
    return out;
}

} // namespace fiberphase

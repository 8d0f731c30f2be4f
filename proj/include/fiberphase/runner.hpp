#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fiberphase/adiabatic.hpp"
#include "fiberphase/chi3.hpp"
#include "fiberphase/config.hpp"
#include "fiberphase/csv.hpp"
#include "fiberphase/designer.hpp"
#include "fiberphase/dynamics.hpp"
#include "fiberphase/emt.hpp"
#include "fiberphase/loop.hpp"
#include "fiberphase/mode_overlap.hpp"
#include "fiberphase/polarization.hpp"
#include "fiberphase/two_form.hpp"
#include "fiberphase/version.hpp"

namespace fiberphase {

/// Global flag overrides; flags win over config-file values.
struct RunOverrides {
    std::optional<double> tol_abs;
    std::optional<double> tol_rel;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

namespace run_detail {

inline OdeOptions parse_integrator(const Json& cfg, const RunOverrides& ov) {
    OdeOptions ode;
    if (cfg.contains("integrator")) {
        const Json& j = cfg["integrator"];
        require_known_keys(j, {"tol_abs", "tol_rel", "max_steps"}, "integrator");
        ode.abs_tol = get_number(j, "tol_abs", ode.abs_tol);
        ode.rel_tol = get_number(j, "tol_rel", ode.rel_tol);
        ode.max_steps = static_cast<std::size_t>(get_number(j, "max_steps", 1e8));
    }
    if (ov.tol_abs) ode.abs_tol = *ov.tol_abs;
    if (ov.tol_rel) ode.rel_tol = *ov.tol_rel;
    return ode;
}

inline TetragonalCoefficients parse_coefficients(const Json& j) {
    require_known_keys(j, {"a", "b", "c", "d", "xi_x", "xi_y"}, "coefficients");
    TetragonalCoefficients k;
    k.a = require_number(j, "a", "coefficients");
    k.b = require_number(j, "b", "coefficients");
    k.c = require_number(j, "c", "coefficients");
    k.d = require_number(j, "d", "coefficients");
    auto parse_xi = [&](const char* key) -> Complex {
        if (!j.contains(key)) return Complex{0.0, 0.0};
        const Json& x = j[key];
        if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number())
            throw config_error(std::string("coefficients: ") + key + " must be [re, im]");
        return Complex{x[0].get<double>(), x[1].get<double>()};
    };
    k.xi_x = parse_xi("xi_x");
    k.xi_y = parse_xi("xi_y");
    if (!k.finite()) throw config_error("coefficients: values must be finite");
    return k;
}

inline PolarizationAmplitudes parse_initial(const Json& j, std::uint64_t seed) {
    require_known_keys(j, {"ux", "uy", "stokes", "random"}, "initial");
    if (get_bool(j, "random", false)) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        PolarizationAmplitudes a{Complex{gauss(rng), gauss(rng)}, Complex{gauss(rng), gauss(rng)}};
        const double n = std::sqrt(a.norm_sq());
        a.ux /= n;
        a.uy /= n;
        return a;
    }
    if (j.contains("stokes")) {
        const Json& s = j["stokes"];
        if (!s.is_array() || s.size() != 4) throw config_error("initial.stokes must be [s0, sx, sy, sz]");
        const double s0 = s[0].get<double>(), sx = s[1].get<double>(), sy = s[2].get<double>(),
                     sz = s[3].get<double>();
        if (!(s0 > 0.0)) throw config_error("initial.stokes: s0 must be positive");
        if (std::abs(sx * sx + sy * sy + sz * sz - s0 * s0) > 1e-9 * s0 * s0)
            throw config_error("initial.stokes must satisfy sx^2 + sy^2 + sz^2 = s0^2");
        // amplitude lift in the lambda = 0 gauge
        const double mx = std::sqrt(0.5 * (s0 + sz)), my = std::sqrt(0.5 * (s0 - sz));
        const double delta = std::atan2(sy, sx);
        return PolarizationAmplitudes{mx * std::exp(Complex{0.0, -0.5 * delta}),
                                      my * std::exp(Complex{0.0, 0.5 * delta})};
    }
    auto parse_c = [&](const char* key) {
        if (!j.contains(key)) throw config_error(std::string("initial: missing ") + key);
        const Json& x = j[key];
        if (!x.is_array() || x.size() != 2) throw config_error(std::string("initial: ") + key + " must be [re, im]");
        return Complex{x[0].get<double>(), x[1].get<double>()};
    };
    return PolarizationAmplitudes{parse_c("ux"), parse_c("uy")};
}

inline ParameterLoop parse_loop(const Json& j) {
    require_known_keys(j, {"nodes", "family", "omega", "chi", "h", "r", "resample"}, "loop");
    const std::size_t resample =
        static_cast<std::size_t>(get_number(j, "resample", static_cast<double>(ParameterLoop::min_nodes)));
    const std::string family = get_string(j, "family", "");
    if (family == "hyperbolic-cap")
        return ParameterLoop::hyperbolic_cap(require_number(j, "omega", "loop"), require_number(j, "chi", "loop"),
                                             std::max(resample, ParameterLoop::min_nodes));
    if (family == "planar-circle")
        return ParameterLoop::planar_circle(require_number(j, "h", "loop"), require_number(j, "r", "loop"),
                                            std::max(resample, ParameterLoop::min_nodes));
    if (!family.empty()) throw config_error("loop: unknown family '" + family + "'");
    if (!j.contains("nodes")) throw config_error("loop: provide either nodes or a named family");
    std::vector<Vec3> nodes;
    for (const auto& row : j["nodes"]) {
        if (!row.is_array() || row.size() != 3) throw config_error("loop.nodes rows must be [alpha, beta, gamma]");
        nodes.push_back(Vec3{row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    }
    return ParameterLoop::from_nodes(nodes, std::max(resample, ParameterLoop::min_nodes));
}

inline SurfaceIntegralOptions parse_quadrature(const Json& cfg) {
    SurfaceIntegralOptions q;
    if (cfg.contains("quadrature")) {
        const Json& j = cfg["quadrature"];
        require_known_keys(j, {"abs_tol", "rel_tol", "max_triangles"}, "quadrature");
        q.abs_tol = get_number(j, "abs_tol", q.abs_tol);
        q.rel_tol = get_number(j, "rel_tol", q.rel_tol);
        q.max_triangles = static_cast<std::size_t>(get_number(j, "max_triangles", 2e6));
    }
    return q;
}

inline AdiabaticOptions parse_adiabatic(const Json& cfg, const RunOverrides& ov, double default_length) {
    AdiabaticOptions a;
    a.base_sweep_length = default_length;
    if (cfg.contains("adiabatic")) {
        const Json& j = cfg["adiabatic"];
        require_known_keys(j, {"enabled", "sweep_length", "action", "tol_abs", "tol_rel", "phase_average",
                               "hold_samples", "breach_threshold"},
                           "adiabatic");
        a.base_sweep_length = get_number(j, "sweep_length", a.base_sweep_length);
        a.initial_action = get_number(j, "action", a.initial_action);
        a.ode.abs_tol = get_number(j, "tol_abs", a.ode.abs_tol);
        a.ode.rel_tol = get_number(j, "tol_rel", a.ode.rel_tol);
        a.phase_average = static_cast<int>(get_number(j, "phase_average", a.phase_average));
        a.hold_samples = static_cast<int>(get_number(j, "hold_samples", a.hold_samples));
        a.breach_threshold = get_number(j, "breach_threshold", a.breach_threshold);
    }
    if (ov.tol_abs) a.ode.abs_tol = *ov.tol_abs;
    if (ov.tol_rel) a.ode.rel_tol = *ov.tol_rel;
    return a;
}

inline ModeProfile parse_mode(const Json& j) {
    require_known_keys(j, {"kind", "width", "k0", "beta0", "extent", "n"}, "mode");
    const std::string kind = get_string(j, "kind", "gaussian");
    const double width = require_number(j, "width", "mode");
    const double k0 = require_number(j, "k0", "mode");
    const double beta0 = require_number(j, "beta0", "mode");
    if (kind == "gaussian") {
        ModeProfile m;
        m.kind = ModeProfile::Kind::gaussian;
        m.width = width;
        m.k0 = k0;
        m.beta0 = beta0;
        m.validate();
        return m;
    }
    if (kind == "tabulated-gaussian") {
        const double extent = get_number(j, "extent", 6.0 * width);
        const std::size_t n = static_cast<std::size_t>(get_number(j, "n", 513.0));
        ModeProfile m = tabulated_gaussian(width, extent, n, k0, beta0);
        m.validate();
        return m;
    }
    throw config_error("mode.kind must be 'gaussian' or 'tabulated-gaussian'");
}

inline Chi3TensorTetragonal parse_chi3(const Json& j) {
    require_known_keys(j, {"xxxx", "xxyy", "xyxy", "xyyx", "yyxy", "yxyy", "xyyy", "xxxy"}, "chi3");
    Chi3TensorTetragonal t;
    t.xxxx = get_number(j, "xxxx", 0.0);
    t.xxyy = get_number(j, "xxyy", 0.0);
    t.xyxy = get_number(j, "xyxy", 0.0);
    t.xyyx = get_number(j, "xyyx", 0.0);
    t.yyxy = get_number(j, "yyxy", 0.0);
    t.yxyy = get_number(j, "yxyy", 0.0);
    t.xyyy = get_number(j, "xyyy", 0.0);
    t.xxxy = get_number(j, "xxxy", 0.0);
    return t;
}

inline FiberProfile parse_profile(const Json& j) {
    require_known_keys(j, {"length", "closed", "samples"}, "profile");
    FiberProfile p;
    p.length = require_number(j, "length", "profile");
    p.closed = get_bool(j, "closed", false);
    if (!j.contains("samples") || !j["samples"].is_array())
        throw config_error("profile.samples must be an array");
    for (const auto& row : j["samples"]) {
        require_known_keys(row, {"z", "material", "chi3", "orientation"}, "profile sample");
        ProfileSample s;
        s.z = require_number(row, "z", "profile sample");
        s.orientation = get_number(row, "orientation", 0.0);
        if (!row.contains("material")) throw config_error("profile sample: missing material");
        const Json& m = row["material"];
        const std::string type = get_string(m, "type", "isotropic");
        if (type == "isotropic") {
            require_known_keys(m, {"type", "eps1", "eps2", "f", "g"}, "material");
            s.uniaxial = false;
            s.iso.eps1 = require_number(m, "eps1", "material");
            s.iso.eps2 = require_number(m, "eps2", "material");
            s.iso.f = require_number(m, "f", "material");
            s.iso.g = get_number(m, "g", 1.0 / 3.0);
        } else if (type == "uniaxial") {
            require_known_keys(m, {"type", "eps_perp", "eps_par", "f", "g", "eps_host"}, "material");
            s.uniaxial = true;
            s.uni.eps_perp = require_number(m, "eps_perp", "material");
            s.uni.eps_par = require_number(m, "eps_par", "material");
            s.uni.f = require_number(m, "f", "material");
            s.uni.g = get_number(m, "g", 1.0 / 3.0);
            s.uni.eps_host = require_number(m, "eps_host", "material");
        } else {
            throw config_error("material.type must be 'isotropic' or 'uniaxial'");
        }
        if (!row.contains("chi3")) throw config_error("profile sample: missing chi3 tensor");
        s.chi = parse_chi3(row["chi3"]);
        p.samples.push_back(s);
    }
    return p;
}

/// Trajectory CSV in the fixed export schema; lambda comes from the unwrapped
/// global phase and H/inv2 use the instantaneous reduced coefficients.
inline CsvWriter trajectory_csv(const Trajectory& traj, const std::vector<double>& lambda,
                                const std::function<ReducedCoefficients(double)>& rc_of_z) {
    CsvWriter csv({"z", "Re(u_x)", "Im(u_x)", "Re(u_y)", "Im(u_y)", "s0", "sx", "sy", "sz", "lambda", "H",
                   "inv2"});
    for (std::size_t i = 0; i < traj.z.size(); ++i) {
        const auto& a = traj.amplitudes[i];
        const auto& s = traj.stokes[i];
        const ReducedCoefficients rc = rc_of_z(traj.z[i]);
        csv.row({traj.z[i], a.ux.real(), a.ux.imag(), a.uy.real(), a.uy.imag(), s.s0, s.sx, s.sy, s.sz,
                 lambda[i], hamiltonian_value(s, rc), second_invariant(s, rc)});
    }
    return csv;
}

} // namespace run_detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOutcome {
    InvariantReport invariants;
    OdeStats stats;
};

inline SimulateOutcome run_simulate(const Json& cfg, const std::filesystem::path& out_dir,
                                    const RunOverrides& ov = {}) {
    require_known_keys(cfg, {"integrator", "coefficients", "initial", "z", "seed"}, "simulate config");
    if (!cfg.contains("coefficients")) throw config_error("simulate: missing coefficients");
    if (!cfg.contains("initial")) throw config_error("simulate: missing initial state");

    const TetragonalCoefficients k = run_detail::parse_coefficients(cfg["coefficients"]);
    const std::uint64_t seed = ov.seed ? *ov.seed : static_cast<std::uint64_t>(get_number(cfg, "seed", 12345.0));
    const PolarizationAmplitudes init = run_detail::parse_initial(cfg["initial"], seed);

    IntegrationRequest req;
    req.ode = run_detail::parse_integrator(cfg, ov);
    if (cfg.contains("z")) {
        require_known_keys(cfg["z"], {"begin", "end", "samples"}, "z");
        req.z_begin = get_number(cfg["z"], "begin", 0.0);
        req.z_end = require_number(cfg["z"], "end", "z");
        req.samples = static_cast<std::size_t>(get_number(cfg["z"], "samples", 1001.0));
    } else {
        throw config_error("simulate: missing z span");
    }

    auto [traj, phase] = integrate_with_phase(init, CoefficientSchedule::constant(k), req);
    const ReducedCoefficients rc = reduce(k);
    const InvariantReport inv = invariants(traj, rc);

    auto csv = run_detail::trajectory_csv(traj, phase.lambda, [&](double) { return rc; });
    csv.save(out_dir / "trajectory.csv");

    Json diag;
    diag["version"] = version_string;
    diag["config_hash"] = config_hash(cfg);
    diag["s0_sq_drift"] = inv.s0_sq_drift;
    diag["second_invariant_drift"] = inv.second_invariant_drift;
    diag["second_invariant_applicable"] = inv.second_invariant_applicable;
    diag["steps_accepted"] = traj.stats.steps_accepted;
    diag["steps_rejected"] = traj.stats.steps_rejected;
    diag["rhs_evaluations"] = traj.stats.rhs_evaluations;
    diag["smallest_step"] = traj.stats.smallest_step;
    diag["largest_step"] = traj.stats.largest_step;
    diag["max_phase_jump"] = phase.max_jump;
    write_file_atomic(out_dir / "diagnostics.json", diag.dump(2) + "\n");
    return SimulateOutcome{inv, traj.stats};
}

// ---------------------------------------------------------------------------
// hannay
// ---------------------------------------------------------------------------

struct HannayOutcome {
    double gamma_surface = 0.0;
    double surface_error = 0.0;
    double gamma_line = std::numeric_limits<double>::quiet_NaN();
    std::optional<AdiabaticResult> adiabatic;
    std::vector<ProbeEntry> probe;
    double surface_min_disc = 0.0;
};

inline HannayOutcome compute_hannay(const ParameterLoop& loop, SurfacePolicy policy,
                                    const SurfaceIntegralOptions& quad,
                                    const std::optional<AdiabaticOptions>& adiabatic_opt) {
    HannayOutcome out;
    const Surface surf = spanning_surface(loop, policy);
    out.surface_min_disc = surf.min_vertex_discriminant;
    const auto surface = hannay_surface_integral(surf, quad);
    out.gamma_surface = surface.value;
    out.surface_error = surface.error_estimate;
    try {
        out.gamma_line = hannay_line_integral(loop);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::chart) throw;
        // gamma changes sign: the line-integral chart does not cover this loop
    }
    if (adiabatic_opt) out.adiabatic = adiabatic_hannay(loop, *adiabatic_opt);
    return out;
}

inline CsvWriter hannay_csv(const HannayOutcome& out) {
    CsvWriter csv({"eps", "gamma_H_surface", "gamma_H_line", "gamma_H_adiabatic_raw_L",
                   "gamma_H_adiabatic_raw_2L", "gamma_H_adiabatic_raw_4L", "gamma_H_adiabatic_extrap"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> row{out.surface_min_disc, out.gamma_surface, out.gamma_line, nan, nan, nan, nan};
    if (out.adiabatic) {
        row[3] = out.adiabatic->sweeps[0].dtheta;
        row[4] = out.adiabatic->sweeps[1].dtheta;
        row[5] = out.adiabatic->sweeps[2].dtheta;
        row[6] = out.adiabatic->dtheta_extrapolated;
    }
    csv.row(row);
    for (const auto& p : out.probe) csv.row({p.epsilon, p.gamma_h, nan, nan, nan, nan, nan});
    return csv;
}

inline Json hannay_report_json(const HannayOutcome& out, const Json& cfg) {
    Json rep;
    rep["version"] = version_string;
    rep["config_hash"] = config_hash(cfg);
    rep["gamma_H_surface"] = out.gamma_surface;
    rep["surface_error_estimate"] = out.surface_error;
    rep["surface_min_discriminant"] = out.surface_min_disc;
    if (std::isfinite(out.gamma_line)) rep["gamma_H_line"] = out.gamma_line;
    if (out.adiabatic) {
        Json ad;
        Json sweeps = Json::array();
        for (const auto& s : out.adiabatic->sweeps) {
            Json row_j;
            row_j["sweep_length"] = s.sweep_length;
            row_j["dtheta"] = s.dtheta;
            row_j["lambda_shift"] = s.lambda_shift;
            sweeps.push_back(row_j);
        }
        ad["sweeps"] = sweeps;
        ad["dtheta_extrapolated"] = out.adiabatic->dtheta_extrapolated;
        ad["lambda_shift_extrapolated"] = out.adiabatic->lambda_shift_extrapolated;
        ad["converged"] = out.adiabatic->converged;
        ad["max_action_drift"] = out.adiabatic->max_action_drift;
        rep["adiabatic"] = ad;
    }
    if (!out.probe.empty()) {
        Json probe = Json::array();
        for (const auto& p : out.probe) {
            Json row_j;
            row_j["epsilon"] = p.epsilon;
            row_j["gamma_H"] = p.gamma_h;
            probe.push_back(row_j);
        }
        rep["probe"] = probe;
    }
    return rep;
}

inline void write_hannay_outputs(const HannayOutcome& out, const Json& cfg,
                                 const std::filesystem::path& out_dir) {
    hannay_csv(out).save(out_dir / "hannay.csv");
    write_file_atomic(out_dir / "report.json", hannay_report_json(out, cfg).dump(2) + "\n");
}

/// Quadrature settings for singularity probes. The 2-form grows like
/// disc^{-3/2} toward the cone, so probe members sitting at small minimum
/// discriminant need far more triangles per digit than regular loops; the
/// divergence table only needs a few digits.
inline SurfaceIntegralOptions probe_quadrature_options() {
    SurfaceIntegralOptions opt;
    opt.abs_tol = 1e-8;
    opt.rel_tol = 1e-5;
    opt.max_triangles = 4'000'000;
    return opt;
}

/// Canonical conic-singularity probe family: circles of radius 1 in the
/// plane alpha + gamma = 2 sqrt(1 + eps), whose spanned disk has minimum
/// discriminant exactly eps.
inline std::vector<ParameterLoop> canonical_probe_family(const std::vector<double>& epsilons,
                                                         std::size_t nodes = ParameterLoop::min_nodes) {
    std::vector<ParameterLoop> family;
    for (double eps : epsilons) {
        if (!(eps > 0.0)) throw config_error("probe epsilons must be positive");
        family.push_back(ParameterLoop::planar_circle(std::sqrt(1.0 + eps), 1.0, nodes));
    }
    return family;
}

inline HannayOutcome run_hannay(const Json& cfg, const std::filesystem::path& out_dir,
                                const RunOverrides& ov = {}) {
    require_known_keys(cfg, {"loop", "surface", "quadrature", "adiabatic", "probe"}, "hannay config");
    if (!cfg.contains("loop")) throw config_error("hannay: missing loop specification");
    const ParameterLoop loop = run_detail::parse_loop(cfg["loop"]);
    const std::string policy_name = get_string(cfg, "surface", "planar-fan");
    SurfacePolicy policy;
    if (policy_name == "planar-fan") policy = SurfacePolicy::planar_fan;
    else if (policy_name == "analytic-cap") policy = SurfacePolicy::analytic_cap;
    else throw config_error("surface must be 'planar-fan' or 'analytic-cap'");

    const SurfaceIntegralOptions quad = run_detail::parse_quadrature(cfg);
    std::optional<AdiabaticOptions> ad;
    if (cfg.contains("adiabatic") && get_bool(cfg["adiabatic"], "enabled", true))
        ad = run_detail::parse_adiabatic(cfg, ov, 300.0);

    HannayOutcome out = compute_hannay(loop, policy, quad, ad);

    if (cfg.contains("probe")) {
        const Json& pj = cfg["probe"];
        require_known_keys(pj, {"enabled", "epsilons"}, "probe");
        if (get_bool(pj, "enabled", false)) {
            std::vector<double> eps;
            if (pj.contains("epsilons"))
                for (const auto& e : pj["epsilons"]) eps.push_back(e.get<double>());
            if (eps.empty()) eps = {1.0, 0.1, 0.01};
            const auto family = canonical_probe_family(eps);
            out.probe = singularity_probe(family, probe_quadrature_options());
        }
    }
    write_hannay_outputs(out, cfg, out_dir);
    return out;
}

// ---------------------------------------------------------------------------
// emt
// ---------------------------------------------------------------------------

inline void run_emt(const Json& cfg, const std::filesystem::path& out_dir, const RunOverrides& = {}) {
    require_known_keys(cfg, {"eps1", "eps2", "g", "chi", "f"}, "emt config");
    IsotropicCompositeSpec base;
    base.eps1 = require_number(cfg, "eps1", "emt");
    base.eps2 = require_number(cfg, "eps2", "emt");
    base.g = get_number(cfg, "g", 1.0 / 3.0);
    base.chi = get_number(cfg, "chi", 1.0);

    double f0 = 0.0, f1 = 1.0;
    std::size_t count = 101;
    if (cfg.contains("f")) {
        const Json& j = cfg["f"];
        require_known_keys(j, {"start", "stop", "count"}, "emt f sweep");
        f0 = get_number(j, "start", 0.0);
        f1 = get_number(j, "stop", 1.0);
        count = static_cast<std::size_t>(get_number(j, "count", 101.0));
    }
    if (count < 2 || !(f1 >= f0)) throw config_error("emt: invalid f sweep");

    CsvWriter csv({"f", "eps_e", "d_eps_d_eps1", "chi_e", "residual"});
    for (std::size_t i = 0; i < count; ++i) {
        IsotropicCompositeSpec spec = base;
        spec.f = f0 + (f1 - f0) * static_cast<double>(i) / static_cast<double>(count - 1);
        spec.validate();
        const double eps_e = emt_general_g(spec);
        const double deriv = emt_derivative_eps1(spec);
        // chi_e -> 0 continuously as f -> 0 (derivative vanishes linearly)
        const double chi_e = spec.f > 0.0 ? chi3_effective_isotropic(spec) : 0.0;
        const double residual = bruggeman_residual(spec.eps1, spec.eps2, spec.f, spec.g, eps_e);
        csv.row({spec.f, eps_e, deriv, chi_e, residual});
    }
    csv.save(out_dir / "emt.csv");
}

// ---------------------------------------------------------------------------
// design
// ---------------------------------------------------------------------------

struct DesignOutcome {
    ProfileLoopResult loop_result;
    HannayOutcome hannay;
    InvariantReport diagnostics;
};

inline DesignOutcome run_design(const Json& cfg, const std::filesystem::path& out_dir,
                                const RunOverrides& ov = {}) {
    require_known_keys(cfg, {"mode", "profile", "loop", "experiment"}, "design config");
    if (!cfg.contains("mode")) throw config_error("design: missing mode section");
    if (!cfg.contains("profile") && !cfg.contains("loop"))
        throw config_error("design: provide a profile or a synthetic loop override");

    const ModeProfile mode = run_detail::parse_mode(cfg["mode"]);

    PipelineOptions popt;
    SurfaceIntegralOptions quad;
    std::optional<AdiabaticOptions> ad;
    double default_sweep = 300.0;
    Json experiment = cfg.contains("experiment") ? cfg["experiment"] : Json::object();
    require_known_keys(experiment,
                       {"quadrature", "adiabatic", "probe", "threads", "integrability", "loop_nodes"},
                       "experiment");
    if (experiment.contains("integrability")) {
        const Json& j = experiment["integrability"];
        require_known_keys(j, {"project", "tolerance"}, "integrability");
        popt.integrability.allow_projection = get_bool(j, "project", false);
        popt.integrability.project_tol = get_number(j, "tolerance", 0.01);
    }
    popt.threads = ov.threads ? *ov.threads : static_cast<int>(get_number(experiment, "threads", 1.0));
    quad = run_detail::parse_quadrature(experiment);

    // Build the loop: synthetic override bypasses the material pipeline.
    std::optional<ProfileLoopResult> loop_result;
    std::optional<ParameterLoop> synthetic;
    if (cfg.contains("loop") && !cfg["loop"].is_null()) {
        synthetic = run_detail::parse_loop(cfg["loop"]);
    } else {
        const FiberProfile profile = run_detail::parse_profile(cfg["profile"]);
        loop_result = profile_to_loop(profile, mode, popt);
        default_sweep = profile.length;
    }
    const ParameterLoop loop = synthetic ? *synthetic : loop_result->loop;

    bool adiabatic_enabled = true;
    if (experiment.contains("adiabatic")) adiabatic_enabled = get_bool(experiment["adiabatic"], "enabled", true);
    if (adiabatic_enabled) ad = run_detail::parse_adiabatic(experiment, ov, default_sweep);

    DesignOutcome out{ProfileLoopResult{loop, {}, 0}, compute_hannay(loop, SurfacePolicy::planar_fan, quad, ad),
                      {}};
    if (loop_result) {
        out.loop_result.points = std::move(loop_result->points);
        out.loop_result.projected_count = loop_result->projected_count;
    }

    if (experiment.contains("probe")) {
        const Json& pj = experiment["probe"];
        require_known_keys(pj, {"enabled", "epsilons"}, "probe");
        if (get_bool(pj, "enabled", false)) {
            std::vector<double> eps;
            if (pj.contains("epsilons"))
                for (const auto& e : pj["epsilons"]) eps.push_back(e.get<double>());
            if (eps.empty()) eps = {1.0, 0.1, 0.01};
            out.hannay.probe = singularity_probe(canonical_probe_family(eps), probe_quadrature_options());
        }
    }

    // Diagnostics: fixed-coefficient integration at the loop start, plus an
    // exported base-sweep trajectory.
    const TetragonalCoefficients k0 = coefficients_from_oscillator(loop.position(0.0));
    const ReducedCoefficients rc0 = reduce(k0);
    IntegrationRequest req;
    req.z_end = 50.0;
    req.samples = 2001;
    req.ode = OdeOptions{1e-11, 1e-11};
    const PolarizationAmplitudes diag_init{Complex{0.8, 0.1}, Complex{0.55, 0.2}};
    auto [diag_traj, diag_phase] = integrate_with_phase(diag_init, CoefficientSchedule::constant(k0), req);
    out.diagnostics = invariants(diag_traj, rc0);

    // --- write the report directory ---
    auto diag_csv = run_detail::trajectory_csv(diag_traj, diag_phase.lambda, [&](double) { return rc0; });
    diag_csv.save(out_dir / "trajectories" / "diagnostic.csv");

    if (ad) {
        const double L = ad->base_sweep_length;
        CoefficientSchedule sched{[&loop, L](double z) {
                                      return coefficients_from_oscillator(loop.position(std::min(z, L) / L));
                                  },
                                  false};
        IntegrationRequest areq;
        areq.z_end = L;
        areq.samples = 4001;
        areq.ode = ad->ode;
        const OscillatorParams p0 = params_from(loop.position(0.0));
        const AngleChart chart = detail::select_chart_for_loop(loop, ad->chart_swap_ratio);
        const CanonicalPair pq = chart.pq_from(ActionAngleState{ad->initial_action, 0.0}, p0);
        const double sy = std::sqrt(std::max(0.0, 1.0 - pq.q * pq.q - pq.p * pq.p));
        const double delta = std::atan2(sy, pq.q);
        PolarizationAmplitudes a0{std::sqrt(0.5 * (1.0 + pq.p)) * std::exp(Complex{0.0, -0.5 * delta}),
                                  std::sqrt(0.5 * (1.0 - pq.p)) * std::exp(Complex{0.0, 0.5 * delta})};
        auto [atraj, aphase] = integrate_with_phase(a0, sched, areq);
        auto acsv = run_detail::trajectory_csv(atraj, aphase.lambda, [&](double z) {
            return reduce(coefficients_from_oscillator(loop.position(std::min(z, L) / L)));
        });
        acsv.save(out_dir / "trajectories" / "adiabatic_base.csv");
    }

    {
        CsvWriter loop_csv({"s", "alpha", "beta", "gamma"});
        const auto& nodes = loop.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i)
            loop_csv.row({static_cast<double>(i) / static_cast<double>(nodes.size()), nodes[i][0], nodes[i][1],
                          nodes[i][2]});
        loop_csv.save(out_dir / "loop.csv");
    }

    hannay_csv(out.hannay).save(out_dir / "hannay.csv");
    Json rep = hannay_report_json(out.hannay, cfg);
    rep["loop"] = Json{{"nodes", loop.size()},
                       {"arc_length", loop.arc_length()},
                       {"min_discriminant_on_path", loop.min_discriminant_on_path()},
                       {"projected_samples", out.loop_result.projected_count}};
    rep["diagnostics"] = Json{{"s0_sq_drift", out.diagnostics.s0_sq_drift},
                              {"second_invariant_drift", out.diagnostics.second_invariant_drift}};
    write_file_atomic(out_dir / "report.json", rep.dump(2) + "\n");

    const std::string loop_script =
        "# gnuplot script: parameter-space loop\n"
        "set title 'parameter loop'\n"
        "set xlabel 'alpha'\nset ylabel 'beta'\nset zlabel 'gamma'\n"
        "set datafile separator ','\n"
        "splot 'loop.csv' every ::1 using 2:3:4 with lines title 'loop'\n";
    write_file_atomic(out_dir / "plots" / "loop.script", loop_script);
    const std::string traj_script =
        "# gnuplot script: Stokes trajectory diagnostics\n"
        "set datafile separator ','\n"
        "set xlabel 'z'\n"
        "plot 'trajectories/diagnostic.csv' every ::1 using 1:7 with lines title 'sx', \\\n"
        "     'trajectories/diagnostic.csv' every ::1 using 1:8 with lines title 'sy', \\\n"
        "     'trajectories/diagnostic.csv' every ::1 using 1:9 with lines title 'sz'\n";
    write_file_atomic(out_dir / "plots" / "trajectory.script", traj_script);
    const std::string hannay_script =
        "# gnuplot script: Hannay-angle summary\n"
        "set datafile separator ','\n"
        "set logscale x\n"
        "set xlabel 'epsilon (min discriminant)'\nset ylabel '|gamma_H|'\n"
        "plot 'hannay.csv' every ::1 using 1:(abs($2)) with linespoints title 'surface integral'\n";
    write_file_atomic(out_dir / "plots" / "hannay.script", hannay_script);

    return out;
}

} // namespace fiberphase

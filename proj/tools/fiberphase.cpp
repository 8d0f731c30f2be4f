#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fiberphase/reference_phases.hpp"
#include "fiberphase/runner.hpp"
#include "fiberphase/version.hpp"

namespace {

using namespace fiberphase;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<double> tol_abs;
    std::optional<double> tol_rel;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

RunOverrides overrides_of(const GlobalArgs& g) {
    RunOverrides ov;
    ov.tol_abs = g.tol_abs;
    ov.tol_rel = g.tol_rel;
    ov.threads = g.threads;
    ov.seed = g.seed;
    return ov;
}

void add_global_flags(CLI::App* cmd, GlobalArgs& g, bool needs_config) {
    auto* opt = cmd->add_option("--config", g.config_path, "configuration file (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", g.out_dir, "output directory");
    cmd->add_option("--tol-abs", [&g](const std::vector<std::string>& v) {
        g.tol_abs = std::stod(v[0]);
        return true;
    }, "absolute integrator tolerance override");
    cmd->add_option("--tol-rel", [&g](const std::vector<std::string>& v) {
        g.tol_rel = std::stod(v[0]);
        return true;
    }, "relative integrator tolerance override");
    cmd->add_option("--threads", [&g](const std::vector<std::string>& v) {
        g.threads = std::stoi(v[0]);
        return true;
    }, "worker threads for independent sweep items");
    cmd->add_option("--seed", [&g](const std::vector<std::string>& v) {
        g.seed = std::stoull(v[0]);
        return true;
    }, "seed for randomized sample generation (never affects the physics)");
}

int run_oracle(const std::vector<std::string>& args) {
    if (args.empty()) {
        std::cerr << "oracle: expected a formula name (pancharatnam | solid-angle | berry-gyrotropic | "
                     "retarder | weinberg)\n";
        return 2;
    }
    const std::string which = args[0];
    auto num = [&](std::size_t i) {
        if (i >= args.size()) throw config_error("oracle: missing argument " + std::to_string(i));
        return std::stod(args[i]);
    };
    if (which == "pancharatnam" || which == "solid-angle") {
        if ((args.size() - 1) % 2 != 0 || args.size() < 7)
            throw config_error("oracle " + which + ": expected theta phi pairs for >= 3 vertices");
        std::vector<SpherePoint> vs;
        for (std::size_t i = 1; i + 1 < args.size(); i += 2)
            vs.push_back(SpherePoint::normalized(num(i), num(i + 1)));
        const double omega = geodesic_polygon_solid_angle(vs);
        if (which == "solid-angle")
            std::cout << format_double(omega) << "\n";
        else
            std::cout << format_double(-0.5 * omega) << "\n";
        return 0;
    }
    if (which == "berry-gyrotropic") {
        const auto branches = berry_phase_gyrotropic(num(1), num(2));
        std::cout << format_double(branches[0]) << " " << format_double(branches[1]) << "\n";
        return 0;
    }
    if (which == "retarder") {
        std::cout << format_double(pb_retarder_phase(num(1), num(2), num(3))) << "\n";
        return 0;
    }
    if (which == "weinberg") {
        if (args.size() < 9) {
            std::cerr << "oracle weinberg: c1re c1im c2re c2im k0 k1 k2 t\n";
            return 2;
        }
        const auto sys = TwoStateSystem::polynomial(num(5), num(6), num(7));
        const auto ev = weinberg_two_state({num(1), num(2)}, {num(3), num(4)}, sys, num(8));
        std::cout << format_double(ev.psi1.real()) << " " << format_double(ev.psi1.imag()) << " "
                  << format_double(ev.psi2.real()) << " " << format_double(ev.psi2.imag()) << " p="
                  << format_double(ev.p) << " omega1=" << format_double(ev.omega1)
                  << " omega2=" << format_double(ev.omega2) << "\n";
        return 0;
    }
    std::cerr << "oracle: unknown formula '" << which << "'\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fiberphase: polarization geometric-phase toolkit for nonlinear tetragonal fibers"};
    app.set_version_flag("--version", fiberphase::version_string);
    app.require_subcommand(1);

    GlobalArgs g_sim, g_han, g_emt, g_des;
    auto* sim = app.add_subcommand("simulate", "integrate the coupled-mode equations and export the trajectory");
    add_global_flags(sim, g_sim, true);
    auto* han = app.add_subcommand("hannay", "Hannay angle of a parameter loop by all three routes");
    add_global_flags(han, g_han, true);
    auto* emt = app.add_subcommand("emt", "effective-medium sweep over volume fraction");
    add_global_flags(emt, g_emt, true);
    auto* des = app.add_subcommand("design", "full fiber-design experiment report");
    add_global_flags(des, g_des, true);
    auto* ora = app.add_subcommand("oracle", "closed-form reference-phase formulas");
    std::vector<std::string> oracle_args;
    ora->add_option("args", oracle_args, "formula name and its numeric arguments");
    ora->allow_extras();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const Json cfg = load_json_file(g_sim.config_path);
            run_simulate(cfg, g_sim.out_dir, overrides_of(g_sim));
            return 0;
        }
        if (han->parsed()) {
            const Json cfg = load_json_file(g_han.config_path);
            run_hannay(cfg, g_han.out_dir, overrides_of(g_han));
            return 0;
        }
        if (emt->parsed()) {
            const Json cfg = load_json_file(g_emt.config_path);
            run_emt(cfg, g_emt.out_dir, overrides_of(g_emt));
            return 0;
        }
        if (des->parsed()) {
            const Json cfg = load_json_file(g_des.config_path);
            run_design(cfg, g_des.out_dir, overrides_of(g_des));
            return 0;
        }
        if (ora->parsed()) return run_oracle(oracle_args);
    } catch (const fiberphase::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fiberphase/runner.hpp"

using namespace fiberphase;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

const fs::path config_dir = FIBERPHASE_CONFIG_DIR;

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("fiberphase_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("emt sweep output columns and limits") {
    const auto dir = fresh_dir("emt");
    run_emt(load_json_file(config_dir / "emt_silicon_silica.json"), dir);
    const auto rows = read_csv(dir / "emt.csv");
    REQUIRE(rows.size() == 102);
    REQUIRE(rows[0] == std::vector<std::string>{"f", "eps_e", "d_eps_d_eps1", "chi_e", "residual"});
    REQUIRE(std::stod(rows[1][1]) == Approx(2.1).epsilon(1e-12));    // f = 0 -> host
    REQUIRE(std::stod(rows[101][1]) == Approx(12.0).epsilon(1e-12)); // f = 1 -> inclusion
    double prev = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double eps = std::stod(rows[i][1]);
        if (i > 1) REQUIRE(eps > prev); // monotone for eps1 > eps2
        prev = eps;
        REQUIRE(std::abs(std::stod(rows[i][4])) < 1e-12);
    }
    fs::remove_all(dir);
}

TEST_CASE("emt sweep with equal permittivities is constant") {
    const auto dir = fresh_dir("emt_const");
    Json cfg = load_json_file(config_dir / "emt_silicon_silica.json");
    cfg["eps2"] = 12.0;
    run_emt(cfg, dir);
    const auto rows = read_csv(dir / "emt.csv");
    for (std::size_t i = 1; i < rows.size(); ++i)
        REQUIRE(std::stod(rows[i][1]) == Approx(12.0).epsilon(1e-12));
    fs::remove_all(dir);
}

TEST_CASE("simulate writes the trajectory schema and honors the drift bounds") {
    const auto dir = fresh_dir("sim");
    const auto outcome = run_simulate(load_json_file(config_dir / "simulate_generic.json"), dir);
    REQUIRE(outcome.invariants.s0_sq_drift < 1e-8);
    REQUIRE(outcome.invariants.second_invariant_drift < 1e-8);
    const auto rows = read_csv(dir / "trajectory.csv");
    REQUIRE(rows[0] == std::vector<std::string>{"z", "Re(u_x)", "Im(u_x)", "Re(u_y)", "Im(u_y)", "s0", "sx",
                                                "sy", "sz", "lambda", "H", "inv2"});
    REQUIRE(rows.size() >= 1002);
    // H column constant for fixed coefficients
    const double h0 = std::stod(rows[1][10]);
    REQUIRE(std::stod(rows.back()[10]) == Approx(h0).margin(1e-8));
    REQUIRE(fs::exists(dir / "diagnostics.json"));
    fs::remove_all(dir);
}

TEST_CASE("simulate at a fixed point produces a constant trajectory") {
    const auto dir = fresh_dir("sim_fp");
    run_simulate(load_json_file(config_dir / "simulate_fixed_point.json"), dir);
    const auto rows = read_csv(dir / "trajectory.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(std::stod(rows[i][6]) == Approx(0.0).margin(1e-9)); // sx
        REQUIRE(std::stod(rows[i][7]) == Approx(1.0).margin(1e-9)); // sy
        REQUIRE(std::stod(rows[i][8]) == Approx(0.0).margin(1e-9)); // sz
    }
    fs::remove_all(dir);
}

TEST_CASE("unknown config keys are hard errors and leave no output files") {
    const auto dir = fresh_dir("sim_bad");
    Json cfg = load_json_file(config_dir / "simulate_generic.json");
    cfg["tolerance_abs"] = 1e-9; // typo'd key
    REQUIRE_THROWS_AS(run_simulate(cfg, dir), Error);
    REQUIRE_FALSE(fs::exists(dir / "trajectory.csv"));
    REQUIRE_FALSE(fs::exists(dir / "diagnostics.json"));
    fs::remove_all(dir);
}

TEST_CASE("config round-trips parse -> serialize -> parse identically") {
    for (const char* name : {"simulate_fixed_point.json", "simulate_generic.json", "hannay_cap.json",
                             "hannay_probe.json", "emt_silicon_silica.json", "reference_design.json",
                             "uniaxial_design.json"}) {
        const Json a = load_json_file(config_dir / name);
        const Json b = Json::parse(a.dump());
        REQUIRE(a == b);
    }
}

TEST_CASE("hannay runner cross-validates the three routes on the cap loop") {
    const auto dir = fresh_dir("hannay");
    const auto out = run_hannay(load_json_file(config_dir / "hannay_cap.json"), dir);
    REQUIRE(std::abs(out.gamma_surface - out.gamma_line) <= 1e-6);
    REQUIRE(out.adiabatic.has_value());
    const double target = out.gamma_surface;
    REQUIRE(std::abs(out.adiabatic->dtheta_extrapolated - target) <=
            std::max(0.02 * std::abs(target), 1e-3));
    const auto rows = read_csv(dir / "hannay.csv");
    REQUIRE(rows[0][0] == "eps");
    REQUIRE(rows.size() == 2);
    REQUIRE(std::stod(rows[1][1]) == Approx(out.gamma_surface));
    fs::remove_all(dir);
}

TEST_CASE("hannay runner honors the analytic-cap surface policy") {
    const auto dir = fresh_dir("cap_surface");
    Json cfg = load_json_file(config_dir / "hannay_cap.json");
    cfg["surface"] = "analytic-cap";
    cfg["adiabatic"]["enabled"] = false;
    const auto cap = run_hannay(cfg, dir);
    cfg["surface"] = "planar-fan";
    const auto fan = run_hannay(cfg, dir);
    REQUIRE(cap.gamma_surface == Approx(fan.gamma_surface).margin(1e-6));
    fs::remove_all(dir);
}

TEST_CASE("hannay probe runner emits the divergence table") {
    const auto dir = fresh_dir("probe");
    const auto out = run_hannay(load_json_file(config_dir / "hannay_probe.json"), dir);
    REQUIRE(out.probe.size() == 3);
    REQUIRE(std::abs(out.probe[2].gamma_h) > 10.0 * std::abs(out.probe[0].gamma_h));
    const auto rows = read_csv(dir / "hannay.csv");
    REQUIRE(rows.size() == 5); // main loop + three probe rows
    fs::remove_all(dir);
}

TEST_CASE("design runs are byte-identical") {
    Json cfg = load_json_file(config_dir / "reference_design.json");
    // trim for test runtime; determinism is what is under test here
    cfg["experiment"]["adiabatic"]["sweep_length"] = 40.0;
    cfg["experiment"]["probe"]["enabled"] = false;
    const auto d1 = fresh_dir("design1");
    const auto d2 = fresh_dir("design2");
    run_design(cfg, d1);
    run_design(cfg, d2);

    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(d1))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), d1));
    REQUIRE(rel.size() >= 6); // report, loop, hannay csv, two trajectories, plots
    for (const auto& r : rel) {
        INFO(r.string());
        REQUIRE(fs::exists(d2 / r));
        REQUIRE(slurp(d1 / r) == slurp(d2 / r));
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("design report content is consistent") {
    Json cfg = load_json_file(config_dir / "reference_design.json");
    cfg["experiment"]["adiabatic"] = Json{{"enabled", false}};
    cfg["experiment"]["probe"]["enabled"] = false;
    const auto dir = fresh_dir("design_report");
    const auto out = run_design(cfg, dir);
    REQUIRE(std::abs(out.hannay.gamma_surface) > 0.1);
    REQUIRE(std::abs(out.hannay.gamma_surface - out.hannay.gamma_line) <= 1e-6);
    const Json rep = load_json_file(dir / "report.json");
    REQUIRE(rep.contains("gamma_H_surface"));
    REQUIRE(rep.contains("loop"));
    REQUIRE(rep["loop"]["nodes"].get<std::size_t>() >= 512);
    REQUIRE(rep.contains("config_hash"));
    REQUIRE(fs::exists(dir / "plots" / "loop.script"));
    REQUIRE(fs::exists(dir / "trajectories" / "diagnostic.csv"));
    fs::remove_all(dir);
}

TEST_CASE("design runs the uniaxial-crystallite profile end to end") {
    const auto dir = fresh_dir("design_uniaxial");
    const auto out = run_design(load_json_file(config_dir / "uniaxial_design.json"), dir);
    REQUIRE(std::abs(out.hannay.gamma_surface) > 0.01);
    REQUIRE(std::abs(out.hannay.gamma_surface - out.hannay.gamma_line) <= 1e-6);
    REQUIRE(out.loop_result.points.size() == 49);
    fs::remove_all(dir);
}

TEST_CASE("design accepts a synthetic loop override bypassing the material pipeline") {
    Json cfg = Json::object();
    cfg["mode"] = Json{{"kind", "gaussian"}, {"width", 5.0}, {"k0", 1.0}, {"beta0", 1.0}};
    cfg["loop"] = Json{{"family", "hyperbolic-cap"}, {"omega", 1.0}, {"chi", 0.5}};
    cfg["experiment"] =
        Json{{"adiabatic", Json{{"enabled", true}, {"sweep_length", 100.0}}},
             {"quadrature", Json{{"abs_tol", 1e-10}, {"rel_tol", 1e-8}}}};
    const auto dir = fresh_dir("design_synth");
    const auto out = run_design(cfg, dir);
    // three routes mutually consistent
    REQUIRE(std::abs(out.hannay.gamma_surface - out.hannay.gamma_line) <= 1e-6);
    REQUIRE(out.hannay.adiabatic.has_value());
    REQUIRE(std::abs(out.hannay.adiabatic->dtheta_extrapolated - out.hannay.gamma_surface) <=
            std::max(0.02 * std::abs(out.hannay.gamma_surface), 1e-3));
    REQUIRE(fs::exists(dir / "trajectories" / "adiabatic_base.csv"));
    fs::remove_all(dir);
}

TEST_CASE("tolerance overrides tighten the integrator") {
    const auto dir = fresh_dir("sim_tol");
    RunOverrides ov;
    ov.tol_abs = 1e-12;
    ov.tol_rel = 1e-12;
    const auto out = run_simulate(load_json_file(config_dir / "simulate_generic.json"), dir, ov);
    REQUIRE(out.invariants.s0_sq_drift < 1e-9);
    fs::remove_all(dir);
}

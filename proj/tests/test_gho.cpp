#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "fiberphase/gho.hpp"
#include "fiberphase/ode.hpp"

using namespace fiberphase;
using Catch::Approx;

TEST_CASE("oscillation frequency") {
    REQUIRE(frequency({2.0, 0.0, 2.0}) == Approx(2.0));
    REQUIRE(frequency({1.0, 1.0, 1.0}) == Approx(0.0));
    REQUIRE(frequency({2.0, 1.0, 2.0}) == Approx(std::sqrt(3.0)));
    REQUIRE_THROWS_AS(frequency({1.0, 2.0, 1.0}), Error);
    try {
        frequency({1.0, 2.0, 1.0});
    } catch (const Error& e) {
        REQUIRE(e.kind() == ErrorKind::singularity);
        REQUIRE(std::string(e.what()).find("-3") != std::string::npos);
    }
}

TEST_CASE("stability classification") {
    REQUIRE(OscillatorParams{2.0, 0.0, 2.0}.classify() == Stability::stable);
    REQUIRE(OscillatorParams{1.0, 1.0, 1.0}.classify() == Stability::critical);
    REQUIRE(OscillatorParams{1.0, 2.0, 1.0}.classify() == Stability::unstable);
}

TEST_CASE("action-angle chart on worked points") {
    REQUIRE(action_angle_to_pq({0.0, 0.7}, {1.0, 0.0, 1.0}).q == Approx(0.0).margin(1e-15));
    REQUIRE(action_angle_to_pq({0.0, 0.7}, {1.0, 0.0, 1.0}).p == Approx(0.0).margin(1e-15));

    const auto s1 = action_angle_to_pq({1.0, 0.0}, {1.0, 0.0, 1.0});
    REQUIRE(s1.q == Approx(std::sqrt(2.0)));
    REQUIRE(s1.p == Approx(0.0).margin(1e-15));

    const auto s2 = action_angle_to_pq({1.0, std::numbers::pi / 2}, {1.0, 0.0, 1.0});
    REQUIRE(s2.q == Approx(0.0).margin(1e-15));
    REQUIRE(s2.p == Approx(-std::sqrt(2.0)));

    REQUIRE_THROWS_AS(action_angle_to_pq({1.0, 0.0}, {1.0, 0.0, 0.0}), Error);
    REQUIRE_THROWS_AS(action_angle_to_pq({-1.0, 0.0}, {1.0, 0.0, 1.0}), Error);
}

TEST_CASE("energy identity E = I omega holds across the chart") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < 100; ++i) {
        OscillatorParams par{u(rng), 0.0, u(rng)};
        par.beta = 0.9 * std::sqrt(par.alpha * par.gamma) * std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        const ActionAngleState st{u(rng), ang(rng)};
        const auto pq = action_angle_to_pq(st, par);
        REQUIRE(oscillator_energy(pq, par) ==
                Approx(st.action * frequency(par)).epsilon(1e-12).margin(1e-13));
    }
}

TEST_CASE("both angle charts are self-consistent and advance at +omega") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 2.5);
    for (auto kind : {AngleChart::Kind::gamma_based, AngleChart::Kind::alpha_based}) {
        AngleChart chart;
        chart.kind = kind;
        for (int trial = 0; trial < 20; ++trial) {
            OscillatorParams par{u(rng), 0.4, u(rng)};
            if (par.discriminant() <= 0.05) continue;
            const double w = frequency(par);
            const ActionAngleState st{1e-3, 1.1};
            const auto pq = chart.pq_from(st, par);

            REQUIRE(chart.action_from(pq, par) == Approx(st.action).epsilon(1e-10));
            const double th = chart.angle_from(pq, par);
            REQUIRE(std::remainder(th - st.angle, 2.0 * std::numbers::pi) == Approx(0.0).margin(1e-10));

            // flow the exact GHO equations for a short time and check d(theta)/dz = +omega
            auto rhs = [par](double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
                dy[0] = par.beta * y[0] + par.gamma * y[1];
                dy[1] = -(par.alpha * y[0] + par.beta * y[1]);
            };
            const double dz = 0.2 / w;
            std::array<double, 2> y{pq.q, pq.p};
            std::array<double, 2> y_end{};
            const std::array<double, 2> grid{0.0, dz};
            OdeOptions opt{1e-13, 1e-13};
            integrate_sampled<2>(rhs, grid, y, opt,
                                 [&](std::size_t, double, const std::array<double, 2>& s) { y_end = s; });
            const double th_end = chart.angle_from({y_end[0], y_end[1]}, par);
            REQUIRE(std::remainder(th_end - th - w * dz, 2.0 * std::numbers::pi) ==
                    Approx(0.0).margin(1e-8));
        }
    }
}

TEST_CASE("chart selection swaps near gamma = 0") {
    REQUIRE(AngleChart::select({2.0, 0.3, 2.0}).kind == AngleChart::Kind::gamma_based);
    REQUIRE(AngleChart::select({2.0, 0.3, 0.05}).kind == AngleChart::Kind::alpha_based);
}

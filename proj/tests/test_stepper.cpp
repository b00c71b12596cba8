#include <catch_amalgamated.hpp>

#include <cmath>

#include "hdch/stepper.hpp"
#include "test_helpers.hpp"

using namespace hdch;

namespace {

const ViscositySpec kVisc{1.0, 2.0};

double energy_of(const SpectralWorkspace& ws, const Field& phi, const Potential& pot) {
    const double h1 = h1_seminorm(ws, phi);
    double bulk = 0.0;
    for (int i = 0; i < phi.size(); ++i) bulk += pot.psi(phi[static_cast<size_t>(i)], 0);
    return 0.5 * h1 * h1 + bulk * phi.grid().cell_area();
}

SimState initial_state(const SpectralWorkspace& ws, Field phi, const Potential& pot,
                       const ViscositySpec& visc, const StepConfig& cfg) {
    SimState s;
    s.t = 0.0;
    s.phi = std::move(phi);
    refresh_state(ws, s, pot, visc, cfg);
    return s;
}

} // namespace

TEST_CASE("step: homogeneous state is an exact fixed point", "[stepper]") {
    Grid g(16, 16, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Potential pot = Potential::logarithmic(1.0, 2.0);
    StepConfig cfg;
    cfg.dt = 1e-2;
    SimState s = initial_state(ws, Field(g, 0.35), pot, kVisc, cfg);
    SimState s1 = step(ws, s, cfg, pot, kVisc);
    CHECK(linf_norm(s1.phi - s.phi) < 1e-14);
    CHECK(linf_norm(s1.u1) < 1e-12);
    CHECK(linf_norm(s1.u2) < 1e-12);
}

TEST_CASE("step: phi = beta is stationary to solver tolerance", "[stepper]") {
    Grid g(16, 16, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Potential pot = Potential::logarithmic(1.0, 2.0);
    const double beta = pot.minimizer();
    StepConfig cfg;
    cfg.dt = 1e-3;
    SimState s = initial_state(ws, Field(g, beta), pot, kVisc, cfg);
    SimState s1 = step(ws, s, cfg, pot, kVisc);
    CHECK(linf_norm(s1.phi - s.phi) < 1e-11);
}

TEST_CASE("step: mass is conserved to 1e-12 on random smooth states", "[stepper]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Potential pot = Potential::logarithmic(1.0, 2.0);
    StepConfig cfg;
    cfg.dt = 1e-4;
    Field phi0 = make_scenario(g, {Scenario::spinodal, 0.1, 0.4, 11}, pot);
    SimState s = initial_state(ws, phi0, pot, kVisc, cfg);
    const double m0 = mean(s.phi);
    for (int it = 0; it < 20; ++it) {
        s = step(ws, s, cfg, pot, kVisc);
        CHECK(std::abs(mean(s.phi) - m0) <= 1e-12);
        CHECK(linf_norm(s.phi) < 1.0);
    }
}

TEST_CASE("step: pure Cahn-Hilliard energy is nonincreasing at any dt", "[stepper]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Potential pot = Potential::logarithmic(1.0, 2.0);
    for (double dt : {1e-3, 1e-4}) {
        StepConfig cfg;
        cfg.dt = dt;
        cfg.pure_ch = true;
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
        SimState s = initial_state(ws, phi0, pot, kVisc, cfg);
        double e = energy_of(ws, s.phi, pot);
        for (int it = 0; it < 25; ++it) {
            s = step(ws, s, cfg, pot, kVisc);
            const double e1 = energy_of(ws, s.phi, pot);
            CHECK(e1 <= e + 1e-10); // Newton-tolerance allowance
            e = e1;
        }
    }
}

TEST_CASE("step: first-order self-convergence in dt", "[stepper][slow]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Potential pot = Potential::logarithmic(1.0, 2.0);
    Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);

    auto run_to = [&](double dt, double T) {
        StepConfig cfg;
        cfg.dt = dt;
        cfg.pcg.rel_tol = 1e-11;
        SimState s = initial_state(ws, phi0, pot, kVisc, cfg);
        const int steps = static_cast<int>(std::round(T / dt));
        for (int it = 0; it < steps; ++it) s = step(ws, s, cfg, pot, kVisc);
        return s.phi;
    };

    const double T = 0.05;
    Field a = run_to(2e-3, T);
    Field b = run_to(1e-3, T);
    Field c = run_to(5e-4, T);
    const double e1 = l2_norm(a - b), e2 = l2_norm(b - c);
    const double rate = std::log2(e1 / e2);
    CHECK(rate > 0.7);
    CHECK(rate < 1.35);
}

TEST_CASE("step: regularized runs approach the logarithmic run as eps -> 0", "[stepper][slow]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Field phi0;
    {
        Potential log_pot = Potential::logarithmic(1.0, 2.0);
        phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.5, 7}, log_pot);
    }
    auto run_phi = [&](const Potential& pot) {
        StepConfig cfg;
        cfg.dt = 5e-4;
        cfg.newton.tol = 1e-12;
        SimState s = initial_state(ws, phi0, pot, kVisc, cfg);
        for (int it = 0; it < 40; ++it) s = step(ws, s, cfg, pot, kVisc);
        return s.phi;
    };
    Field ref = run_phi(Potential::logarithmic(1.0, 2.0));
    const double d2 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-2)) - ref);
    const double d3 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-3)) - ref);
    const double d4 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-4)) - ref);
    CHECK(d3 <= d2);
    CHECK(d4 <= d3);
}

TEST_CASE("prepare_initial_data: inactive truncation reproduces the datum", "[stepper]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    PotentialSpec spec{1.0, 2.0, std::nullopt};
    Potential pot = Potential::logarithmic(1.0, 2.0);
    Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.3, 5}, pot);
    // modest datum: mu0 stays within a large truncation level
    auto prep = prepare_initial_data(ws, phi0, 1e4, spec, {}, {});
    CHECK(l2_norm(prep.result_phi0 - phi0) < 1e-8);
    CHECK(prep.delta > 0.0);
}

TEST_CASE("prepare_initial_data: separation margin and V-convergence in k", "[stepper][slow]") {
    Grid g(48, 48, 1.0, 1.0);
    SpectralWorkspace ws(g);
    // theta = 2.5 so that the truncation levels map to representable
    // separations: an active level k pins F'(u) near k, i.e. u near
    // tanh(k/theta).
    PotentialSpec spec{2.5, 5.0, std::nullopt};
    // wide tanh interface: mu0 stays below the largest level, which makes
    // k = 125 an inactive truncation
    Field phi0 = Field::from_function(g, [&](double x, double y) {
        const double q = std::cos(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
        return 0.995 * std::tanh(q / 0.4);
    });
    Field mu0 = neg_laplacian(ws, phi0);
    for (int i = 0; i < mu0.size(); ++i)
        mu0[static_cast<size_t>(i)] += f_log(spec, phi0[static_cast<size_t>(i)], 1);
    REQUIRE(linf_norm(mu0) < 125.0);

    NewtonConfig ncfg;
    PcgConfig pcfg;
    pcfg.rel_tol = 1e-11;
    pcfg.max_iter = 20000;

    double prev_v = 1e300;
    for (double k : {1.0, 5.0, 25.0, 125.0}) {
        auto prep = prepare_initial_data(ws, phi0, k, spec, ncfg, pcfg);
        CHECK(prep.delta > 0.0);
        CHECK(linf_norm(prep.result_phi0) <= 1.0 - prep.delta + 1e-15);
        Field diff = prep.result_phi0 - phi0;
        const double l2 = l2_norm(diff), h1 = h1_seminorm(ws, diff);
        const double v = std::sqrt(l2 * l2 + h1 * h1);
        CHECK(v <= prev_v * (1.0 + 1e-9));
        prev_v = v;
    }
}

TEST_CASE("scenarios: exact means, determinism and parameter validation", "[stepper]") {
    Grid g(32, 32, 1.0, 1.0);
    Potential pot = Potential::logarithmic(1.0, 2.0);

    Field flat = make_scenario(g, {Scenario::spinodal, 0.0, 0.0, 9}, pot);
    CHECK(linf_norm(flat) == 0.0);

    Field s1 = make_scenario(g, {Scenario::spinodal, 0.15, 0.3, 42}, pot);
    Field s2 = make_scenario(g, {Scenario::spinodal, 0.15, 0.3, 42}, pot);
    CHECK(std::abs(mean(s1) - 0.15) <= 1e-12);
    CHECK(linf_norm(s1 - s2) == 0.0);
    CHECK(std::abs(linf_norm(zero_mean(s1)) - 0.3) <= 1e-12);

    Field b = make_scenario(g, {Scenario::bubble, -0.2, 0.9, 0}, pot);
    CHECK(std::abs(mean(b) + 0.2) <= 1e-12);
    CHECK(linf_norm(b) < 1.0);

    Field pb = make_scenario(g, {Scenario::perturbed_beta, 0.0, 0.01, 0}, pot);
    const double beta = pot.minimizer();
    CHECK(std::abs(mean(pb) - beta) <= 1e-12);

    // energy sits just above the constant-state energy |Omega| Psi(beta)
    SpectralWorkspace ws(g);
    const double e0 = energy_of(ws, pb, pot);
    const double ebeta = g.area() * pot.psi_at_minimizer();
    CHECK(e0 > ebeta);
    CHECK(e0 - ebeta < 1e-2);

    CHECK_THROWS_AS(make_scenario(g, {Scenario::spinodal, 0.8, 0.4, 1}, pot), InvalidParams);
    CHECK_THROWS_AS(make_scenario(g, {Scenario::bubble, 0.95, 0.9, 1}, pot), InvalidParams);
    CHECK_THROWS_AS(scenario_from_name("vortex"), InvalidParams);
}

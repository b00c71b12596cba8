#include <catch_amalgamated.hpp>

#include <cmath>

#include "hdch/darcy.hpp"
#include "test_helpers.hpp"

using namespace hdch;
using hdch::test::random_smooth_field;

namespace {

const ViscositySpec kVisc{1.0, 2.0};

// Neumann-compatible interface profile: tanh of a cosine level set.
Field interface_field(const Grid& g, double m, double a, double w) {
    return Field::from_function(g, [&](double x, double y) {
        const double q = std::cos(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
        return m + a * std::tanh(q / w);
    });
}

Field smooth_mu(const Grid& g) {
    return Field::from_function(g, [&](double x, double y) {
        return 0.4 * std::cos(M_PI * x / g.lx) + 0.25 * std::cos(M_PI * x / g.lx) * std::cos(2.0 * M_PI * y / g.ly);
    });
}

} // namespace

TEST_CASE("viscosity: bounds, blend values and smooth variant", "[darcy]") {
    CHECK(kVisc.nu(1.0) == Catch::Approx(1.0));
    CHECK(kVisc.nu(-1.0) == Catch::Approx(2.0));
    CHECK(kVisc.nu(0.0) == Catch::Approx(1.5));
    CHECK(kVisc.nu(5.0) == Catch::Approx(1.0));   // clamped
    CHECK(kVisc.nu(-5.0) == Catch::Approx(2.0));

    for (int i = 0; i <= 400; ++i) {
        const double s = -2.0 + 4.0 * i / 400.0;
        CHECK(kVisc.nu(s) >= kVisc.nu_min() - 1e-15);
        CHECK(kVisc.nu(s) <= kVisc.nu_max() + 1e-15);
        CHECK(kVisc.nu_smooth(s) >= kVisc.nu_min() - 1e-15);
        CHECK(kVisc.nu_smooth(s) <= kVisc.nu_max() + 1e-15);
    }
    // identical away from the transition band
    CHECK(kVisc.nu_smooth(0.9) == kVisc.nu(0.9));
    // nu' continuous across +-1
    const double w = ViscositySpec::kSmoothWidth;
    CHECK(std::abs(kVisc.nu_smooth_prime(1.0 - w) - 0.5 * (kVisc.nu1 - kVisc.nu2)) < 1e-12);
    CHECK(std::abs(kVisc.nu_smooth_prime(1.0 + w)) < 1e-12);
}

TEST_CASE("darcy: constant state gives zero pressure and velocity", "[darcy]") {
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Field phi(g, 0.3), mu(g, 0.7);
    auto out = solve_darcy(ws, phi, mu, kVisc, {});
    CHECK(linf_norm(out.p) < 1e-12);
    CHECK(linf_norm(out.u1) < 1e-12);
    CHECK(linf_norm(out.u2) < 1e-12);
    CHECK(out.vorticity_residual < 1e-12);
}

TEST_CASE("darcy: matched viscosities reduce to the constant-coefficient problem", "[darcy]") {
    Grid g(64, 64, 1.0, 1.0);
    SpectralWorkspace ws(g);
    ViscositySpec matched{1.0, 1.0};
    Field phi = interface_field(g, 0.0, 0.5, 0.4);
    Field mu = smooth_mu(g);
    PcgConfig cfg;
    cfg.rel_tol = 1e-12;
    auto out = solve_darcy(ws, phi, mu, matched, cfg);

    // oracle: second Neumann problem of the pressure, -Lap p = -div(mu grad phi)
    auto [px, py] = gradient(ws, phi);
    for (int i = 0; i < phi.size(); ++i) {
        px[static_cast<size_t>(i)] *= mu[static_cast<size_t>(i)];
        py[static_cast<size_t>(i)] *= mu[static_cast<size_t>(i)];
    }
    Field rhs = divergence(ws, px, py);
    rhs *= -1.0;
    Field p_ref = inv_neg_laplacian(ws, rhs);
    CHECK(l2_norm(out.p - p_ref) < 1e-9 * std::max(1.0, l2_norm(p_ref)));

    // Darcy law holds pointwise by construction
    auto [gpx, gpy] = gradient(ws, out.p);
    double law = 0.0;
    auto [qx, qy] = gradient(ws, phi);
    for (int i = 0; i < phi.size(); ++i) {
        const size_t k = static_cast<size_t>(i);
        law = std::max(law, std::abs(out.u1[k] + gpx[k] - mu[k] * qx[k]));
        law = std::max(law, std::abs(out.u2[k] + gpy[k] - mu[k] * qy[k]));
    }
    CHECK(law < 1e-11);
}

TEST_CASE("darcy: gauge invariance under constant shifts of mu", "[darcy]") {
    Grid g(48, 48, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Field phi = interface_field(g, 0.1, 0.5, 0.35);
    Field mu = smooth_mu(g);
    PcgConfig cfg;
    cfg.rel_tol = 1e-12;
    auto base = solve_darcy(ws, phi, mu, kVisc, cfg);
    Field mu_shift = mu;
    mu_shift += 3.7;
    auto shifted = solve_darcy(ws, phi, mu_shift, kVisc, cfg);
    const double scale = std::max(1.0, l2_norm(base.u1) + l2_norm(base.u2));
    CHECK(l2_norm(shifted.u1 - base.u1) < 1e-9 * scale);
    CHECK(l2_norm(shifted.u2 - base.u2) < 1e-9 * scale);
    CHECK(std::abs(mean(shifted.p)) < 1e-12);
}

TEST_CASE("darcy: dissipation pairing and div residual within tolerance", "[darcy]") {
    Grid g(48, 48, 1.0, 1.0);
    SpectralWorkspace ws(g);
    Field phi = interface_field(g, 0.0, 0.6, 0.3);
    Field mu = smooth_mu(g);
    PcgConfig cfg;
    cfg.rel_tol = 1e-11;
    auto out = solve_darcy(ws, phi, mu, kVisc, cfg);

    CHECK(out.div_residual <= cfg.rel_tol * 1.01);

    // int nu |u|^2 = int (mu grad phi) . u up to the solve tolerance
    auto [px, py] = gradient(ws, phi);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < phi.size(); ++i) {
        const size_t k = static_cast<size_t>(i);
        lhs += kVisc.nu(phi[k]) * (out.u1[k] * out.u1[k] + out.u2[k] * out.u2[k]);
        rhs += mu[k] * (px[k] * out.u1[k] + py[k] * out.u2[k]);
    }
    lhs *= g.cell_area();
    rhs *= g.cell_area();
    CHECK(lhs >= 0.0);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("darcy: divergence residual decreases under refinement", "[darcy]") {
    auto rel_div = [](int n) {
        Grid g(n, n, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = interface_field(g, 0.0, 0.6, 0.25);
        Field mu = smooth_mu(g);
        PcgConfig cfg;
        cfg.rel_tol = 1e-12;
        auto out = solve_darcy(ws, phi, mu, kVisc, cfg);
        const double unorm = std::sqrt(std::pow(l2_norm(out.u1), 2) + std::pow(l2_norm(out.u2), 2));
        Field divu = divergence(ws, out.u1, out.u2);
        return l2_norm(divu) / std::max(unorm, 1e-300);
    };
    // the relative divergence is already at the solver floor on every
    // grid; refinement must not make it grow
    const double d32 = rel_div(32), d64 = rel_div(64);
    CHECK(d32 < 1e-9);
    CHECK(d64 < 1e-9);
}

TEST_CASE("vorticity identity: matched-viscosity reduction on band-limited data", "[darcy]") {
    Grid g(64, 64, 1.0, 1.0);
    SpectralWorkspace ws(g);
    ViscositySpec matched{1.3, 1.3};
    Field phi = random_smooth_field(g, 51, 8, 0.5);
    Field mu = random_smooth_field(g, 52, 8, 1.0);
    PcgConfig cfg;
    cfg.rel_tol = 1e-12;
    auto out = solve_darcy(ws, phi, mu, matched, cfg);
    // products of modes <= 8 on a 64-grid are alias-free, so the identity
    // holds to within 10x the solver tolerance
    const double scale = h1_seminorm(ws, mu) * linf_norm(phi) + 1.0;
    CHECK(out.vorticity_residual <= 1e-9 * scale);
}

TEST_CASE("vorticity identity: residual decreases under refinement", "[darcy]") {
    auto vres = [](int n) {
        Grid g(n, n, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = interface_field(g, 0.0, 0.6, 0.18);
        Field mu = smooth_mu(g);
        PcgConfig cfg;
        cfg.rel_tol = 1e-12;
        return solve_darcy(ws, phi, mu, kVisc, cfg).vorticity_residual;
    };
    const double v16 = vres(16), v32 = vres(32), v64 = vres(64);
    CHECK(v32 < v16);
    CHECK(v64 < v32);
}

TEST_CASE("korteweg identity: constant field and refinement trend", "[darcy]") {
    Potential pot = Potential::logarithmic(1.0, 2.0);
    {
        Grid g(16, 16, 1.0, 1.0);
        SpectralWorkspace ws(g);
        CHECK(korteweg_consistency(ws, Field(g, 0.4), pot) < 1e-13);
    }
    auto kres = [&](int n) {
        Grid g(n, n, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = Field::from_function(g, [&](double x, double) { return 0.5 * std::cos(M_PI * x / g.lx); });
        return korteweg_consistency(ws, phi, pot);
    };
    const double k8 = kres(8), k16 = kres(16), k32 = kres(32);
    CHECK(k16 <= 0.5 * k8);  // at least first order
    CHECK(k32 <= 0.5 * k16);

    auto kres2 = [&](int n) {
        Grid g(n, n, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = interface_field(g, 0.0, 0.55, 0.22);
        return korteweg_consistency(ws, phi, pot);
    };
    const double q16 = kres2(16), q32 = kres2(32), q64 = kres2(64);
    CHECK(q32 < q16);
    CHECK(q64 < q32);

    Grid g(16, 16, 1.0, 1.0);
    SpectralWorkspace ws(g);
    CHECK_THROWS_AS(korteweg_consistency(ws, Field(g, 1.0), pot), OutOfRange);
}

#include <catch_amalgamated.hpp>

#include <cmath>

#include "hdch/spectral.hpp"
#include "test_helpers.hpp"

using namespace hdch;
using hdch::test::random_smooth_field;

namespace {
Field cos_mode(const Grid& g, int k, int l, double amp = 1.0) {
    return Field::from_function(g, [&](double x, double y) {
        return amp * std::cos(M_PI * k * x / g.lx) * std::cos(M_PI * l * y / g.ly);
    });
}
} // namespace

TEST_CASE("mean: constants, odd modes and a summation oracle", "[spectral]") {
    Grid g(16, 12, 2.0, 1.0);
    CHECK(mean(Field(g, 3.25)) == Catch::Approx(3.25).margin(1e-15));
    CHECK(std::abs(mean(cos_mode(g, 1, 0))) < 1e-14);

    // independent oracle: naive front-to-back summation
    Field f = random_smooth_field(g, 17, 5, 2.0);
    double naive = 0.0;
    for (int k = 0; k < f.size(); ++k) naive += f[static_cast<size_t>(k)];
    naive /= f.size();
    CHECK(mean(f) == Catch::Approx(naive).epsilon(1e-14).margin(1e-14));
}

TEST_CASE("transform round trip is identity", "[spectral]") {
    Grid g(16, 20, 1.5, 0.7);
    SpectralWorkspace ws(g);
    std::mt19937_64 rng(5);
    Field f(g);
    for (int k = 0; k < f.size(); ++k) f[static_cast<size_t>(k)] = test::uniform(rng, -1.0, 1.0);

    for (Parity px : {Parity::cos, Parity::sin})
        for (Parity py : {Parity::cos, Parity::sin}) {
            auto c = ws.scratch();
            Field back(g);
            ws.analyze(px, py, f.data(), c.data());
            ws.synthesize(px, py, c.data(), back.data());
            double rel = 0.0;
            for (int k = 0; k < f.size(); ++k)
                rel = std::max(rel, std::abs(back[static_cast<size_t>(k)] - f[static_cast<size_t>(k)]));
            CHECK(rel < 1e-12 * linf_norm(f));
        }
}

TEST_CASE("neg_laplacian: kernel, eigenmodes and a dense FD oracle", "[spectral]") {
    Grid g(8, 8, 1.0, 1.0);
    SpectralWorkspace ws(g);

    CHECK(linf_norm(neg_laplacian(ws, Field(g, 2.0))) < 1e-12);

    const double lam = std::pow(M_PI / g.lx, 2);
    Field f = cos_mode(g, 1, 0);
    Field Af = neg_laplacian(ws, f);
    Field expect = f;
    expect *= lam;
    CHECK(l2_norm(Af - expect) < 1e-12 * l2_norm(expect));
    CHECK(std::abs(mean(Af)) < 1e-13);

    // FD oracle on a smooth band-limited field: agreement is O(h^2),
    // checked via the refinement factor 8 -> 16.
    auto fd_gap = [](int n) {
        Grid gr(n, n, 1.0, 1.0);
        SpectralWorkspace w(gr);
        Field u = random_smooth_field(gr, 23, 2);
        Field Au = neg_laplacian(w, u);
        auto fd = test::fd_neg_laplacian(u);
        double err = 0.0;
        for (int k = 0; k < u.size(); ++k) err = std::max(err, std::abs(Au[static_cast<size_t>(k)] - fd[static_cast<size_t>(k)]));
        return err;
    };
    const double e8 = fd_gap(8), e16 = fd_gap(16);
    CHECK(e8 < 2.0);         // O(h^2) at h = 1/8 for curvature O(10)
    CHECK(e16 < 0.3 * e8);   // ~4x reduction
}

TEST_CASE("inv_neg_laplacian: eigenmode division and round trip", "[spectral]") {
    Grid g(16, 16, 1.0, 2.0);
    SpectralWorkspace ws(g);

    CHECK(linf_norm(inv_neg_laplacian(ws, Field(g, 0.0))) == 0.0);

    const double lam = std::pow(M_PI / g.lx, 2);
    Field f = cos_mode(g, 1, 0);
    Field u = inv_neg_laplacian(ws, f);
    Field expect = f;
    expect *= 1.0 / lam;
    CHECK(l2_norm(u - expect) < 1e-12 * l2_norm(expect));

    Field r = random_smooth_field(g, 99, 6);
    Field back = neg_laplacian(ws, inv_neg_laplacian(ws, r));
    CHECK(l2_norm(back - r) < 1e-10 * l2_norm(r));
    CHECK(std::abs(mean(inv_neg_laplacian(ws, r))) < 1e-13);

    CHECK_THROWS_AS(inv_neg_laplacian(ws, Field(g, 1.0)), NonZeroMean);
}

TEST_CASE("gradient/divergence/curl: manufactured partials and identities", "[spectral]") {
    Grid g(24, 16, 1.3, 0.9);
    SpectralWorkspace ws(g);

    auto [cx, cy] = gradient(ws, Field(g, 4.0));
    CHECK(linf_norm(cx) < 1e-13);
    CHECK(linf_norm(cy) < 1e-13);

    // symbolic oracle for f = cos(pi x/lx) cos(pi y/ly)
    Field f = cos_mode(g, 1, 1);
    Field gx_exact = Field::from_function(g, [&](double x, double y) {
        return -(M_PI / g.lx) * std::sin(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
    });
    Field gy_exact = Field::from_function(g, [&](double x, double y) {
        return -(M_PI / g.ly) * std::cos(M_PI * x / g.lx) * std::sin(M_PI * y / g.ly);
    });
    auto [gx, gy] = gradient(ws, f);
    CHECK(l2_norm(gx - gx_exact) < 1e-12);
    CHECK(l2_norm(gy - gy_exact) < 1e-12);

    Field r = random_smooth_field(g, 7, 6);
    auto [rx, ry] = gradient(ws, r);
    CHECK(l2_norm(curl2d(ws, rx, ry)) < 1e-10 * std::max(1.0, h1_seminorm(ws, r)));

    // div o grad = -A, an identity on coefficients
    Field lhs = divergence(ws, rx, ry);
    Field rhs = neg_laplacian(ws, r);
    rhs *= -1.0;
    CHECK(l2_norm(lhs - rhs) < 1e-11 * std::max(1.0, l2_norm(rhs)));
}

TEST_CASE("norms: eigenvalue scaling, duality, interpolation, Poincare", "[spectral]") {
    Grid g(16, 16, 1.0, 1.0);
    SpectralWorkspace ws(g);

    Norms z = norms(ws, Field(g, 0.0));
    CHECK(z.l2 == 0.0);
    CHECK(z.linf == 0.0);
    CHECK(z.h1_semi == 0.0);

    Field f = cos_mode(g, 1, 0);
    CHECK(v0_dual_norm(ws, f) == Catch::Approx(l2_norm(f) / (M_PI / g.lx)).epsilon(1e-12));
    CHECK_THROWS_AS(v0_dual_norm(ws, Field(g, 1.0)), NonZeroMean);

    Field a = random_smooth_field(g, 1, 6);
    Field b = random_smooth_field(g, 2, 6);

    // duality <f, A^{-1} g> = <A^{-1} f, g>
    const double d1 = inner(a, inv_neg_laplacian(ws, b));
    const double d2 = inner(inv_neg_laplacian(ws, a), b);
    CHECK(std::abs(d1 - d2) <= 1e-10 * l2_norm(a) * l2_norm(b));

    // interpolation ||f||^2 <= ||f||_{V0'} ||grad f||
    const double l2a = l2_norm(a);
    CHECK(l2a * l2a <= (1.0 + 1e-8) * v0_dual_norm(ws, a) * h1_seminorm(ws, a));

    // Poincare with the explicit spectral constant
    const double cp = 1.0 / std::sqrt(ws.lambda_min());
    Field shifted = b;
    shifted += 0.7;
    Field fluct = zero_mean(shifted);
    CHECK(l2_norm(fluct) <= (1.0 + 1e-12) * cp * h1_seminorm(ws, shifted));
}

TEST_CASE("field snapshots survive a save/load round trip", "[spectral]") {
    Grid g(8, 6, 1.25, 2.5);
    Field f = random_smooth_field(g, 42, 3);
    const std::string path = "test_snapshot.hdch";
    save_field(f, path);
    Field back = load_field(path);
    REQUIRE(back.grid() == f.grid());
    for (int k = 0; k < f.size(); ++k)
        REQUIRE(back[static_cast<size_t>(k)] == f[static_cast<size_t>(k)]);
    std::remove(path.c_str());
}

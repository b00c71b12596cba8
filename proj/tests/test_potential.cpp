#include <catch_amalgamated.hpp>

#include <cmath>

#include "hdch/potential.hpp"
#include "test_helpers.hpp"

using namespace hdch;

namespace {
const PotentialSpec kSpec{1.0, 2.0, std::nullopt};

double fd_derivative(double (*eval)(const PotentialSpec&, double, int), const PotentialSpec& spec,
                     double s, int order, double h) {
    return (eval(spec, s + h, order - 1) - eval(spec, s - h, order - 1)) / (2.0 * h);
}
} // namespace

TEST_CASE("f_log: normalization, closed forms and a finite-difference ladder", "[potential]") {
    CHECK(f_log(kSpec, 0.0, 0) == 0.0);
    CHECK(f_log(kSpec, 0.0, 1) == 0.0);
    CHECK(f_log(kSpec, 0.0, 2) == Catch::Approx(kSpec.theta));

    CHECK(fd_derivative(&f_log, kSpec, 0.5, 1, 1e-6) == Catch::Approx(f_log(kSpec, 0.5, 1)).margin(1e-7));

    // every order k in 1..4 matches the centered difference of order k-1
    for (int order = 1; order <= 4; ++order)
        for (double s : {-0.9, -0.4, 0.0, 0.3, 0.75, 0.95}) {
            const double h = 1e-6;
            const double fd = fd_derivative(&f_log, kSpec, s, order, h);
            const double ex = f_log(kSpec, s, order);
            CHECK(std::abs(fd - ex) <= 1e-6 * std::max(1.0, std::abs(ex)) + 1e-4 * h);
        }

    CHECK_THROWS_AS(f_log(kSpec, 1.0, 0), OutOfRange);
    CHECK_THROWS_AS(f_log(kSpec, -1.2, 1), OutOfRange);
}

TEST_CASE("f_log: convexity, symmetry and growth witness", "[potential]") {
    const double theta = kSpec.theta;
    const double growth_c = std::max(theta, 2.0 / theta);
    for (int i = 1; i < 400; ++i) {
        const double s = -0.999 + 1.998 * i / 400.0;
        CHECK(f_log(kSpec, s, 2) >= theta - 1e-12);
        CHECK(f_log(kSpec, -s, 0) == Catch::Approx(f_log(kSpec, s, 0)).margin(1e-14));
        CHECK(f_log(kSpec, -s, 1) == Catch::Approx(-f_log(kSpec, s, 1)).margin(1e-14));
        // F'' <= C exp(C |F'|); C = max(theta, 2/theta) makes the bound hold
        // on all of (-1,1) for this family.
        CHECK(f_log(kSpec, s, 2) <=
              growth_c * std::exp(growth_c * std::abs(f_log(kSpec, s, 1))) * (1.0 + 1e-12));
    }
}

TEST_CASE("f_eps: Taylor extension matches F inside and is C^4 at the knots", "[potential]") {
    PotentialSpec spec = kSpec;
    spec.epsilon = 1e-2;

    CHECK(f_eps(spec, 0.0, 0) == 0.0);
    for (double s : {-0.9, -0.2, 0.6, 0.98})
        for (int order = 0; order <= 4; ++order)
            CHECK(f_eps(spec, s, order) == f_log(spec, s, order)); // identical inside

    const double knot = 1.0 - *spec.epsilon;
    const double delta = 1e-13;
    const double omk2 = (1.0 - knot) * (1.0 + knot);
    for (int order = 0; order <= 4; ++order) {
        const double left = f_eps(spec, knot - delta, order);
        const double right = f_eps(spec, knot + delta, order);
        // the points sit 2*delta apart, so the local slope contributes
        const double slope = order < 4 ? std::abs(f_log(spec, knot, order + 1))
                                       : 24.0 * spec.theta * knot / std::pow(omk2, 4);
        CHECK(std::abs(left - right) <= 1e-12 * std::max(1.0, std::abs(left)) + 4.0 * delta * slope);
    }

    // defined on all of R
    CHECK(std::isfinite(f_eps(spec, 3.0, 0)));
    CHECK(std::isfinite(f_eps(spec, -50.0, 1)));

    PotentialSpec no_eps = kSpec;
    CHECK_THROWS_AS(f_eps(no_eps, 0.0, 0), MissingEpsilon);
}

TEST_CASE("f_eps: uniform convexity via sampling plus golden-section oracle", "[potential]") {
    PotentialSpec spec = kSpec;
    spec.epsilon = 1e-2;

    // dense sampling to bracket the minimizer of F_eps''
    double best = 1e300, arg = 0.0;
    for (int i = 0; i <= 6000; ++i) {
        const double s = -3.0 + i * 1e-3;
        const double v = f_eps(spec, s, 2);
        if (v < best) { best = v; arg = s; }
    }
    // golden-section refinement around the sampled minimizer
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = arg - 2e-3, b = arg + 2e-3;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (f_eps(spec, c, 2) < f_eps(spec, d, 2)) b = d; else a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    const double inf_fpp = f_eps(spec, 0.5 * (a + b), 2);
    CHECK(inf_fpp > 0.0);
    CHECK(inf_fpp == Catch::Approx(spec.theta).epsilon(1e-6)); // floor sits at s = 0

    CHECK_NOTHROW(check_eps_convexity(spec));
}

TEST_CASE("psi: decomposition and domination by the unregularized potential", "[potential]") {
    CHECK(psi(kSpec, 0.0, 0) == 0.0);
    CHECK(psi(kSpec, 0.0, 1) == 0.0);

    PotentialSpec spec = kSpec;
    spec.epsilon = 1e-3;
    for (int i = 0; i <= 500; ++i) {
        const double s = -1.0 + 1e-6 + (2.0 - 2e-6) * i / 500.0;
        CHECK(psi_eps(spec, s, 0) <= psi(spec, s, 0) + 1e-12);
        CHECK(std::abs(psi_eps(spec, s, 1)) <= std::abs(psi(spec, s, 1)) + 1e-12);
    }

    // pointwise agreement of F_eps with F on |s| <= 1-eps, exact
    const double inner_edge = 1.0 - *spec.epsilon - 1e-12;
    for (int i = 0; i <= 100; ++i) {
        const double s = -inner_edge + 2.0 * inner_edge * i / 100.0;
        CHECK(f_eps(spec, s, 0) == f_log(spec, s, 0));
    }
}

TEST_CASE("find_beta: bisection oracle, stationarity and the degenerate limit", "[potential]") {
    // independent oracle: plain bisection on (1e-12, 1-1e-12)
    auto bisect = [](const PotentialSpec& spec) {
        auto eq = [&](double b) {
            return 0.5 * spec.theta * std::log((1.0 + b) / (1.0 - b)) - spec.theta0 * b;
        };
        double lo = 1e-12, hi = 1.0 - 1e-12;
        for (int it = 0; it < 300; ++it) {
            const double mid = 0.5 * (lo + hi);
            (eq(mid) < 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    BetaRoot root = find_beta(kSpec);
    CHECK(root.residual <= 1e-12);
    CHECK(root.beta == Catch::Approx(bisect(kSpec)).margin(1e-12));
    CHECK(root.beta == Catch::Approx(0.9575040240772687).margin(1e-12)); // frozen from the oracle

    // returned beta is a strict local minimum of Psi
    CHECK(std::abs(psi(kSpec, root.beta, 1)) <= 1e-12);
    CHECK(psi(kSpec, root.beta, 2) > 0.0);
    CHECK(psi(kSpec, root.beta, 0) < 0.0);

    // theta -> theta0 drives beta to zero monotonically
    double prev = 1.0;
    for (double theta : {1.9, 1.99, 1.999}) {
        PotentialSpec s{theta, 2.0, std::nullopt};
        const double b = find_beta(s).beta;
        CHECK(b < prev);
        CHECK(b > 0.0);
        prev = b;
    }

    PotentialSpec bad{2.0, 2.0, std::nullopt};
    CHECK_THROWS_AS(find_beta(bad), NoRoot);
}

TEST_CASE("polynomial mode: quartic plumbing", "[potential]") {
    Potential p = Potential::polynomial();
    CHECK(p.psi(1.0, 0) == 0.0);
    CHECK(p.psi(-1.0, 0) == 0.0);
    CHECK(p.psi(0.0, 0) == 1.0);
    CHECK(p.theta0() == 4.0);
    CHECK(p.minimizer() == 1.0);
    CHECK(p.f(2.0, 1) == 32.0);
    CHECK_FALSE(p.singular());
}

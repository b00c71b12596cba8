#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hdch/diagnostics.hpp"
#include "hdch/runner.hpp"

namespace hdch {

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace verify_detail {

inline double urand(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline Field random_band_field(const Grid& g, uint64_t seed, int kmax, double amp = 1.0) {
    std::mt19937_64 rng(seed);
    Field f(g);
    for (int l = 0; l <= kmax; ++l)
        for (int k = 0; k <= kmax; ++k) {
            if (k == 0 && l == 0) continue;
            const double a = (2.0 * urand(rng) - 1.0) / (1.0 + k * k + l * l);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    f(i, j) += a * std::cos(M_PI * k * g.x(i) / g.lx) * std::cos(M_PI * l * g.y(j) / g.ly);
        }
    f *= amp;
    return f;
}

inline Field tanh_of_coscos(const Grid& g, double m, double a, double w) {
    return Field::from_function(g, [&](double x, double y) {
        const double q = std::cos(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
        return m + a * std::tanh(q / w);
    });
}

struct Check {
    std::vector<PropertyResult>& out;
    void operator()(const std::string& name, bool pass, const std::string& detail = "") {
        out.push_back({name, pass, detail});
    }
};

/// Runs one property block; an escaping exception becomes a FAIL entry
/// instead of aborting the whole suite.
template <class Fn>
void guard(std::vector<PropertyResult>& out, const char* label, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        out.push_back({label, false, std::string("exception: ") + e.what()});
    }
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

/// RK4 integration of f' = g f log(e+f) + h with piecewise-linear g, h;
/// the oracle side of the Gronwall dominance checks.
inline std::vector<double> rk4_log_ode(double f0, const std::vector<double>& g,
                                       const std::vector<double>& h, const std::vector<double>& t) {
    auto interp = [&](const std::vector<double>& v, double tau) {
        if (tau <= t.front()) return v.front();
        if (tau >= t.back()) return v.back();
        size_t i = 1;
        while (t[i] < tau) ++i;
        const double w = (tau - t[i - 1]) / (t[i] - t[i - 1]);
        return (1.0 - w) * v[i - 1] + w * v[i];
    };
    auto rhs = [&](double tau, double f) { return interp(g, tau) * f * std::log(M_E + f) + interp(h, tau); };
    std::vector<double> out(t.size());
    out[0] = f0;
    double f = f0;
    const int sub = 8;
    for (size_t i = 1; i < t.size(); ++i) {
        const double dt = (t[i] - t[i - 1]) / sub;
        double tau = t[i - 1];
        for (int s = 0; s < sub; ++s) {
            const double k1 = rhs(tau, f);
            const double k2 = rhs(tau + 0.5 * dt, f + 0.5 * dt * k1);
            const double k3 = rhs(tau + 0.5 * dt, f + 0.5 * dt * k2);
            const double k4 = rhs(tau + dt, f + dt * k3);
            f += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            tau += dt;
        }
        out[i] = f;
    }
    return out;
}

} // namespace verify_detail

inline std::vector<PropertyResult> verify_operators() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);

    {
        std::mt19937_64 rng(5);
        Field f(g);
        for (int i = 0; i < f.size(); ++i) f[static_cast<size_t>(i)] = 2.0 * urand(rng) - 1.0;
        double worst = 0.0;
        for (Parity px : {Parity::cos, Parity::sin})
            for (Parity py : {Parity::cos, Parity::sin}) {
                auto c = ws.scratch();
                Field back(g);
                ws.analyze(px, py, f.data(), c.data());
                ws.synthesize(px, py, c.data(), back.data());
                worst = std::max(worst, linf_norm(back - f) / linf_norm(f));
            }
        check("transform_round_trip", worst < 1e-12, fmt(worst));
    }
    {
        Field f = random_band_field(g, 17, 6, 2.0);
        double naive = 0.0;
        for (int i = 0; i < f.size(); ++i) naive += f[static_cast<size_t>(i)];
        naive /= f.size();
        const double gap = std::abs(mean(f) - naive);
        check("mean_matches_naive_summation", gap <= 1e-14 * (1.0 + std::abs(naive)), fmt(gap));
    }
    {
        Field f = Field::from_function(g, [&](double x, double) { return std::cos(M_PI * x / g.lx); });
        Field expect = f;
        expect *= std::pow(M_PI / g.lx, 2);
        const double gap = l2_norm(neg_laplacian(ws, f) - expect) / l2_norm(expect);
        check("laplacian_eigenmode", gap < 1e-12, fmt(gap));
    }
    {
        auto fd_gap = [](int n) {
            Grid gr(n, n, 1.0, 1.0);
            SpectralWorkspace w(gr);
            Field u = random_band_field(gr, 23, 2);
            Field Au = neg_laplacian(w, u);
            const double ihx2 = 1.0 / (gr.hx() * gr.hx());
            double err = 0.0;
            auto at = [&](int i, int j) {
                i = std::clamp(i, 0, gr.nx - 1);
                j = std::clamp(j, 0, gr.ny - 1);
                return u(i, j);
            };
            for (int j = 0; j < gr.ny; ++j)
                for (int i = 0; i < gr.nx; ++i) {
                    const double fd = (4.0 * u(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) * ihx2;
                    err = std::max(err, std::abs(Au(i, j) - fd));
                }
            return err;
        };
        const double e8 = fd_gap(8), e16 = fd_gap(16);
        check("laplacian_fd_oracle_refines", e16 < 0.3 * e8 && e8 < 2.0,
              fmt(e8) + " -> " + fmt(e16));
    }
    {
        Field r = random_band_field(g, 99, 6);
        const double gap = l2_norm(neg_laplacian(ws, inv_neg_laplacian(ws, r)) - r) / l2_norm(r);
        check("inv_laplacian_round_trip", gap < 1e-10, fmt(gap));
        bool threw = false;
        try {
            inv_neg_laplacian(ws, Field(g, 1.0));
        } catch (const NonZeroMean&) {
            threw = true;
        }
        check("inv_laplacian_rejects_nonzero_mean", threw);
    }
    {
        Field r = random_band_field(g, 7, 6);
        auto [rx, ry] = gradient(ws, r);
        Field lhs = divergence(ws, rx, ry);
        Field rhs = neg_laplacian(ws, r);
        rhs *= -1.0;
        const double gap = l2_norm(lhs - rhs) / std::max(1.0, l2_norm(rhs));
        check("div_grad_equals_minus_A", gap < 1e-11, fmt(gap));
        const double curl = l2_norm(curl2d(ws, rx, ry));
        check("curl_of_gradient_vanishes", curl < 1e-10 * std::max(1.0, h1_seminorm(ws, r)), fmt(curl));
    }
    {
        Field a = random_band_field(g, 1, 6), b = random_band_field(g, 2, 6);
        const double d1 = inner(a, inv_neg_laplacian(ws, b));
        const double d2 = inner(inv_neg_laplacian(ws, a), b);
        const double gap = std::abs(d1 - d2);
        check("duality_propN2", gap <= 1e-10 * l2_norm(a) * l2_norm(b), fmt(gap));
        const double l2a = l2_norm(a);
        check("interpolation_inequality",
              l2a * l2a <= (1.0 + 1e-8) * v0_dual_norm(ws, a) * h1_seminorm(ws, a));
        Field shifted = b;
        shifted += 0.7;
        const double cp = 1.0 / std::sqrt(ws.lambda_min());
        check("poincare_spectral_constant",
              l2_norm(zero_mean(shifted)) <= (1.0 + 1e-12) * cp * h1_seminorm(ws, shifted));
    }
    {
        Field f = Field::from_function(g, [&](double x, double) { return std::cos(M_PI * x / g.lx); });
        const double v0 = v0_dual_norm(ws, f);
        const double expect = l2_norm(f) / (M_PI / g.lx);
        check("v0_dual_eigenvalue_scaling", std::abs(v0 - expect) <= 1e-12 * expect, fmt(v0));
    }
    return out;
}

inline std::vector<PropertyResult> verify_potential() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    PotentialSpec spec{1.0, 2.0, std::nullopt};

    check("normalization", f_log(spec, 0.0, 0) == 0.0 && f_log(spec, 0.0, 1) == 0.0 &&
                               std::abs(f_log(spec, 0.0, 2) - spec.theta) < 1e-15);
    {
        bool ok = true;
        double worst = 0.0;
        for (int order = 1; order <= 4 && ok; ++order)
            for (int i = 1; i < 200; ++i) {
                const double s = -0.999 + 1.998 * i / 200.0;
                const double h = 1e-6;
                const double fd = (f_log(spec, s + h, order - 1) - f_log(spec, s - h, order - 1)) / (2 * h);
                const double ex = f_log(spec, s, order);
                const double rel = std::abs(fd - ex) / std::max(1.0, std::abs(ex));
                worst = std::max(worst, rel);
                if (rel > 1e-6) ok = false;
            }
        check("fd_derivative_ladder", ok, fmt(worst));
    }
    {
        bool floor_ok = true, sym_ok = true, growth_ok = true;
        const double c = std::max(spec.theta, 2.0 / spec.theta);
        for (int i = 1; i < 600; ++i) {
            const double s = -0.999 + 1.998 * i / 600.0;
            if (f_log(spec, s, 2) < spec.theta - 1e-12) floor_ok = false;
            if (std::abs(f_log(spec, -s, 0) - f_log(spec, s, 0)) > 1e-13) sym_ok = false;
            if (f_log(spec, s, 2) > c * std::exp(c * std::abs(f_log(spec, s, 1))) * (1 + 1e-12))
                growth_ok = false;
        }
        check("convexity_floor", floor_ok);
        check("even_symmetry", sym_ok);
        check("growth_witness", growth_ok);
    }
    {
        PotentialSpec eps_spec = spec;
        eps_spec.epsilon = 1e-2;
        bool inside_ok = true;
        for (int i = 0; i <= 200; ++i) {
            const double s = -0.98 + 1.96 * i / 200.0;
            if (f_eps(eps_spec, s, 0) != f_log(eps_spec, s, 0)) inside_ok = false;
        }
        check("eps_matches_F_inside", inside_ok);

        const double knot = 1.0 - *eps_spec.epsilon;
        bool knot_ok = true;
        for (int order = 0; order <= 4; ++order) {
            const double d = 1e-13;
            const double slope = order < 4 ? std::abs(f_log(eps_spec, knot, order + 1))
                                           : 24.0 / std::pow((1 - knot) * (1 + knot), 4);
            const double gap = std::abs(f_eps(eps_spec, knot - d, order) - f_eps(eps_spec, knot + d, order));
            if (gap > 1e-12 * std::max(1.0, std::abs(f_eps(eps_spec, knot, order))) + 4 * d * slope)
                knot_ok = false;
        }
        check("eps_c4_at_knots", knot_ok);

        double inf_fpp = 1e300;
        for (int i = 0; i <= 6000; ++i) inf_fpp = std::min(inf_fpp, f_eps(eps_spec, -3.0 + i * 1e-3, 2));
        check("eps_uniform_convexity", inf_fpp > 0.0, fmt(inf_fpp));

        bool dom_ok = true;
        for (int i = 0; i <= 500; ++i) {
            const double s = -1.0 + 1e-6 + (2.0 - 2e-6) * i / 500.0;
            if (psi_eps(eps_spec, s, 0) > psi(eps_spec, s, 0) + 1e-12) dom_ok = false;
            if (std::abs(psi_eps(eps_spec, s, 1)) > std::abs(psi(eps_spec, s, 1)) + 1e-12) dom_ok = false;
        }
        check("psi_eps_domination", dom_ok);
    }
    {
        BetaRoot root = find_beta(spec);
        auto eq = [&](double b) { return 0.5 * spec.theta * std::log((1 + b) / (1 - b)) - spec.theta0 * b; };
        double lo = 1e-12, hi = 1 - 1e-12;
        for (int i = 0; i < 300; ++i) {
            const double mid = 0.5 * (lo + hi);
            (eq(mid) < 0 ? lo : hi) = mid;
        }
        const double oracle = 0.5 * (lo + hi);
        check("beta_root", root.residual <= 1e-12 && std::abs(root.beta - oracle) < 1e-11 &&
                               psi(spec, root.beta, 2) > 0 && psi(spec, root.beta, 0) < 0,
              "beta=" + fmt(root.beta));
        double prev = 1.0;
        bool trend = true;
        for (double th : {1.9, 1.99, 1.999}) {
            const double b = find_beta({th, 2.0, std::nullopt}).beta;
            if (!(b < prev && b > 0)) trend = false;
            prev = b;
        }
        check("beta_degenerate_trend", trend);
    }
    return out;
}

inline std::vector<PropertyResult> verify_elliptic() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    PotentialSpec spec{1.0, 2.0, std::nullopt};
    PcgConfig pcfg;
    pcfg.rel_tol = 1e-12;

    {
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field f = random_band_field(g, 3, 5);
        const double gap =
            l2_norm(solve_variable_neumann(ws, Field(g, 1.0), f, pcfg) - inv_neg_laplacian(ws, f));
        check("constant_coefficient_reduction", gap < 1e-9, fmt(gap));
    }
    {
        auto err = [&](int n) {
            Grid g(n, n, 1.0, 1.0);
            SpectralWorkspace ws(g);
            const double pole = 1.05, w = M_PI;
            auto gf = [&](double t) { return 1.0 / (pole - std::cos(w * t)); };
            auto d2g = [&](double t) {
                const double d = pole - std::cos(w * t), s = std::sin(w * t);
                return -w * w * std::cos(w * t) / (d * d) + 2 * w * w * s * s / (d * d * d);
            };
            auto dgf = [&](double t) {
                const double d = pole - std::cos(w * t);
                return -w * std::sin(w * t) / (d * d);
            };
            const double sc = (pole - 1) * (pole - 1);
            Field ustar = zero_mean(Field::from_function(g, [&](double x, double y) { return sc * gf(x) * gf(y); }));
            Field K = Field::from_function(g, [&](double x, double y) {
                return 2.0 + std::cos(w * x) * std::cos(w * y);
            });
            Field f = zero_mean(Field::from_function(g, [&](double x, double y) {
                const double ux = sc * dgf(x) * gf(y), uy = sc * gf(x) * dgf(y);
                const double lap = sc * (d2g(x) * gf(y) + gf(x) * d2g(y));
                const double kx = -w * std::sin(w * x) * std::cos(w * y), ky = -w * std::cos(w * x) * std::sin(w * y);
                return -(kx * ux + ky * uy + (2.0 + std::cos(w * x) * std::cos(w * y)) * lap);
            }));
            return l2_norm(solve_variable_neumann(ws, K, f, pcfg) - ustar);
        };
        const double e16 = err(16), e32 = err(32), e64 = err(64);
        check("variable_manufactured_refinement", e32 < e16 && e64 < e32,
              fmt(e16) + " -> " + fmt(e32) + " -> " + fmt(e64));
    }
    {
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field K = Field::from_function(g, [&](double x, double y) {
            return 0.02 + 0.99 * (1.0 + std::cos(M_PI * x / g.lx) * std::cos(2 * M_PI * y / g.ly));
        });
        Field f = random_band_field(g, 11, 6), h = random_band_field(g, 12, 6);
        const double a = inner(solve_variable_neumann(ws, K, f, pcfg), h);
        const double b = inner(f, solve_variable_neumann(ws, K, h, pcfg));
        check("high_contrast_self_adjoint", std::abs(a - b) <= 1e-8 * std::max(std::abs(a), 1e-12),
              fmt(std::abs(a - b)));
    }
    {
        Grid g(24, 24, 1.0, 1.0);
        SpectralWorkspace ws(g);
        auto sol = solve_log_elliptic(ws, spec, Field(g, 0.0), {});
        check("log_zero_forcing", linf_norm(sol.u) < 1e-12);
    }
    {
        auto err = [&](int n) {
            Grid g(n, n, 1.0, 1.0);
            SpectralWorkspace ws(g);
            const double pole = 1.05, w = M_PI, sc = 0.8 * (pole - 1) * (pole - 1);
            auto gf = [&](double t) { return 1.0 / (pole - std::cos(w * t)); };
            auto d2g = [&](double t) {
                const double d = pole - std::cos(w * t), s = std::sin(w * t);
                return -w * w * std::cos(w * t) / (d * d) + 2 * w * w * s * s / (d * d * d);
            };
            Field ustar = Field::from_function(g, [&](double x, double y) { return sc * gf(x) * gf(y); });
            Field f = Field::from_function(g, [&](double x, double y) {
                const double u = sc * gf(x) * gf(y);
                return -sc * (d2g(x) * gf(y) + gf(x) * d2g(y)) + f_log(spec, u, 1);
            });
            return l2_norm(solve_log_elliptic(ws, spec, f, {}, pcfg).u - ustar);
        };
        const double e16 = err(16), e32 = err(32), e64 = err(64);
        check("log_manufactured_refinement", e32 < e16 && e64 < e32,
              fmt(e16) + " -> " + fmt(e32) + " -> " + fmt(e64));
    }
    {
        Grid g(48, 48, 1.0, 1.0);
        SpectralWorkspace ws(g);
        bool lp_ok = true, mean_ok = true;
        std::string lp_detail;
        for (uint64_t seed : {101, 102, 103}) {
            Field f = random_band_field(g, seed, 6, 3.0);
            auto sol = solve_log_elliptic(ws, spec, f, {}, pcfg);
            for (double p : {2.0, 4.0, 8.0})
                if (lp_norm(sol.fprime_u, p) > lp_norm(f, p) * (1 + 1e-8)) lp_ok = false;
            if (linf_norm(sol.fprime_u) > linf_norm(f) * (1 + 1e-8)) lp_ok = false;
            if (std::abs(mean(sol.fprime_u) - mean(f)) > 1e-10 * std::max(1.0, l2_norm(f))) mean_ok = false;
            if (seed == 101) {
                // magnitude of ||F''(u)||_Lp, reported but not asserted
                Field fpp(g);
                for (int i = 0; i < fpp.size(); ++i)
                    fpp[static_cast<size_t>(i)] = f_log(spec, sol.u[static_cast<size_t>(i)], 2);
                lp_detail = "||F''(u)||_L4=" + fmt(lp_norm(fpp, 4.0));
            }
        }
        check("log_lp_contraction", lp_ok);
        check("log_mean_consistency", mean_ok);
        check("log_fpp_lp_magnitude", true, lp_detail);
    }
    {
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field f1 = random_band_field(g, 21, 5, 2.0);
        Field f2 = f1;
        f2 += 0.5;
        auto u1 = solve_log_elliptic(ws, spec, f1, {}, pcfg);
        auto u2 = solve_log_elliptic(ws, spec, f2, {}, pcfg);
        double worst = 0.0;
        for (int i = 0; i < f1.size(); ++i)
            worst = std::min(worst, u2.u[static_cast<size_t>(i)] - u1.u[static_cast<size_t>(i)]);
        check("comparison_principle", worst >= -1e-10, fmt(worst));

        const double lap = l2_norm(neg_laplacian(ws, u1.u));
        const double bound = std::sqrt(h1_seminorm(ws, u1.u)) * std::sqrt(h1_seminorm(ws, f1));
        check("delta_u_bound", lap <= 1.05 * bound, fmt(lap) + " vs " + fmt(bound));

        Field d = random_band_field(g, 42, 5);
        auto verr = [&](double p) {
            Field fp = f1;
            for (int i = 0; i < fp.size(); ++i) fp[static_cast<size_t>(i)] += p * d[static_cast<size_t>(i)];
            Field diff = solve_log_elliptic(ws, spec, fp, {}, pcfg).u - u1.u;
            const double l2 = l2_norm(diff), h1 = h1_seminorm(ws, diff);
            return std::sqrt(l2 * l2 + h1 * h1);
        };
        const double e1 = verr(0.2), e2 = verr(0.1), e3 = verr(0.05);
        check("data_continuity_trend", e2 <= 0.55 * e1 && e3 <= 0.55 * e2,
              fmt(e1) + " -> " + fmt(e2) + " -> " + fmt(e3));
    }
    return out;
}

inline std::vector<PropertyResult> verify_darcy() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    const ViscositySpec visc{1.0, 2.0};
    PcgConfig pcfg;
    pcfg.rel_tol = 1e-12;

    {
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        auto o = solve_darcy(ws, Field(g, 0.3), Field(g, 0.7), visc, pcfg);
        check("constant_state_zero", linf_norm(o.u1) + linf_norm(o.u2) + linf_norm(o.p) < 1e-11);
        bool nu_ok = true;
        for (int i = 0; i <= 300; ++i) {
            const double s = -1.5 + 3.0 * i / 300.0;
            if (visc.nu(s) < visc.nu_min() - 1e-15 || visc.nu(s) > visc.nu_max() + 1e-15) nu_ok = false;
        }
        check("viscosity_bounds", nu_ok);
    }
    {
        Grid g(48, 48, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = tanh_of_coscos(g, 0.0, 0.5, 0.4);
        Field mu = random_band_field(g, 31, 3);
        ViscositySpec matched{1.0, 1.0};
        auto o = solve_darcy(ws, phi, mu, matched, pcfg);
        auto [px, py] = gradient(ws, phi);
        for (int i = 0; i < phi.size(); ++i) {
            px[static_cast<size_t>(i)] *= mu[static_cast<size_t>(i)];
            py[static_cast<size_t>(i)] *= mu[static_cast<size_t>(i)];
        }
        Field rhs = divergence(ws, px, py);
        rhs *= -1.0;
        const double gap = l2_norm(o.p - inv_neg_laplacian(ws, rhs));
        check("matched_viscosity_oracle", gap < 1e-9, fmt(gap));
    }
    {
        Grid g(48, 48, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi = tanh_of_coscos(g, 0.1, 0.5, 0.35);
        Field mu = random_band_field(g, 32, 3);
        auto base = solve_darcy(ws, phi, mu, visc, pcfg);
        Field mu2 = mu;
        mu2 += 3.7;
        auto shifted = solve_darcy(ws, phi, mu2, visc, pcfg);
        const double gap = l2_norm(shifted.u1 - base.u1) + l2_norm(shifted.u2 - base.u2);
        check("gauge_invariance", gap < 1e-9 * std::max(1.0, l2_norm(base.u1)), fmt(gap));
        check("div_residual_tolerance", base.div_residual <= pcfg.rel_tol * 1.01, fmt(base.div_residual));

        auto [px, py] = gradient(ws, phi);
        double lhs = 0.0, rhs = 0.0;
        for (int i = 0; i < phi.size(); ++i) {
            const size_t k = static_cast<size_t>(i);
            lhs += visc.nu(phi[k]) * (base.u1[k] * base.u1[k] + base.u2[k] * base.u2[k]);
            rhs += mu[k] * (px[k] * base.u1[k] + py[k] * base.u2[k]);
        }
        lhs *= g.cell_area();
        rhs *= g.cell_area();
        check("dissipation_pairing", lhs >= 0.0 && std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, lhs),
              fmt(lhs) + " vs " + fmt(rhs));
    }
    {
        Grid g(48, 48, 1.0, 1.0);
        SpectralWorkspace ws(g);
        ViscositySpec matched{1.3, 1.3};
        Field phi = random_band_field(g, 51, 6, 0.5);
        Field mu = random_band_field(g, 52, 6, 1.0);
        auto o = solve_darcy(ws, phi, mu, matched, pcfg);
        const double scale = h1_seminorm(ws, mu) + 1.0;
        check("vorticity_matched_reduction", o.vorticity_residual <= 1e-9 * scale,
              fmt(o.vorticity_residual));
    }
    {
        auto vres = [&](int n) {
            Grid g(n, n, 1.0, 1.0);
            SpectralWorkspace ws(g);
            Field phi = tanh_of_coscos(g, 0.0, 0.6, 0.18);
            Field mu = random_band_field(g, 33, 3);
            return solve_darcy(ws, phi, mu, visc, pcfg).vorticity_residual;
        };
        const double v16 = vres(16), v32 = vres(32), v64 = vres(64);
        check("vorticity_refinement", v32 < v16 && v64 < v32,
              fmt(v16) + " -> " + fmt(v32) + " -> " + fmt(v64));
    }
    {
        Potential pot = Potential::logarithmic(1.0, 2.0);
        Grid g0(16, 16, 1.0, 1.0);
        SpectralWorkspace ws0(g0);
        check("korteweg_constant_zero", korteweg_consistency(ws0, Field(g0, 0.4), pot) < 1e-13);
        auto kres = [&](int n) {
            Grid g(n, n, 1.0, 1.0);
            SpectralWorkspace ws(g);
            return korteweg_consistency(ws, tanh_of_coscos(g, 0.0, 0.55, 0.22), pot);
        };
        const double q16 = kres(16), q32 = kres(32), q64 = kres(64);
        check("korteweg_refinement", q32 < q16 && q64 < q32,
              fmt(q16) + " -> " + fmt(q32) + " -> " + fmt(q64));
    }
    return out;
}

inline std::vector<PropertyResult> verify_scheme() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    const ViscositySpec visc{1.0, 2.0};
    Potential pot = Potential::logarithmic(1.0, 2.0);
    Grid g(32, 32, 1.0, 1.0);
    SpectralWorkspace ws(g);

    guard(out, "fixed_points", [&] {
        StepConfig cfg;
        cfg.dt = 1e-2;
        SimState s;
        s.phi = Field(g, 0.35);
        refresh_state(ws, s, pot, visc, cfg);
        SimState s1 = step(ws, s, cfg, pot, visc);
        check("fixed_point_homogeneous", linf_norm(s1.phi - s.phi) < 1e-13);

        SimState b;
        b.phi = Field(g, pot.minimizer());
        refresh_state(ws, b, pot, visc, cfg);
        SimState b1 = step(ws, b, cfg, pot, visc);
        check("fixed_point_beta", linf_norm(b1.phi - b.phi) < 1e-10);
        });
    guard(out, "mass_and_separation", [&] {
        StepConfig cfg;
        cfg.dt = 1e-4;
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.1, 0.4, 11}, pot);
        SimState s;
        s.phi = phi0;
        refresh_state(ws, s, pot, visc, cfg);
        const double m0 = mean(s.phi);
        double drift = 0.0, min_sep = 1.0;
        for (int it = 0; it < 20; ++it) {
            s = step(ws, s, cfg, pot, visc);
            drift = std::max(drift, std::abs(mean(s.phi) - m0));
            min_sep = std::min(min_sep, 1.0 - linf_norm(s.phi));
        }
        check("mass_conservation", drift <= 1e-12, fmt(drift));
        check("separation_positive", min_sep > 0.0, fmt(min_sep));
        });
    guard(out, "pure_ch_energy", [&] {
        bool mono = true;
        double worst = -1e300;
        for (double dt : {1e-3, 1e-4}) {
            StepConfig cfg;
            cfg.dt = dt;
            cfg.pure_ch = true;
            Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
            RunResult run = run_trajectory(ws, phi0, 20, cfg, pot, visc);
            for (size_t i = 1; i < run.records.size(); ++i) {
                const double gap = run.records[i].energy - run.records[i - 1].energy;
                worst = std::max(worst, gap);
                if (gap > 1e-10) mono = false;
            }
        }
        check("pure_ch_energy_monotone", mono, fmt(worst));
        });
    guard(out, "coupled_energy", [&] {
        StepConfig cfg;
        cfg.dt = 1e-4;
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
        RunResult run = run_trajectory(ws, phi0, 30, cfg, pot, visc);
        bool ok = true;
        double worst = -1e300;
        for (size_t i = 4; i < run.records.size(); ++i) {
            const double gap = run.records[i].energy - run.records[i - 1].energy;
            worst = std::max(worst, gap);
            if (gap > 1e-10) ok = false;
        }
        check("coupled_energy_trend", ok, fmt(worst));
        });
    guard(out, "self_convergence", [&] {
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
        auto run_to = [&](double dt) {
            StepConfig cfg;
            cfg.dt = dt;
            cfg.pcg.rel_tol = 1e-11;
            SimState s;
            s.phi = phi0;
            refresh_state(ws, s, pot, visc, cfg);
            const int steps = static_cast<int>(std::round(0.05 / dt));
            for (int it = 0; it < steps; ++it) s = step(ws, s, cfg, pot, visc);
            return s.phi;
        };
        Field a = run_to(2e-3), b = run_to(1e-3), c = run_to(5e-4);
        const double rate = std::log2(l2_norm(a - b) / l2_norm(b - c));
        check("temporal_self_convergence", rate > 0.7 && rate < 1.35, "rate=" + fmt(rate));
        });
    guard(out, "eps_consistency", [&] {
        // saturated enough that every regularization level is active
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.99995, 7}, pot);
        auto run_phi = [&](const Potential& p) {
            StepConfig cfg;
            cfg.dt = 1e-4;
            SimState s;
            s.phi = phi0;
            refresh_state(ws, s, p, visc, cfg);
            for (int it = 0; it < 40; ++it) s = step(ws, s, cfg, p, visc);
            return s.phi;
        };
        Field ref = run_phi(pot);
        const double d2 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-2)) - ref);
        const double d3 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-3)) - ref);
        const double d4 = l2_norm(run_phi(Potential::regularized(1.0, 2.0, 1e-4)) - ref);
        check("eps_consistency_trend", d3 <= d2 && d4 <= d3,
              fmt(d2) + " -> " + fmt(d3) + " -> " + fmt(d4));
        });
    guard(out, "initial_data_preparation", [&] {
        PotentialSpec spec{2.5, 5.0, std::nullopt};
        Field phi0 = Field::from_function(g, [&](double x, double y) {
            const double q = std::cos(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
            return 0.995 * std::tanh(q / 0.4);
        });
        PcgConfig pcfg;
        pcfg.rel_tol = 1e-11;
        pcfg.max_iter = 20000;
        auto big = prepare_initial_data(ws, phi0, 1e4, spec, {}, pcfg);
        check("prepare_truncation_inactive", l2_norm(big.result_phi0 - phi0) < 1e-7,
              fmt(l2_norm(big.result_phi0 - phi0)));
        bool sep_ok = true;
        double prev_v = 1e300;
        bool mono_ok = true;
        for (double k : {1.0, 5.0, 25.0}) {
            auto prep = prepare_initial_data(ws, phi0, k, spec, {}, pcfg);
            if (!(prep.delta > 0.0)) sep_ok = false;
            Field diff = prep.result_phi0 - phi0;
            const double l2 = l2_norm(diff), h1 = h1_seminorm(ws, diff);
            const double v = std::sqrt(l2 * l2 + h1 * h1);
            if (v > prev_v * (1 + 1e-9)) mono_ok = false;
            prev_v = v;
        }
        check("prepare_separation_levels", sep_ok);
        check("prepare_v_convergence", mono_ok);
        });
    guard(out, "scenarios", [&] {
        Field s1 = make_scenario(g, {Scenario::spinodal, 0.15, 0.3, 42}, pot);
        Field s2 = make_scenario(g, {Scenario::spinodal, 0.15, 0.3, 42}, pot);
        Field b = make_scenario(g, {Scenario::bubble, -0.2, 0.9, 0}, pot);
        Field pb = make_scenario(g, {Scenario::perturbed_beta, 0.0, 0.01, 0}, pot);
        check("scenario_means_exact", std::abs(mean(s1) - 0.15) <= 1e-12 &&
                                          std::abs(mean(b) + 0.2) <= 1e-12 &&
                                          std::abs(mean(pb) - pot.minimizer()) <= 1e-12);
        check("scenario_determinism", linf_norm(s1 - s2) == 0.0);
        });
    return out;
}

inline std::vector<PropertyResult> verify_theorems() {
    using namespace verify_detail;
    std::vector<PropertyResult> out;
    Check check{out};
    const ViscositySpec visc{1.0, 2.0};
    Potential pot = Potential::logarithmic(1.0, 2.0);

    guard(out, "balance_trend", [&] { // energy balance: residual shrinks by >= 1.7 per dt halving
        Grid g(64, 64, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
        auto residual_at = [&](double dt) {
            StepConfig cfg;
            cfg.dt = dt;
            const int steps = static_cast<int>(std::llround(0.02 / dt));
            return energy_balance_residual(run_trajectory(ws, phi0, steps, cfg, pot, visc).records);
        };
        const double r1 = residual_at(4e-4), r2 = residual_at(2e-4), r3 = residual_at(1e-4);
        check("balance_residual_dt_trend", r1 / r2 >= 1.7 && r2 / r3 >= 1.7,
              fmt(r1) + " -> " + fmt(r2) + " -> " + fmt(r3));
        });
    guard(out, "separation_95", [&] { // separation from a 0.95-saturated start (dt limited by the
      // explicit transport of the initial transient)
        Grid g(64, 64, 1.0, 1.0);
        SpectralWorkspace ws(g);
        StepConfig cfg;
        cfg.dt = 1e-4;
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.95, 3}, pot);
        RunResult run = run_trajectory(ws, phi0, 1000, cfg, pot, visc, 5);
        double min_sep = 1.0;
        for (const auto& r : run.records) min_sep = std::min(min_sep, r.separation);
        check("separation_from_95", min_sep >= 1e-4, fmt(min_sep));
        });
    guard(out, "dependence", [&] { // continuous dependence, logarithmic and polynomial modes
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        Field base = make_scenario(g, {Scenario::spinodal, 0.0, 0.2, 7}, pot);
        Field pert = random_band_field(g, 77, 4);
        pert *= 1.0 / linf_norm(pert);
        StepConfig cfg;
        cfg.dt = 5e-4;
        auto rows = continuous_dependence_experiment(ws, base, pert, {1e-2, 1e-3, 1e-4}, 0.05, cfg, pot, visc);
        bool log_ok = true;
        for (size_t i = 0; i < rows.size(); ++i)
            for (size_t j = 0; j < rows.size(); ++j)
                if (rows[i].r_v0_dual > 3.0 * rows[j].r_v0_dual) log_ok = false;
        check("dependence_ratio_log", log_ok,
              fmt(rows[0].r_v0_dual) + ", " + fmt(rows[1].r_v0_dual) + ", " + fmt(rows[2].r_v0_dual));

        Potential poly = Potential::polynomial();
        auto prows = continuous_dependence_experiment(ws, base, pert, {1e-2, 1e-3, 1e-4}, 0.05, cfg, poly, visc);
        bool poly_ok = true;
        for (size_t i = 0; i < prows.size(); ++i)
            for (size_t j = 0; j < prows.size(); ++j)
                if (prows[i].r_l2 > 3.0 * prows[j].r_l2) poly_ok = false;
        check("dependence_ratio_polynomial", poly_ok,
              fmt(prows[0].r_l2) + ", " + fmt(prows[1].r_l2) + ", " + fmt(prows[2].r_l2));
        });
    guard(out, "decay", [&] { // small-data decay
        Grid g(32, 32, 8.0, 8.0);
        SpectralWorkspace ws(g);
        StepConfig cfg;
        cfg.dt = 5e-3;
        auto a = decay_experiment(ws, 0.01, 1.5, cfg, pot, visc, 5);
        auto b = decay_experiment(ws, 0.005, 1.5, cfg, pot, visc, 5);
        check("decay_rate_positive", a.fit.rate > 0.0 && a.fit.monotone && a.fit.min_separation > 0.0,
              "rate=" + fmt(a.fit.rate));
        const double c0_ratio = a.fit.c0 / b.fit.c0;
        check("decay_c0_quadratic_scaling", c0_ratio >= 2.5 && c0_ratio <= 6.0, fmt(c0_ratio));
        });
    guard(out, "gronwall", [&] { // Gronwall dominance on randomized triples
        std::vector<double> t(201);
        for (size_t i = 0; i < t.size(); ++i) t[i] = 2.0 * i / (t.size() - 1);
        std::mt19937_64 rng(2024);
        bool log_ok = true, uni_ok = true;
        for (int trial = 0; trial < 20; ++trial) {
            const double f0 = 0.2 + 2.5 * urand(rng);
            const double g0 = 0.8 * urand(rng), h0 = 0.6 * urand(rng);
            std::vector<double> gv(t.size(), g0), hv(t.size(), h0);
            auto bound = gronwall_log_bound(f0, gv, hv, t);
            auto f = rk4_log_ode(f0, gv, hv, t);
            for (size_t i = 0; i < t.size(); ++i)
                if (f[i] > bound[i]) log_ok = false;

            const double f0u = 2.0 + 2.0 * urand(rng);
            auto fu = rk4_log_ode(f0u, gv, hv, t);
            const double r = 0.5, dt = t[1] - t[0];
            const size_t win = static_cast<size_t>(std::llround(r / dt));
            double a1 = 0.0;
            for (size_t s = 0; s + win < t.size(); ++s) {
                double i1 = 0.0;
                for (size_t i = s; i < s + win; ++i) i1 += 0.5 * dt * (fu[i] + fu[i + 1]);
                a1 = std::max(a1, i1);
            }
            const double ubound = gronwall_uniform_bound(a1, g0 * r, h0 * r, r);
            for (size_t i = 0; i < t.size(); ++i)
                if (t[i] >= r && fu[i] > ubound) uni_ok = false;
        }
        check("gronwall_log_dominance", log_ok);
        check("gronwall_uniform_dominance", uni_ok);
        });
    guard(out, "sandwich_and_shift", [&] { // H sandwich and nonnegative shifted energy
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        StepConfig cfg;
        const double c_sw = 2.0 * std::max(1.0, visc.nu_max()) / std::min(1.0, visc.nu_min());
        bool sandwich_ok = true, shift_ok = true;
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 20; ++trial) {
            SimState s;
            s.phi = make_scenario(g, {Scenario::spinodal, 0.0, 0.3 + 0.4 * urand(rng), rng()}, pot);
            refresh_state(ws, s, pot, visc, cfg);
            const double h = higher_order_energy(ws, s, visc);
            const double gm = h1_seminorm(ws, s.mu);
            const double uu = std::pow(l2_norm(s.u1), 2) + std::pow(l2_norm(s.u2), 2);
            const double base = gm * gm + uu;
            if (h > c_sw * base * (1 + 1e-12) || h < base / c_sw * (1 - 1e-12)) sandwich_ok = false;
            if (shifted_energy(ws, s.phi, pot) < -1e-10) shift_ok = false;
        }
        check("h_norm_sandwich", sandwich_ok);
        check("shifted_energy_nonneg", shift_ok);
        });
    guard(out, "determinism", [&] { // bitwise determinism of the record stream
        Grid g(32, 32, 1.0, 1.0);
        SpectralWorkspace ws(g);
        StepConfig cfg;
        cfg.dt = 5e-4;
        Field phi0 = make_scenario(g, {Scenario::spinodal, 0.0, 0.3, 17}, pot);
        RunResult a = run_trajectory(ws, phi0, 10, cfg, pot, visc);
        RunResult b = run_trajectory(ws, phi0, 10, cfg, pot, visc);
        bool same = a.records.size() == b.records.size();
        for (size_t i = 0; same && i < a.records.size(); ++i)
            if (diag_csv_row(a.records[i]) != diag_csv_row(b.records[i])) same = false;
        check("determinism_bitwise", same);
        });
    return out;
}

inline std::vector<PropertyResult> verify_suite(const std::string& suite) {
    if (suite == "operators") return verify_operators();
    if (suite == "potential") return verify_potential();
    if (suite == "elliptic") return verify_elliptic();
    if (suite == "darcy") return verify_darcy();
    if (suite == "scheme") return verify_scheme();
    if (suite == "theorems") return verify_theorems();
    throw InvalidParams("unknown verify suite: " + suite +
                        " (expected operators|potential|elliptic|darcy|scheme|theorems)");
}

} // namespace hdch

#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "hdch/potential.hpp"
#include "hdch/spectral.hpp"

namespace hdch {

struct PcgConfig {
    double rel_tol = 1e-10;
    int max_iter = 0; // 0 -> 10*(nx+ny)
    int resolve_max_iter(const Grid& g) const { return max_iter > 0 ? max_iter : 10 * (g.nx + g.ny); }

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidParams("PcgConfig: rel_tol must be in (0,1)");
    }
};

struct NewtonConfig {
    double tol = 1e-11;          // absolute l2 residual
    int max_iter = 50;
    double clamp = 1.0 - 1e-12;  // bound on iterates for singular potentials

    void validate() const {
        if (!(clamp > 0.0 && clamp < 1.0)) throw InvalidParams("NewtonConfig: clamp must be in (0,1)");
        if (max_iter < 1) throw InvalidParams("NewtonConfig: max_iter must be >= 1");
    }
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Preconditioned conjugate gradients on an SPD operator; x holds the
/// initial guess on entry. Returns {iterations, relative residual}.
template <class Op, class Prec>
std::pair<int, double> pcg(Op&& apply, Prec&& prec, const std::vector<double>& b,
                           std::vector<double>& x, double rel_tol, int max_iter) {
    const size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), ap(n);
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return {0, 0.0};
    }
    apply(x, ap);
    for (size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rnorm = std::sqrt(dot(r, r));
    if (rnorm <= rel_tol * bnorm) return {0, rnorm / bnorm};
    prec(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const double alpha = rz / dot(p, ap);
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = std::sqrt(dot(r, r));
        if (rnorm <= rel_tol * bnorm) return {it, rnorm / bnorm};
        prec(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return {-max_iter, rnorm / bnorm};
}

} // namespace detail

/// Solves -div(K grad u) = f with homogeneous Neumann conditions for
/// mean-zero f; the solution is returned mean-zero. PCG preconditioned by
/// the constant-coefficient inverse at mean(K).
inline Field solve_variable_neumann(const SpectralWorkspace& ws, const Field& coeff, const Field& f,
                                    const PcgConfig& cfg, const Field* initial_guess = nullptr) {
    cfg.validate();
    const Grid& g = ws.grid();
    double kmin = coeff[0];
    for (int i = 0; i < coeff.size(); ++i) kmin = std::min(kmin, coeff[static_cast<size_t>(i)]);
    if (!(kmin > 0.0)) throw NotPositiveCoefficient("solve_variable_neumann: min(coeff) must be > 0");
    detail::require_mean_zero(f, "solve_variable_neumann");

    const double kbar = mean(coeff);
    const auto& lam = ws.eigenvalues();
    const size_t n = static_cast<size_t>(g.size());

    auto cx = ws.scratch(), cy = ws.scratch(), d = ws.scratch();
    std::vector<double> gx(n), gy(n);
    auto apply = [&](const std::vector<double>& u, std::vector<double>& out) {
        // -div(K grad u) = gradT(K grad u) since div = -gradT here
        ws.analyze(Parity::cos, Parity::cos, u.data(), d.data());
        ws.dx_cos_to_sin(d.data(), cx.data());
        ws.synthesize(Parity::sin, Parity::cos, cx.data(), gx.data());
        ws.dy_cos_to_sin(d.data(), cy.data());
        ws.synthesize(Parity::cos, Parity::sin, cy.data(), gy.data());
        for (size_t i = 0; i < n; ++i) {
            gx[i] *= coeff[i];
            gy[i] *= coeff[i];
        }
        ws.analyze(Parity::sin, Parity::cos, gx.data(), cx.data());
        ws.dx_sin_to_cos(cx.data(), d.data());
        ws.analyze(Parity::cos, Parity::sin, gy.data(), cy.data());
        ws.dy_sin_to_cos(cy.data(), cx.data());
        for (size_t i = 0; i < n; ++i) d[i] = -(d[i] + cx[i]);
        ws.synthesize(Parity::cos, Parity::cos, d.data(), out.data());
    };
    auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
        ws.analyze(Parity::cos, Parity::cos, r.data(), d.data());
        d[0] = 0.0;
        for (size_t i = 1; i < n; ++i) d[i] /= kbar * lam[i];
        ws.synthesize(Parity::cos, Parity::cos, d.data(), z.data());
    };

    std::vector<double> x(n, 0.0);
    if (initial_guess) {
        if (!(initial_guess->grid() == g)) throw InvalidParams("solve_variable_neumann: guess grid mismatch");
        std::copy(initial_guess->data(), initial_guess->data() + n, x.begin());
    }
    std::vector<double> b(f.data(), f.data() + n);
    auto [iters, rel] = detail::pcg(apply, prec, b, x, cfg.rel_tol, cfg.resolve_max_iter(g));
    if (iters < 0)
        throw NoConvergence("solve_variable_neumann: PCG budget exhausted", rel, -iters);

    Field u(g);
    std::copy(x.begin(), x.end(), u.data());
    return zero_mean(u);
}

struct LogEllipticResult {
    Field u;
    Field fprime_u;
    int newton_iterations = 0;
    double residual = 0.0;
};

/// Solves -Laplace(u) + F'(u) = f for the logarithmic convex part F by
/// damped Newton in collocation space. The iterates are clamped to
/// ||u||_inf <= cfg.clamp with step halving on residual increase; the
/// unique solution satisfies ||u||_inf < 1.
inline LogEllipticResult solve_log_elliptic(const SpectralWorkspace& ws, const PotentialSpec& spec,
                                            const Field& f, const NewtonConfig& cfg,
                                            const PcgConfig& pcg_cfg = {}) {
    cfg.validate();
    spec.validate();
    const Grid& g = ws.grid();
    if (!(f.grid() == g)) throw InvalidParams("solve_log_elliptic: grid mismatch");
    const size_t n = static_cast<size_t>(g.size());
    const auto& lam = ws.eigenvalues();

    auto clamp_field = [&](Field& u) {
        for (size_t i = 0; i < n; ++i) u[i] = std::clamp(u[i], -cfg.clamp, cfg.clamp);
    };

    // initial guess: (-Laplace + theta) u0 = f, projected inside (-1,1);
    // theta is the global convexity floor of F''
    Field u(g);
    {
        auto c = ws.scratch();
        ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
        for (size_t i = 0; i < n; ++i) c[i] /= lam[i] + spec.theta;
        ws.synthesize(Parity::cos, Parity::cos, c.data(), u.data());
        clamp_field(u);
    }

    auto residual_of = [&](const Field& v, Field& out) {
        out = neg_laplacian(ws, v);
        for (size_t i = 0; i < n; ++i) out[i] += f_log(spec, v[i], 1) - f[i];
    };

    Field res(g);
    residual_of(u, res);
    double rnorm = l2_norm(res);

    std::vector<double> fpp(n), scratch_c(static_cast<size_t>(g.size()));
    Field trial(g), trial_res(g);
    int newton_count = 0;
    for (int newton_it = 0; newton_it < cfg.max_iter; ++newton_it) {
        if (rnorm <= cfg.tol)
            break;
        ++newton_count;

        for (size_t i = 0; i < n; ++i) fpp[i] = f_log(spec, u[i], 2);
        double cbar = 0.0;
        for (size_t i = 0; i < n; ++i) cbar += fpp[i];
        cbar /= static_cast<double>(n);

        auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
            ws.analyze(Parity::cos, Parity::cos, v.data(), scratch_c.data());
            for (size_t i = 0; i < n; ++i) scratch_c[i] *= lam[i];
            ws.synthesize(Parity::cos, Parity::cos, scratch_c.data(), out.data());
            for (size_t i = 0; i < n; ++i) out[i] += fpp[i] * v[i];
        };
        auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
            ws.analyze(Parity::cos, Parity::cos, r.data(), scratch_c.data());
            for (size_t i = 0; i < n; ++i) scratch_c[i] /= lam[i] + cbar;
            ws.synthesize(Parity::cos, Parity::cos, scratch_c.data(), z.data());
        };

        std::vector<double> rhs(n), delta(n, 0.0);
        for (size_t i = 0; i < n; ++i) rhs[i] = -res[i];
        auto [iters, rel] = detail::pcg(apply, prec, rhs, delta, pcg_cfg.rel_tol, pcg_cfg.resolve_max_iter(g));
        if (iters < 0)
            throw NoConvergence("solve_log_elliptic: inner PCG budget exhausted", rel, -iters);

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (size_t i = 0; i < n; ++i) trial[i] = u[i] + alpha * delta[i];
            clamp_field(trial);
            residual_of(trial, trial_res);
            const double tnorm = l2_norm(trial_res);
            // strict decrease required; ties mean the roundoff floor
            if ((tnorm <= rnorm * (1.0 - 1e-4 * alpha) && tnorm < rnorm) || tnorm <= cfg.tol) {
                u = trial;
                res = trial_res;
                rnorm = tnorm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NewtonDiverged("solve_log_elliptic: line search stalled (tolerance below the attainable residual)",
                                 rnorm, newton_it);
    }
    if (rnorm > cfg.tol)
        throw NoConvergence("solve_log_elliptic: Newton budget exhausted", rnorm, cfg.max_iter);

    LogEllipticResult out{Field(g), Field(g), newton_count, rnorm};
    out.u = u;
    for (size_t i = 0; i < n; ++i) out.fprime_u[i] = f_log(spec, u[i], 1);
    return out;
}

} // namespace hdch

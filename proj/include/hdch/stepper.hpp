#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "hdch/darcy.hpp"
#include "hdch/elliptic.hpp"
#include "hdch/potential.hpp"
#include "hdch/spectral.hpp"

namespace hdch {

/// Discrete state of the coupled system at one time level.
struct SimState {
    double t = 0.0;
    Field phi, mu, p, u1, u2;
    double div_residual = 0.0;
    double vorticity_residual = 0.0;
};

struct StepConfig {
    double dt = 1e-4;
    bool pure_ch = false; // force u = 0 (no transport, no Darcy resolve)
    NewtonConfig newton;
    PcgConfig pcg;

    void validate() const {
        if (!(dt > 0.0)) throw InvalidParams("StepConfig: dt must be positive");
        newton.validate();
        pcg.validate();
    }
};

namespace detail {

/// Conservative transport div(u phi); exactly mean-free in the cosine
/// representation, which is what makes the mass update exact.
inline Field transport_div(const SpectralWorkspace& ws, const Field& u1, const Field& u2,
                           const Field& phi) {
    Field fx = u1, fy = u2;
    for (size_t i = 0; i < static_cast<size_t>(phi.size()); ++i) {
        fx[i] *= phi[i];
        fy[i] *= phi[i];
    }
    return divergence(ws, fx, fy);
}

} // namespace detail

/// Completes a state from phi alone: physical mu = -Lap(phi) + Psi'(phi),
/// then the Darcy solve (or zeros in pure Cahn-Hilliard mode).
inline void refresh_state(const SpectralWorkspace& ws, SimState& state, const Potential& pot,
                          const ViscositySpec& visc, const StepConfig& cfg) {
    const size_t n = static_cast<size_t>(state.phi.size());
    state.mu = neg_laplacian(ws, state.phi);
    for (size_t i = 0; i < n; ++i) state.mu[i] += pot.psi(state.phi[i], 1);
    if (cfg.pure_ch) {
        state.p = Field(ws.grid());
        state.u1 = Field(ws.grid());
        state.u2 = Field(ws.grid());
        state.div_residual = 0.0;
        state.vorticity_residual = 0.0;
        return;
    }
    const Field* warm = state.p.size() == state.phi.size() ? &state.p : nullptr;
    DarcyOutput d = solve_darcy(ws, state.phi, state.mu, visc, cfg.pcg, warm);
    state.p = std::move(d.p);
    state.u1 = std::move(d.u1);
    state.u2 = std::move(d.u2);
    state.div_residual = d.div_residual;
    state.vorticity_residual = d.vorticity_residual;
}

/// One convex-splitting step of the coupled system:
///   (phi^{ n+1} - phi^n)/dt + div(u^n phi^n) = Lap(mu_s),
///   mu_s = -Lap(phi^{n+1}) + F'(phi^{n+1}) - theta0 phi^n,
/// followed by the physical (mu, p, u) refresh at the new phi. The convex
/// part is implicit, the concave part and the transport are explicit; the
/// zero mode of the update vanishes identically, so mean(phi) is conserved
/// to roundoff.
inline SimState step(const SpectralWorkspace& ws, const SimState& state, const StepConfig& cfg,
                     const Potential& pot, const ViscositySpec& visc) {
    cfg.validate();
    const Grid& g = ws.grid();
    const size_t n = static_cast<size_t>(g.size());
    const auto& lam = ws.eigenvalues();
    const double dt = cfg.dt;
    const double theta0 = pot.theta0();
    const double clamp = cfg.newton.clamp;

    // b = phi^n + dt theta0 A phi^n - dt T^n
    Field b(g);
    {
        auto c = ws.scratch();
        ws.analyze(Parity::cos, Parity::cos, state.phi.data(), c.data());
        for (size_t i = 0; i < n; ++i) c[i] *= dt * theta0 * lam[i];
        ws.synthesize(Parity::cos, Parity::cos, c.data(), b.data());
        b += state.phi;
        if (!cfg.pure_ch) {
            Field t = detail::transport_div(ws, state.u1, state.u2, state.phi);
            t *= -dt;
            b += t;
        }
    }

    // residual G(phi) = phi + dt A^2 phi + dt A F'(phi) - b
    auto cphi = ws.scratch(), cf = ws.scratch();
    Field fprime(g);
    auto residual_of = [&](const Field& v, Field& out) {
        ws.analyze(Parity::cos, Parity::cos, v.data(), cphi.data());
        for (size_t i = 0; i < n; ++i) fprime[i] = pot.f(v[i], 1);
        ws.analyze(Parity::cos, Parity::cos, fprime.data(), cf.data());
        for (size_t i = 0; i < n; ++i)
            cphi[i] = (1.0 + dt * lam[i] * lam[i]) * cphi[i] + dt * lam[i] * cf[i];
        ws.synthesize(Parity::cos, Parity::cos, cphi.data(), out.data());
        out -= b;
    };

    Field phi = state.phi;
    Field res(g), trial(g), trial_res(g);
    residual_of(phi, res);
    double rnorm = l2_norm(res);

    std::vector<double> fpp(n), cwork(n);
    for (int newton_it = 0; newton_it <= cfg.newton.max_iter; ++newton_it) {
        if (rnorm <= cfg.newton.tol) break;
        if (newton_it == cfg.newton.max_iter)
            throw NewtonDiverged("step: Newton budget exhausted (consider a smaller dt)", rnorm,
                                 newton_it);

        for (size_t i = 0; i < n; ++i) fpp[i] = pot.f(phi[i], 2);
        double cbar = 0.0;
        for (size_t i = 0; i < n; ++i) cbar += fpp[i];
        cbar /= static_cast<double>(n);

        // A^{-1}-transformed Newton system on the mean-zero subspace:
        //   (A^{-1} + dt A + dt P0 F'' P0) delta = A^{-1}(-G)
        auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
            ws.analyze(Parity::cos, Parity::cos, v.data(), cwork.data());
            cwork[0] = 0.0;
            for (size_t i = 1; i < n; ++i) cwork[i] *= 1.0 / lam[i] + dt * lam[i];
            ws.synthesize(Parity::cos, Parity::cos, cwork.data(), out.data());
            double m = 0.0;
            for (size_t i = 0; i < n; ++i) m += fpp[i] * v[i];
            m /= static_cast<double>(n);
            for (size_t i = 0; i < n; ++i) out[i] += dt * (fpp[i] * v[i] - m);
        };
        auto prec = [&](const std::vector<double>& r, std::vector<double>& z) {
            ws.analyze(Parity::cos, Parity::cos, r.data(), cwork.data());
            cwork[0] = 0.0;
            for (size_t i = 1; i < n; ++i) cwork[i] /= 1.0 / lam[i] + dt * lam[i] + dt * cbar;
            ws.synthesize(Parity::cos, Parity::cos, cwork.data(), z.data());
        };

        // rhs = A^{-1} P0 (-G)
        std::vector<double> rhs(n), delta(n, 0.0);
        {
            ws.analyze(Parity::cos, Parity::cos, res.data(), cwork.data());
            cwork[0] = 0.0;
            for (size_t i = 1; i < n; ++i) cwork[i] = -cwork[i] / lam[i];
            ws.synthesize(Parity::cos, Parity::cos, cwork.data(), rhs.data());
        }
        auto [iters, rel] = detail::pcg(apply, prec, rhs, delta, cfg.pcg.rel_tol,
                                        cfg.pcg.resolve_max_iter(g));
        if (iters < 0) throw NoConvergence("step: inner PCG budget exhausted", rel, -iters);

        // keep the mean exact: the direction must be mean-free
        double dmean = 0.0;
        for (double v : delta) dmean += v;
        dmean /= static_cast<double>(n);
        for (double& v : delta) v -= dmean;

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            bool feasible = true;
            for (size_t i = 0; i < n; ++i) {
                trial[i] = phi[i] + alpha * delta[i];
                if (pot.singular() && std::abs(trial[i]) > clamp) feasible = false;
            }
            if (feasible) {
                residual_of(trial, trial_res);
                const double tnorm = l2_norm(trial_res);
                if ((tnorm <= rnorm * (1.0 - 1e-4 * alpha) && tnorm < rnorm) || tnorm <= cfg.newton.tol) {
                    phi = trial;
                    res = trial_res;
                    rnorm = tnorm;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted)
            throw NewtonDiverged("step: line search stalled (consider a smaller dt)", rnorm, newton_it);
    }

    SimState next;
    next.t = state.t + dt;
    next.phi = std::move(phi);
    next.p = state.p; // warm start for the pressure solve
    refresh_state(ws, next, pot, visc, cfg);
    return next;
}

// --- initial-data preparation -------------------------------------------

/// Truncation-regularization of a raw datum: mu0 = -Lap(phi0) + F'(phi0)
/// is clipped to [-k, k] and the logarithmic Neumann problem
/// -Lap(v) + F'(v) = clip(mu0) is solved. The result is strictly
/// separated from +-1 with a reported margin delta.
struct InitPrep {
    double k = 0.0;
    Field result_phi0;
    double delta = 0.0;
};

inline InitPrep prepare_initial_data(const SpectralWorkspace& ws, const Field& phi0_raw, double k,
                                     const PotentialSpec& spec, const NewtonConfig& newton,
                                     const PcgConfig& pcg = {}) {
    if (!(k > 0.0)) throw InvalidParams("prepare_initial_data: k must be positive");
    if (!(linf_norm(phi0_raw) < 1.0))
        throw OutOfRange("prepare_initial_data: ||phi0||_inf must be < 1");
    const size_t n = static_cast<size_t>(phi0_raw.size());
    Field mu0 = neg_laplacian(ws, phi0_raw);
    for (size_t i = 0; i < n; ++i) mu0[i] = std::clamp(mu0[i] + f_log(spec, phi0_raw[i], 1), -k, k);
    auto sol = solve_log_elliptic(ws, spec, mu0, newton, pcg);
    InitPrep out;
    out.k = k;
    out.delta = 1.0 - linf_norm(sol.u);
    out.result_phi0 = std::move(sol.u);
    return out;
}

// --- scenario generators --------------------------------------------------

enum class Scenario { spinodal, bubble, perturbed_beta };

inline Scenario scenario_from_name(const std::string& name) {
    if (name == "spinodal") return Scenario::spinodal;
    if (name == "bubble") return Scenario::bubble;
    if (name == "perturbed_beta") return Scenario::perturbed_beta;
    throw InvalidParams("unknown scenario: " + name);
}

struct ScenarioParams {
    Scenario name = Scenario::spinodal;
    double mean = 0.0;
    double amplitude = 0.2;
    uint64_t seed = 1;
};

/// Deterministic initial data. spinodal: mean + amplitude * (seeded smooth
/// random cosine field of unit sup norm); bubble: tanh disk profile between
/// -amplitude and +amplitude with the radius chosen from the mean;
/// perturbed_beta: beta + amplitude cos(pi x/lx) cos(pi y/ly).
inline Field make_scenario(const Grid& g, const ScenarioParams& sp, const Potential& pot) {
    Field phi(g);
    switch (sp.name) {
        case Scenario::spinodal: {
            if (!(sp.amplitude >= 0.0)) throw InvalidParams("spinodal: amplitude must be >= 0");
            if (pot.singular() && !(std::abs(sp.mean) + sp.amplitude < 1.0))
                throw InvalidParams("spinodal: requires |mean| + amplitude < 1");
            if (sp.amplitude == 0.0) {
                phi += sp.mean;
                return phi;
            }
            std::mt19937_64 rng(sp.seed);
            constexpr int kmax = 8;
            double coeff[kmax + 1][kmax + 1];
            for (int l = 0; l <= kmax; ++l)
                for (int k = 0; k <= kmax; ++k) {
                    const double u = ((rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
                    coeff[l][k] = (k == 0 && l == 0) ? 0.0 : u / (1.0 + k * k + l * l);
                }
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    double v = 0.0;
                    for (int l = 0; l <= kmax; ++l)
                        for (int k = 0; k <= kmax; ++k)
                            v += coeff[l][k] * std::cos(M_PI * k * g.x(i) / g.lx) *
                                 std::cos(M_PI * l * g.y(j) / g.ly);
                    phi(i, j) = v;
                }
            const double sup = linf_norm(phi);
            phi *= sp.amplitude / sup;
            phi += sp.mean;
            return phi;
        }
        case Scenario::bubble: {
            const double a = sp.amplitude;
            if (!(a > 0.0) || (pot.singular() && !(a < 1.0)))
                throw InvalidParams("bubble: amplitude must lie in (0,1)");
            if (!(std::abs(sp.mean) < a)) throw InvalidParams("bubble: requires |mean| < amplitude");
            const double w = std::max(0.05 * std::min(g.lx, g.ly), 3.0 * std::max(g.hx(), g.hy()));
            const double cx = 0.5 * g.lx, cy = 0.5 * g.ly;
            auto profile = [&](double r0) {
                return Field::from_function(g, [&](double x, double y) {
                    const double r = std::hypot(x - cx, y - cy);
                    return a * std::tanh((r0 - r) / w);
                });
            };
            // fit the radius to the target mean; shifting instead would
            // push a near-saturated profile out of (-1,1)
            double lo = 0.0, hi = 0.5 * std::hypot(g.lx, g.ly);
            if (!(mean(profile(lo)) < sp.mean && sp.mean < mean(profile(hi))))
                throw InvalidParams("bubble: target mean unreachable for this amplitude");
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (mean(profile(mid)) < sp.mean ? lo : hi) = mid;
            }
            phi = profile(0.5 * (lo + hi));
            phi += sp.mean - mean(phi); // residual correction, O(1e-15)
            if (pot.singular() && !(linf_norm(phi) < 1.0))
                throw InvalidParams("bubble: profile leaves (-1,1)");
            return phi;
        }
        case Scenario::perturbed_beta: {
            const double beta = pot.minimizer();
            if (pot.singular() && !(beta + std::abs(sp.amplitude) < 1.0))
                throw InvalidParams("perturbed_beta: beta + amplitude must stay below 1");
            phi = Field::from_function(g, [&](double x, double y) {
                return beta + sp.amplitude * std::cos(M_PI * x / g.lx) * std::cos(M_PI * y / g.ly);
            });
            return phi;
        }
    }
    throw InvalidParams("make_scenario: unreachable");
}

} // namespace hdch

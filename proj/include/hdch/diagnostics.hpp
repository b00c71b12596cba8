#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "hdch/stepper.hpp"

namespace hdch {

/// Per-step scalar diagnostics.
struct DiagRecord {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;         // E
    double shifted_energy = 0.0; // E + |Omega| |Psi(beta)|
    double grad_mu_l2 = 0.0;
    double u_l2 = 0.0;
    double higher_energy = 0.0;  // H
    double separation = 0.0;     // 1 - ||phi||_inf
    double div_residual = 0.0;
    double vorticity_residual = 0.0;
};

/// Ginzburg-Landau free energy, midpoint quadrature.
inline double energy(const SpectralWorkspace& ws, const Field& phi, const Potential& pot) {
    if (pot.singular() && !(linf_norm(phi) < 1.0))
        throw OutOfRange("energy: ||phi||_inf must be < 1 for the logarithmic potential");
    const double h1 = h1_seminorm(ws, phi);
    double bulk = 0.0;
    for (int i = 0; i < phi.size(); ++i) bulk += pot.psi(phi[static_cast<size_t>(i)], 0);
    return 0.5 * h1 * h1 + bulk * phi.grid().cell_area();
}

/// E shifted by |Omega| |Psi(beta)|, nonnegative for admissible fields.
inline double shifted_energy(const SpectralWorkspace& ws, const Field& phi, const Potential& pot) {
    return energy(ws, phi, pot) + phi.grid().area() * std::abs(pot.psi_at_minimizer());
}

/// H = ||grad mu||^2 / 2 + int nu(phi) |u|^2 / 2.
inline double higher_order_energy(const SpectralWorkspace& ws, const SimState& s,
                                  const ViscositySpec& visc) {
    const double gmu = h1_seminorm(ws, s.mu);
    double nu_u2 = 0.0;
    for (int i = 0; i < s.phi.size(); ++i) {
        const size_t k = static_cast<size_t>(i);
        nu_u2 += visc.nu(s.phi[k]) * (s.u1[k] * s.u1[k] + s.u2[k] * s.u2[k]);
    }
    nu_u2 *= s.phi.grid().cell_area();
    return 0.5 * gmu * gmu + 0.5 * nu_u2;
}

inline DiagRecord diagnose(const SpectralWorkspace& ws, const SimState& s, const Potential& pot,
                           const ViscositySpec& visc) {
    DiagRecord r;
    r.t = s.t;
    r.mass = mean(s.phi);
    r.energy = energy(ws, s.phi, pot);
    r.shifted_energy = r.energy + s.phi.grid().area() * std::abs(pot.psi_at_minimizer());
    r.grad_mu_l2 = h1_seminorm(ws, s.mu);
    const double u1 = l2_norm(s.u1), u2 = l2_norm(s.u2);
    r.u_l2 = std::sqrt(u1 * u1 + u2 * u2);
    r.higher_energy = higher_order_energy(ws, s, visc);
    r.separation = 1.0 - linf_norm(s.phi);
    r.div_residual = s.div_residual;
    r.vorticity_residual = s.vorticity_residual;
    return r;
}

// --- trajectory-level quantities -----------------------------------------

/// | E(t_N) - E(t_0) + trapz(||grad mu||^2 + int nu |u|^2) | / (|E(t_0)|+1).
/// The viscous dissipation int nu |u|^2 is recovered from the stored
/// records as 2H - ||grad mu||^2.
inline double energy_balance_residual(const std::vector<DiagRecord>& traj) {
    if (traj.size() < 2) throw EmptyTrajectory("energy_balance_residual: need at least two records");
    double integral = 0.0;
    auto dissipation = [](const DiagRecord& r) {
        const double gmu2 = r.grad_mu_l2 * r.grad_mu_l2;
        const double nu_u2 = 2.0 * r.higher_energy - gmu2; // int nu |u|^2
        return gmu2 + nu_u2;
    };
    for (size_t i = 1; i < traj.size(); ++i) {
        const double dt = traj[i].t - traj[i - 1].t;
        integral += 0.5 * dt * (dissipation(traj[i]) + dissipation(traj[i - 1]));
    }
    const double drift = traj.back().energy - traj.front().energy + integral;
    return std::abs(drift) / (std::abs(traj.front().energy) + 1.0);
}

inline std::string diag_csv_header() {
    return "t,mass,E,E_tilde,grad_mu_l2,u_l2,H,separation,div_res,vort_res";
}

inline std::string diag_csv_row(const DiagRecord& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.t, r.mass,
                  r.energy, r.shifted_energy, r.grad_mu_l2, r.u_l2, r.higher_energy, r.separation,
                  r.div_residual, r.vorticity_residual);
    return buf;
}

// --- continuous dependence -------------------------------------------------

struct DependenceRow {
    double amplitude = 0.0;
    double r_v0_dual = 0.0; // sup_t ||phi1-phi2||_{V0'} / ||phi01-phi02||_{V0'}
    double r_l2 = 0.0;      // sup_t ||phi1-phi2|| / ||phi01-phi02||
};

/// Runs pairs (base, base + a * perturbation) to time T and records the
/// worst-case ratio of the solution distance to the initial distance, in
/// both the V0' metric (natural for the logarithmic potential) and l2
/// (natural for the polynomial mode). The perturbation must be mean-free
/// so both trajectories share the same mass.
inline std::vector<DependenceRow> continuous_dependence_experiment(
    const SpectralWorkspace& ws, const Field& base_phi0, const Field& perturbation,
    const std::vector<double>& amplitudes, double T, const StepConfig& cfg, const Potential& pot,
    const ViscositySpec& visc) {
    detail::require_mean_zero(perturbation, "continuous_dependence_experiment");
    std::vector<DependenceRow> out;
    const int steps = static_cast<int>(std::llround(T / cfg.dt));

    for (double a : amplitudes) {
        SimState s1, s2;
        s1.phi = base_phi0;
        s2.phi = base_phi0;
        for (int i = 0; i < s2.phi.size(); ++i)
            s2.phi[static_cast<size_t>(i)] += a * perturbation[static_cast<size_t>(i)];
        refresh_state(ws, s1, pot, visc, cfg);
        refresh_state(ws, s2, pot, visc, cfg);

        const Field d0 = s2.phi - s1.phi;
        const double d0_v0 = a != 0.0 ? v0_dual_norm(ws, d0) : 0.0;
        const double d0_l2 = l2_norm(d0);

        DependenceRow row;
        row.amplitude = a;
        if (a == 0.0) {
            // determinism: both runs are the same trajectory
            for (int it = 0; it < steps; ++it) {
                s1 = step(ws, s1, cfg, pot, visc);
                s2 = step(ws, s2, cfg, pot, visc);
            }
            row.r_v0_dual = v0_dual_norm(ws, zero_mean(s2.phi - s1.phi));
            row.r_l2 = l2_norm(s2.phi - s1.phi);
        } else {
            double sup_v0 = d0_v0 > 0 ? 1.0 : 0.0, sup_l2 = 1.0;
            for (int it = 0; it < steps; ++it) {
                s1 = step(ws, s1, cfg, pot, visc);
                s2 = step(ws, s2, cfg, pot, visc);
                Field d = s2.phi - s1.phi;
                sup_l2 = std::max(sup_l2, l2_norm(d) / d0_l2);
                if (d0_v0 > 0.0) sup_v0 = std::max(sup_v0, v0_dual_norm(ws, zero_mean(d)) / d0_v0);
            }
            row.r_v0_dual = sup_v0;
            row.r_l2 = sup_l2;
        }
        out.push_back(row);
    }
    return out;
}

// --- small-data decay -------------------------------------------------------

struct DecayFit {
    double rate = 0.0;          // gamma in H ~ c0 exp(-gamma t)
    double c0 = 0.0;            // fitted prefactor
    double fit_residual = 0.0;  // rms residual of the log-linear fit
    bool monotone = false;      // H nonincreasing over the fit window
    double min_separation = 0.0;
    double shifted_energy0 = 0.0;
    double grad_mu0 = 0.0;
    bool degenerate = false;    // H identically ~0 (exact steady state)
};

/// Least-squares fit of log H(t) ~ log c0 - gamma t over the second half
/// of the records.
inline DecayFit fit_decay(const std::vector<DiagRecord>& traj) {
    if (traj.size() < 4) throw EmptyTrajectory("fit_decay: need at least four records");
    DecayFit fit;
    fit.shifted_energy0 = traj.front().shifted_energy;
    fit.grad_mu0 = traj.front().grad_mu_l2;
    fit.min_separation = traj.front().separation;
    for (const auto& r : traj) fit.min_separation = std::min(fit.min_separation, r.separation);

    const size_t begin = traj.size() / 2;
    double hmax = 0.0;
    for (size_t i = begin; i < traj.size(); ++i) hmax = std::max(hmax, traj[i].higher_energy);
    if (hmax <= 1e-280) {
        fit.degenerate = true;
        fit.rate = std::numeric_limits<double>::infinity();
        fit.monotone = true;
        return fit;
    }

    fit.monotone = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(traj.size() - begin);
    for (size_t i = begin; i < traj.size(); ++i) {
        if (i > begin && traj[i].higher_energy > traj[i - 1].higher_energy) fit.monotone = false;
        const double x = traj[i].t, y = std::log(std::max(traj[i].higher_energy, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    fit.rate = -slope;
    fit.c0 = std::exp(intercept);
    double rss = 0.0;
    for (size_t i = begin; i < traj.size(); ++i) {
        const double y = std::log(std::max(traj[i].higher_energy, 1e-300));
        const double e = y - (intercept + slope * traj[i].t);
        rss += e * e;
    }
    fit.fit_residual = std::sqrt(rss / n);
    return fit;
}

// --- instrumented runs -------------------------------------------------------

struct RunResult {
    std::vector<DiagRecord> records;
    SimState final_state;
};

/// Steps from phi0 to T = steps * dt, recording diagnostics every
/// record_every steps (the initial and final states are always recorded).
inline RunResult run_trajectory(const SpectralWorkspace& ws, const Field& phi0, int steps,
                                const StepConfig& cfg, const Potential& pot,
                                const ViscositySpec& visc, int record_every = 1) {
    if (record_every < 1) throw InvalidParams("run_trajectory: record_every must be >= 1");
    RunResult out;
    SimState s;
    s.t = 0.0;
    s.phi = phi0;
    refresh_state(ws, s, pot, visc, cfg);
    out.records.push_back(diagnose(ws, s, pot, visc));
    for (int it = 1; it <= steps; ++it) {
        s = step(ws, s, cfg, pot, visc);
        if (it % record_every == 0 || it == steps) out.records.push_back(diagnose(ws, s, pot, visc));
    }
    out.final_state = std::move(s);
    return out;
}

struct DecayExperiment {
    DecayFit fit;
    std::vector<DiagRecord> records;
};

/// Small-data experiment: start from perturbed_beta(a), run to T and fit
/// the exponential decay of H over the tail half of the trajectory.
inline DecayExperiment decay_experiment(const SpectralWorkspace& ws, double amplitude, double T,
                                        const StepConfig& cfg, const Potential& pot,
                                        const ViscositySpec& visc, int record_every = 1) {
    Field phi0 = make_scenario(ws.grid(), {Scenario::perturbed_beta, 0.0, amplitude, 0}, pot);
    const int steps = static_cast<int>(std::llround(T / cfg.dt));
    RunResult run = run_trajectory(ws, phi0, steps, cfg, pot, visc, record_every);
    DecayExperiment out;
    out.fit = fit_decay(run.records);
    out.records = std::move(run.records);
    return out;
}

// --- generalized Gronwall bounds -------------------------------------------

/// Closed-form bound of the logarithmic Gronwall lemma for
///   f' <= g f log(e+f) + h,  g,h >= 0,  f(0) = f0 > 0:
///   f(t) <= (e+f0)^{exp(G(t))} exp( int_0^t exp(G(t)-G(s)) h(s) ds ),
/// with G the running integral of g; all integrals by trapezoid on grid_t.
inline std::vector<double> gronwall_log_bound(double f0, const std::vector<double>& g,
                                              const std::vector<double>& h,
                                              const std::vector<double>& grid_t) {
    if (!(f0 > 0.0)) throw NegativeInput("gronwall_log_bound: f0 must be positive");
    if (g.size() != grid_t.size() || h.size() != grid_t.size() || grid_t.size() < 2)
        throw InvalidParams("gronwall_log_bound: inconsistent sampling");
    for (size_t i = 0; i < g.size(); ++i)
        if (g[i] < 0.0 || h[i] < 0.0) throw NegativeInput("gronwall_log_bound: g, h must be >= 0");

    const size_t n = grid_t.size();
    std::vector<double> G(n, 0.0), K(n, 0.0); // K = int_0^t exp(-G) h
    for (size_t i = 1; i < n; ++i) {
        const double dt = grid_t[i] - grid_t[i - 1];
        if (!(dt > 0.0)) throw InvalidParams("gronwall_log_bound: grid_t must be increasing");
        G[i] = G[i - 1] + 0.5 * dt * (g[i] + g[i - 1]);
        K[i] = K[i - 1] + 0.5 * dt * (std::exp(-G[i]) * h[i] + std::exp(-G[i - 1]) * h[i - 1]);
    }
    std::vector<double> bound(n);
    for (size_t i = 0; i < n; ++i)
        bound[i] = std::pow(M_E + f0, std::exp(G[i])) * std::exp(std::exp(G[i]) * K[i]);
    return bound;
}

/// Uniform variant: with window bounds int_t^{t+r} f <= a1, g <= a2,
/// h <= a3, every t >= r satisfies f(t) <= exp((a1/r + a3) e^{a2}).
inline double gronwall_uniform_bound(double a1, double a2, double a3, double r) {
    if (!(r > 0.0) || a1 < 0.0 || a2 < 0.0 || a3 < 0.0)
        throw NegativeInput("gronwall_uniform_bound: nonnegative inputs and r > 0 required");
    return std::exp((a1 / r + a3) * std::exp(a2));
}

} // namespace hdch

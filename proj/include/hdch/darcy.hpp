#pragma once

#include <cmath>
#include <utility>

#include "hdch/elliptic.hpp"
#include "hdch/potential.hpp"
#include "hdch/spectral.hpp"

namespace hdch {

/// Mixture viscosity nu(s) = nu1 (1+s)/2 + nu2 (1-s)/2 on [-1,1], held
/// constant outside. nu() uses the hard clamp; nu_smooth() replaces the
/// kinks at +-1 by a quadratic transition of half-width kSmoothWidth so
/// that nu' is continuous where the vorticity identity needs it. The two
/// agree exactly for |s| <= 1 - kSmoothWidth.
struct ViscositySpec {
    double nu1 = 1.0;
    double nu2 = 1.0;

    static constexpr double kSmoothWidth = 1e-3;

    void validate() const {
        if (!(nu1 > 0.0 && nu2 > 0.0)) throw InvalidParams("ViscositySpec: viscosities must be positive");
    }
    double nu_min() const { return std::min(nu1, nu2); }
    double nu_max() const { return std::max(nu1, nu2); }

    double nu(double s) const {
        const double c = std::clamp(s, -1.0, 1.0);
        return 0.5 * (nu1 + nu2) + 0.5 * (nu1 - nu2) * c;
    }

    double nu_smooth(double s) const { return 0.5 * (nu1 + nu2) + 0.5 * (nu1 - nu2) * soft_clamp(s); }
    double nu_smooth_prime(double s) const { return 0.5 * (nu1 - nu2) * soft_clamp_prime(s); }

private:
    static double soft_clamp(double s) {
        const double w = kSmoothWidth, a = std::abs(s);
        if (a <= 1.0 - w) return s;
        if (a >= 1.0 + w) return s > 0 ? 1.0 : -1.0;
        const double t = (a - 1.0 + w) / (2.0 * w);
        const double v = 1.0 - w + 2.0 * w * t - w * t * t;
        return s > 0 ? v : -v;
    }
    static double soft_clamp_prime(double s) {
        const double w = kSmoothWidth, a = std::abs(s);
        if (a <= 1.0 - w) return 1.0;
        if (a >= 1.0 + w) return 0.0;
        return 1.0 - (a - 1.0 + w) / (2.0 * w);
    }
};

struct DarcyOutput {
    Field p;            // mean-zero pressure
    Field u1, u2;       // velocity components on the collocation grid
    double div_residual = 0.0;       // ||div u|| / max(||rhs||, eps)
    double vorticity_residual = 0.0; // l2 residual of the curl identity
};

/// l2 residual of nu(phi) curl u + nu'(phi) grad(phi).u_perp
///               = grad(mu).(grad phi)_perp,  u_perp = (u2, -u1).
inline double vorticity_residual(const SpectralWorkspace& ws, const Field& phi, const Field& mu,
                                 const Field& u1, const Field& u2, const ViscositySpec& visc) {
    const auto [px, py] = gradient(ws, phi);
    const auto [mx, my] = gradient(ws, mu);
    Field curl = curl2d(ws, u1, u2);
    Field r(phi.grid());
    for (size_t i = 0; i < static_cast<size_t>(r.size()); ++i) {
        const double s = phi[i];
        r[i] = visc.nu_smooth(s) * curl[i] + visc.nu_smooth_prime(s) * (px[i] * u2[i] - py[i] * u1[i]) -
               (mx[i] * py[i] - my[i] * px[i]);
    }
    return l2_norm(r);
}

/// Solves the Darcy law for (p, u) given (phi, mu): the pressure is the
/// weak solution of -div((1/nu) grad p) = -div(mu grad(phi)/nu) and the
/// velocity u = (mu grad(phi) - grad p)/nu satisfies the law pointwise by
/// construction. div u equals the pressure-solve residual and is reported,
/// not projected away.
inline DarcyOutput solve_darcy(const SpectralWorkspace& ws, const Field& phi, const Field& mu,
                               const ViscositySpec& visc, const PcgConfig& cfg,
                               const Field* pressure_guess = nullptr) {
    visc.validate();
    if (!phi.all_finite() || !mu.all_finite())
        throw InvalidParams("solve_darcy: fields must be finite");
    const Grid& g = ws.grid();
    const size_t n = static_cast<size_t>(g.size());

    Field inv_nu(g);
    for (size_t i = 0; i < n; ++i) inv_nu[i] = 1.0 / visc.nu(phi[i]);

    auto [fx, fy] = gradient(ws, phi); // becomes the Korteweg flux below
    for (size_t i = 0; i < n; ++i) {
        fx[i] *= mu[i];
        fy[i] *= mu[i];
    }

    Field vx = fx, vy = fy;
    for (size_t i = 0; i < n; ++i) {
        vx[i] *= inv_nu[i];
        vy[i] *= inv_nu[i];
    }
    Field rhs = divergence(ws, vx, vy);
    rhs *= -1.0;

    DarcyOutput out;
    out.p = solve_variable_neumann(ws, inv_nu, rhs, cfg, pressure_guess);

    auto [gpx, gpy] = gradient(ws, out.p);
    out.u1 = Field(g);
    out.u2 = Field(g);
    for (size_t i = 0; i < n; ++i) {
        out.u1[i] = (fx[i] - gpx[i]) * inv_nu[i];
        out.u2[i] = (fy[i] - gpy[i]) * inv_nu[i];
    }

    const double rhs_norm = l2_norm(rhs);
    out.div_residual = l2_norm(divergence(ws, out.u1, out.u2)) / std::max(rhs_norm, 1e-300);
    out.vorticity_residual = vorticity_residual(ws, phi, mu, out.u1, out.u2, visc);
    return out;
}

/// Residual of the Korteweg identity
///   mu grad(phi) = grad(|grad phi|^2/2 + Psi(phi)) - div(grad phi x grad phi)
/// with mu := -Lap(phi) + Psi'(phi). Vanishes under refinement for smooth
/// resolved fields.
inline double korteweg_consistency(const SpectralWorkspace& ws, const Field& phi, const Potential& pot) {
    if (pot.singular() && !(linf_norm(phi) < 1.0))
        throw OutOfRange("korteweg_consistency: ||phi||_inf must be < 1");
    const Grid& g = ws.grid();
    const size_t n = static_cast<size_t>(g.size());

    Field mu = neg_laplacian(ws, phi);
    for (size_t i = 0; i < n; ++i) mu[i] += pot.psi(phi[i], 1);

    const auto [px, py] = gradient(ws, phi);

    Field energy_density(g);
    for (size_t i = 0; i < n; ++i)
        energy_density[i] = 0.5 * (px[i] * px[i] + py[i] * py[i]) + pot.psi(phi[i], 0);
    const auto [ex, ey] = gradient(ws, energy_density);

    // div of the rank-one tensor grad(phi) x grad(phi); T11, T22 are even
    // in both axes, T12 is odd in both.
    Field t11(g), t12(g), t22(g);
    for (size_t i = 0; i < n; ++i) {
        t11[i] = px[i] * px[i];
        t12[i] = px[i] * py[i];
        t22[i] = py[i] * py[i];
    }
    auto ca = ws.scratch(), cb = ws.scratch(), cc = ws.scratch();
    Field div_x(g), div_y(g);
    ws.analyze(Parity::cos, Parity::cos, t11.data(), ca.data());
    ws.dx_cos_to_sin(ca.data(), cb.data());
    ws.analyze(Parity::sin, Parity::sin, t12.data(), ca.data());
    ws.dy_sin_to_cos(ca.data(), cc.data());
    for (size_t i = 0; i < n; ++i) cb[i] += cc[i];
    ws.synthesize(Parity::sin, Parity::cos, cb.data(), div_x.data());

    ws.analyze(Parity::sin, Parity::sin, t12.data(), ca.data());
    ws.dx_sin_to_cos(ca.data(), cb.data());
    ws.analyze(Parity::cos, Parity::cos, t22.data(), ca.data());
    ws.dy_cos_to_sin(ca.data(), cc.data());
    for (size_t i = 0; i < n; ++i) cb[i] += cc[i];
    ws.synthesize(Parity::cos, Parity::sin, cb.data(), div_y.data());

    Field rx(g), ry(g);
    for (size_t i = 0; i < n; ++i) {
        rx[i] = mu[i] * px[i] - ex[i] + div_x[i];
        ry[i] = mu[i] * py[i] - ey[i] + div_y[i];
    }
    const double a = l2_norm(rx), b = l2_norm(ry);
    return std::sqrt(a * a + b * b);
}

} // namespace hdch

#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "hdch/grid.hpp"

namespace hdch {

/// Basis parity of a field along one axis. Scalar unknowns (phi, mu, p)
/// are even (cosine); normal derivatives and velocity components are odd
/// (sine) along the corresponding axis, which encodes u.n = 0 and
/// homogeneous Neumann conditions exactly.
enum class Parity { cos, sin };

namespace detail {
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}
struct FftwDeleter {
    void operator()(double* p) const { fftw_free(p); }
};
using FftwBuf = std::unique_ptr<double[], FftwDeleter>;
inline FftwBuf fftw_buffer(size_t n) { return FftwBuf(fftw_alloc_real(n)); }
} // namespace detail

/// Transform plans and the Neumann-Laplacian eigenvalue table for one grid.
///
/// Coefficient layout: arrays of size nx*ny indexed [l*nx + k]. Along a
/// cosine axis, index k holds frequency k (basis cos(pi k x/lx)); along a
/// sine axis, index k holds frequency k+1 (basis sin(pi (k+1) x/lx)).
///
/// One workspace per thread; transforms reuse internal scratch buffers.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const Grid& g)
        : grid_(g),
          n_(static_cast<size_t>(g.size())),
          ta_(detail::fftw_buffer(n_)),
          tb_(detail::fftw_buffer(n_)),
          lambda_(n_) {
        const int nx = g.nx, ny = g.ny;
        for (int l = 0; l < ny; ++l)
            for (int k = 0; k < nx; ++k) {
                const double kx = M_PI * k / g.lx;
                const double ky = M_PI * l / g.ly;
                lambda_[static_cast<size_t>(l) * nx + k] = kx * kx + ky * ky;
            }
        // FFTW plan creation is not thread-safe; execution on private
        // buffers is.
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        auto plan_x = [&](fftw_r2r_kind kind) {
            int n[1] = {nx};
            return fftw_plan_many_r2r(1, n, ny, ta_.get(), nullptr, 1, nx, tb_.get(), nullptr, 1, nx,
                                      &kind, FFTW_ESTIMATE);
        };
        auto plan_y = [&](fftw_r2r_kind kind) {
            int n[1] = {ny};
            return fftw_plan_many_r2r(1, n, nx, tb_.get(), nullptr, nx, 1, ta_.get(), nullptr, nx, 1,
                                      &kind, FFTW_ESTIMATE);
        };
        x_fwd_cos_ = plan_x(FFTW_REDFT10);
        x_fwd_sin_ = plan_x(FFTW_RODFT10);
        x_inv_cos_ = plan_x(FFTW_REDFT01);
        x_inv_sin_ = plan_x(FFTW_RODFT01);
        y_fwd_cos_ = plan_y(FFTW_REDFT10);
        y_fwd_sin_ = plan_y(FFTW_RODFT10);
        y_inv_cos_ = plan_y(FFTW_REDFT01);
        y_inv_sin_ = plan_y(FFTW_RODFT01);
    }

    ~SpectralWorkspace() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        for (fftw_plan p : {x_fwd_cos_, x_fwd_sin_, x_inv_cos_, x_inv_sin_, y_fwd_cos_, y_fwd_sin_,
                            y_inv_cos_, y_inv_sin_})
            fftw_destroy_plan(p);
    }

    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const Grid& grid() const { return grid_; }
    const std::vector<double>& eigenvalues() const { return lambda_; }

    /// Smallest nonzero Neumann eigenvalue (Poincare constant is its
    /// inverse square root).
    double lambda_min() const {
        const double lx = M_PI / grid_.lx, ly = M_PI / grid_.ly;
        return std::min(lx * lx, ly * ly);
    }

    /// values -> normalized coefficients (layout documented above)
    void analyze(Parity px, Parity py, const double* v, double* c) const {
        std::copy(v, v + n_, ta_.get());
        fftw_execute(px == Parity::cos ? x_fwd_cos_ : x_fwd_sin_);
        fftw_execute(py == Parity::cos ? y_fwd_cos_ : y_fwd_sin_);
        const double s = 1.0 / (static_cast<double>(grid_.nx) * grid_.ny);
        for (size_t i = 0; i < n_; ++i) c[i] = ta_[i] * s;
        const int ix = px == Parity::cos ? 0 : grid_.nx - 1;
        const int iy = py == Parity::cos ? 0 : grid_.ny - 1;
        for (int l = 0; l < grid_.ny; ++l) c[static_cast<size_t>(l) * grid_.nx + ix] *= 0.5;
        for (int k = 0; k < grid_.nx; ++k) c[static_cast<size_t>(iy) * grid_.nx + k] *= 0.5;
    }

    /// normalized coefficients -> values
    void synthesize(Parity px, Parity py, const double* c, double* v) const {
        std::copy(c, c + n_, ta_.get());
        const int ix = px == Parity::cos ? 0 : grid_.nx - 1;
        const int iy = py == Parity::cos ? 0 : grid_.ny - 1;
        for (size_t i = 0; i < n_; ++i) ta_[i] *= 0.25;
        for (int l = 0; l < grid_.ny; ++l) ta_[static_cast<size_t>(l) * grid_.nx + ix] *= 2.0;
        for (int k = 0; k < grid_.nx; ++k) ta_[static_cast<size_t>(iy) * grid_.nx + k] *= 2.0;
        fftw_execute(px == Parity::cos ? x_inv_cos_ : x_inv_sin_);
        fftw_execute(py == Parity::cos ? y_inv_cos_ : y_inv_sin_);
        std::copy(ta_.get(), ta_.get() + n_, v);
    }

    // --- coefficient-space derivatives --------------------------------
    // d/dx: cos(pi m x/lx) -> -(pi m/lx) sin(pi m x/lx), and
    //       sin(pi m x/lx) -> +(pi m/lx) cos(pi m x/lx).
    // The sine frequency m = nx has zero cosine image at cell centers and
    // is dropped.

    void dx_cos_to_sin(const double* c, double* out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        for (int l = 0; l < ny; ++l) {
            const double* ci = c + static_cast<size_t>(l) * nx;
            double* oi = out + static_cast<size_t>(l) * nx;
            for (int m = 1; m < nx; ++m) oi[m - 1] = -(M_PI * m / grid_.lx) * ci[m];
            oi[nx - 1] = 0.0;
        }
    }
    void dx_sin_to_cos(const double* c, double* out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        for (int l = 0; l < ny; ++l) {
            const double* ci = c + static_cast<size_t>(l) * nx;
            double* oi = out + static_cast<size_t>(l) * nx;
            oi[0] = 0.0;
            for (int m = 1; m < nx; ++m) oi[m] = (M_PI * m / grid_.lx) * ci[m - 1];
        }
    }
    void dy_cos_to_sin(const double* c, double* out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        for (int m = 1; m < ny; ++m) {
            const double f = -(M_PI * m / grid_.ly);
            for (int k = 0; k < nx; ++k)
                out[static_cast<size_t>(m - 1) * nx + k] = f * c[static_cast<size_t>(m) * nx + k];
        }
        for (int k = 0; k < nx; ++k) out[static_cast<size_t>(ny - 1) * nx + k] = 0.0;
    }
    void dy_sin_to_cos(const double* c, double* out) const {
        const int nx = grid_.nx, ny = grid_.ny;
        for (int k = 0; k < nx; ++k) out[k] = 0.0;
        for (int m = 1; m < ny; ++m) {
            const double f = M_PI * m / grid_.ly;
            for (int k = 0; k < nx; ++k)
                out[static_cast<size_t>(m) * nx + k] = f * c[static_cast<size_t>(m - 1) * nx + k];
        }
    }

    std::vector<double> scratch() const { return std::vector<double>(n_); }

private:
    Grid grid_;
    size_t n_;
    detail::FftwBuf ta_, tb_;
    std::vector<double> lambda_;
    fftw_plan x_fwd_cos_, x_fwd_sin_, x_inv_cos_, x_inv_sin_;
    fftw_plan y_fwd_cos_, y_fwd_sin_, y_inv_cos_, y_inv_sin_;
};

// --- basic quadrature and norms --------------------------------------

/// Exact cell average (midpoint rule), compensated summation.
inline double mean(const Field& f) {
    double sum = 0.0, comp = 0.0;
    for (int k = 0; k < f.size(); ++k) {
        const double y = f[static_cast<size_t>(k)] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum / f.size();
}

/// L2(Omega) inner product under midpoint quadrature.
inline double inner(const Field& f, const Field& g) {
    double sum = 0.0, comp = 0.0;
    for (int k = 0; k < f.size(); ++k) {
        const double y = f[static_cast<size_t>(k)] * g[static_cast<size_t>(k)] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum * f.grid().cell_area();
}

inline double l2_norm(const Field& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline double lp_norm(const Field& f, double p) {
    if (p <= 0) throw InvalidParams("lp_norm: p must be positive");
    double sum = 0.0;
    for (int k = 0; k < f.size(); ++k) sum += std::pow(std::abs(f[static_cast<size_t>(k)]), p);
    return std::pow(sum * f.grid().cell_area(), 1.0 / p);
}

inline double linf_norm(const Field& f) {
    double m = 0.0;
    for (int k = 0; k < f.size(); ++k) m = std::max(m, std::abs(f[static_cast<size_t>(k)]));
    return m;
}

inline Field zero_mean(const Field& f) {
    Field out = f;
    out += -mean(f);
    return out;
}

namespace detail {
inline void require_mean_zero(const Field& f, const char* who) {
    const double m = std::abs(mean(f)) * f.grid().area(); // integral, not average
    const double scale = l2_norm(f);
    if (m > 1e-10 * std::max(scale, 1e-300))
        throw NonZeroMean(std::string(who) + ": input must have zero mean");
}
/// Parseval weight of coefficient (k,l): integral of the squared basis
/// function over Omega.
inline double coeff_weight(const Grid& g, int k, int l) {
    return g.area() * (k == 0 ? 1.0 : 0.5) * (l == 0 ? 1.0 : 0.5);
}
} // namespace detail

// --- differential operators ------------------------------------------

/// Applies A = -Laplace with homogeneous Neumann conditions (spectral,
/// exact on the cosine basis). Output has zero mean.
inline Field neg_laplacian(const SpectralWorkspace& ws, const Field& f) {
    Field out(f.grid());
    auto c = ws.scratch();
    ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
    const auto& lam = ws.eigenvalues();
    for (size_t i = 0; i < c.size(); ++i) c[i] *= lam[i];
    ws.synthesize(Parity::cos, Parity::cos, c.data(), out.data());
    return out;
}

/// Applies A^{-1} on mean-zero data; result has zero mean.
inline Field inv_neg_laplacian(const SpectralWorkspace& ws, const Field& f) {
    detail::require_mean_zero(f, "inv_neg_laplacian");
    Field out(f.grid());
    auto c = ws.scratch();
    ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
    const auto& lam = ws.eigenvalues();
    c[0] = 0.0;
    for (size_t i = 1; i < c.size(); ++i) c[i] /= lam[i];
    ws.synthesize(Parity::cos, Parity::cos, c.data(), out.data());
    return out;
}

/// Spectral gradient of a cosine-expanded field. Components come back on
/// the same collocation grid; gx is odd in x, gy odd in y.
inline std::pair<Field, Field> gradient(const SpectralWorkspace& ws, const Field& f) {
    Field gx(f.grid()), gy(f.grid());
    auto c = ws.scratch(), d = ws.scratch();
    ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
    ws.dx_cos_to_sin(c.data(), d.data());
    ws.synthesize(Parity::sin, Parity::cos, d.data(), gx.data());
    ws.dy_cos_to_sin(c.data(), d.data());
    ws.synthesize(Parity::cos, Parity::sin, d.data(), gy.data());
    return {std::move(gx), std::move(gy)};
}

/// Divergence of a vector field whose components follow the velocity
/// parity (vx odd in x, vy odd in y). Output mean is exactly zero.
inline Field divergence(const SpectralWorkspace& ws, const Field& vx, const Field& vy) {
    Field out(vx.grid());
    auto a = ws.scratch(), b = ws.scratch(), c = ws.scratch();
    ws.analyze(Parity::sin, Parity::cos, vx.data(), a.data());
    ws.dx_sin_to_cos(a.data(), c.data());
    ws.analyze(Parity::cos, Parity::sin, vy.data(), a.data());
    ws.dy_sin_to_cos(a.data(), b.data());
    for (size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    ws.synthesize(Parity::cos, Parity::cos, c.data(), out.data());
    return out;
}

/// curl u = d(u2)/dx - d(u1)/dy for velocity-parity components.
inline Field curl2d(const SpectralWorkspace& ws, const Field& vx, const Field& vy) {
    Field out(vx.grid());
    auto a = ws.scratch(), b = ws.scratch(), c = ws.scratch();
    ws.analyze(Parity::cos, Parity::sin, vy.data(), a.data());
    ws.dx_cos_to_sin(a.data(), c.data());
    ws.analyze(Parity::sin, Parity::cos, vx.data(), a.data());
    ws.dy_cos_to_sin(a.data(), b.data());
    for (size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    ws.synthesize(Parity::sin, Parity::sin, c.data(), out.data());
    return out;
}

// --- norms built on the spectrum ---------------------------------------

inline double h1_seminorm(const SpectralWorkspace& ws, const Field& f) {
    auto c = ws.scratch();
    ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
    const auto& lam = ws.eigenvalues();
    const Grid& g = ws.grid();
    double sum = 0.0;
    for (int l = 0; l < g.ny; ++l)
        for (int k = 0; k < g.nx; ++k) {
            const size_t i = static_cast<size_t>(l) * g.nx + k;
            sum += lam[i] * detail::coeff_weight(g, k, l) * c[i] * c[i];
        }
    return std::sqrt(sum);
}

/// || f ||_{V0'} = || grad A^{-1} f ||, defined for mean-zero f.
inline double v0_dual_norm(const SpectralWorkspace& ws, const Field& f) {
    detail::require_mean_zero(f, "v0_dual_norm");
    auto c = ws.scratch();
    ws.analyze(Parity::cos, Parity::cos, f.data(), c.data());
    const auto& lam = ws.eigenvalues();
    const Grid& g = ws.grid();
    double sum = 0.0;
    for (int l = 0; l < g.ny; ++l)
        for (int k = 0; k < g.nx; ++k) {
            if (k == 0 && l == 0) continue;
            const size_t i = static_cast<size_t>(l) * g.nx + k;
            sum += detail::coeff_weight(g, k, l) * c[i] * c[i] / lam[i];
        }
    return std::sqrt(sum);
}

struct Norms {
    double l2;
    double linf;
    double h1_semi;
    double v0_dual; // NaN when the input is not mean-zero
};

inline Norms norms(const SpectralWorkspace& ws, const Field& f) {
    Norms n{l2_norm(f), linf_norm(f), h1_seminorm(ws, f), std::nan("")};
    if (std::abs(mean(f)) * f.grid().area() <= 1e-10 * std::max(n.l2, 1e-300))
        n.v0_dual = v0_dual_norm(ws, f);
    return n;
}

} // namespace hdch

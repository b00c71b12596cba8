#pragma once

#include <array>
#include <cmath>
#include <optional>

#include "hdch/errors.hpp"

namespace hdch {

enum class PotentialMode { log, eps, polynomial };

/// Parameters of the logarithmic Helmholtz potential
///   Psi(s) = (theta/2)[(1+s)ln(1+s) + (1-s)ln(1-s)] - (theta0/2) s^2
/// and of its fourth-order Taylor regularization F_eps. The polynomial
/// mode swaps in Psi0(s) = (s^2-1)^2 (convex part s^4+1, theta0 -> 4).
struct PotentialSpec {
    double theta = 1.0;
    double theta0 = 2.0;
    std::optional<double> epsilon; // selects the regularized family

    void validate() const {
        if (!(theta > 0.0 && theta < theta0))
            throw InvalidParams("PotentialSpec: requires 0 < theta < theta0");
        if (epsilon && !(*epsilon > 0.0 && *epsilon < 1.0))
            throw InvalidParams("PotentialSpec: epsilon must lie in (0,1)");
    }
};

/// Convex part F of the logarithmic potential and its derivatives.
///   F(s)   = (theta/2)[(1+s)ln(1+s)+(1-s)ln(1-s)],  F(0)=F'(0)=0
///   F'(s)  = (theta/2) ln((1+s)/(1-s))
///   F''(s) = theta/(1-s^2)
///   F'''(s)= 2 theta s/(1-s^2)^2
///   F''''(s)= theta (2+6 s^2)/(1-s^2)^3
inline double f_log(const PotentialSpec& spec, double s, int order) {
    spec.validate();
    if (order < 0 || order > 4) throw InvalidParams("f_log: order must be 0..4");
    if (!(std::abs(s) < 1.0)) throw OutOfRange("f_log: |s| must be < 1");
    const double th = spec.theta;
    const double omss = (1.0 - s) * (1.0 + s); // 1 - s^2
    switch (order) {
        case 0: return 0.5 * th * ((1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s));
        case 1: return 0.5 * th * (std::log1p(s) - std::log1p(-s));
        case 2: return th / omss;
        case 3: return 2.0 * th * s / (omss * omss);
        default: return th * (2.0 + 6.0 * s * s) / (omss * omss * omss);
    }
}

namespace detail {
/// Evaluates the quartic Taylor extension of F about the knot a.
inline double taylor4(const PotentialSpec& spec, double a, double s, int order) {
    std::array<double, 5> d{};
    for (int j = 0; j <= 4; ++j) d[static_cast<size_t>(j)] = f_log(spec, a, j);
    const double x = s - a;
    switch (order) {
        case 0: return d[0] + x * (d[1] + x * (d[2] / 2 + x * (d[3] / 6 + x * d[4] / 24)));
        case 1: return d[1] + x * (d[2] + x * (d[3] / 2 + x * d[4] / 6));
        case 2: return d[2] + x * (d[3] + x * d[4] / 2);
        case 3: return d[3] + x * d[4];
        default: return d[4];
    }
}
} // namespace detail

/// Regularized convex part: equals F on [-1+eps, 1-eps], continues as the
/// fourth-order Taylor polynomial beyond, and is defined on all of R with
/// F_eps'' >= theta. Uniform convexity is verified numerically at first
/// use (the existence threshold eps* is never computed in closed form).
inline double f_eps(const PotentialSpec& spec, double s, int order) {
    spec.validate();
    if (!spec.epsilon) throw MissingEpsilon("f_eps: spec.epsilon is not set");
    if (order < 0 || order > 4) throw InvalidParams("f_eps: order must be 0..4");
    const double knot = 1.0 - *spec.epsilon;
    if (s > knot) return detail::taylor4(spec, knot, s, order);
    if (s < -knot) return detail::taylor4(spec, -knot, s, order);
    return f_log(spec, s, order);
}

/// Verifies inf F_eps'' > 0 by dense sampling; construction-time guard
/// mirroring the positivity the regularization must provide.
inline void check_eps_convexity(const PotentialSpec& spec) {
    double lo = 1e300;
    for (int i = 0; i <= 3000; ++i) {
        const double s = -3.0 + 6.0 * i / 3000.0;
        lo = std::min(lo, f_eps(spec, s, 2));
    }
    if (!(lo > 0.0)) throw InvalidParams("f_eps: regularized potential is not uniformly convex");
}

inline double psi(const PotentialSpec& spec, double s, int order) {
    const double f = f_log(spec, s, order);
    switch (order) {
        case 0: return f - 0.5 * spec.theta0 * s * s;
        case 1: return f - spec.theta0 * s;
        case 2: return f - spec.theta0;
        default: return f;
    }
}

inline double psi_eps(const PotentialSpec& spec, double s, int order) {
    const double f = f_eps(spec, s, order);
    switch (order) {
        case 0: return f - 0.5 * spec.theta0 * s * s;
        case 1: return f - spec.theta0 * s;
        case 2: return f - spec.theta0;
        default: return f;
    }
}

// --- polynomial (regular) potential ------------------------------------
// Psi0(s) = (s^2-1)^2 = F0(s) - 2 s^2 with convex F0(s) = s^4 + 1.

inline double f_poly(double s, int order) {
    switch (order) {
        case 0: return s * s * s * s + 1.0;
        case 1: return 4.0 * s * s * s;
        case 2: return 12.0 * s * s;
        case 3: return 24.0 * s;
        case 4: return 24.0;
        default: throw InvalidParams("f_poly: order must be 0..4");
    }
}

inline double psi_poly(double s, int order) {
    const double f = f_poly(s, order);
    switch (order) {
        case 0: return f - 2.0 * s * s;
        case 1: return f - 4.0 * s;
        case 2: return f - 4.0;
        default: return f;
    }
}

/// Positive minimizer of Psi in (0,1) together with the residual of the
/// defining equation (theta/2) ln((1+b)/(1-b)) = theta0 b.
struct BetaRoot {
    double beta;
    double residual;
};

inline BetaRoot find_beta(const PotentialSpec& spec) {
    if (!(spec.theta < spec.theta0)) throw NoRoot("find_beta: requires theta < theta0");
    spec.validate();
    auto eq = [&](double b) { return psi(spec, b, 1); }; // Psi'(b) = F'(b) - theta0 b
    // Psi' < 0 just right of 0 (Psi''(0) = theta - theta0 < 0) and -> +inf
    // at 1^-: bisection is safe, two Newton steps polish the tail.
    double lo = 1e-12, hi = 1.0 - 1e-12;
    if (!(eq(lo) < 0.0) || !(eq(hi) > 0.0)) throw NoRoot("find_beta: no sign change");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eq(mid) < 0.0 ? lo : hi) = mid;
    }
    double b = 0.5 * (lo + hi);
    for (int it = 0; it < 2; ++it) b -= eq(b) / psi(spec, b, 2);
    if (!(b > 0.0 && b < 1.0) || !(std::abs(eq(b)) <= 1e-12))
        throw NoRoot("find_beta: polishing failed");
    return {b, std::abs(eq(b))};
}

// --- unified view used by the solvers -----------------------------------

/// Potential as the stepper and elliptic solvers see it: a convex part f
/// with derivatives, the concave quadratic coefficient, and whether the
/// convex part is singular at +-1 (needs clamping).
class Potential {
public:
    static Potential logarithmic(double theta, double theta0) {
        Potential p;
        p.mode_ = PotentialMode::log;
        p.spec_ = {theta, theta0, std::nullopt};
        p.spec_.validate();
        return p;
    }
    static Potential regularized(double theta, double theta0, double epsilon) {
        Potential p;
        p.mode_ = PotentialMode::eps;
        p.spec_ = {theta, theta0, epsilon};
        p.spec_.validate();
        check_eps_convexity(p.spec_);
        return p;
    }
    static Potential polynomial() {
        Potential p;
        p.mode_ = PotentialMode::polynomial;
        return p;
    }

    PotentialMode mode() const { return mode_; }
    const PotentialSpec& spec() const { return spec_; }
    bool singular() const { return mode_ == PotentialMode::log; }

    /// Coefficient of the concave -(theta0/2) s^2 part.
    double theta0() const { return mode_ == PotentialMode::polynomial ? 4.0 : spec_.theta0; }
    /// Global convexity floor of f'' (0 for the quartic).
    double convexity_floor() const { return mode_ == PotentialMode::polynomial ? 0.0 : spec_.theta; }

    double f(double s, int order) const {
        switch (mode_) {
            case PotentialMode::log: return f_log(spec_, s, order);
            case PotentialMode::eps: return f_eps(spec_, s, order);
            default: return f_poly(s, order);
        }
    }
    double psi(double s, int order) const {
        switch (mode_) {
            case PotentialMode::log: return hdch::psi(spec_, s, order);
            case PotentialMode::eps: return psi_eps(spec_, s, order);
            default: return psi_poly(s, order);
        }
    }

    /// Positive minimizer of Psi (beta for the logarithmic family, 1 for
    /// the quartic) and the value there.
    double minimizer() const {
        if (mode_ == PotentialMode::polynomial) return 1.0;
        return find_beta(spec_).beta;
    }
    double psi_at_minimizer() const {
        if (mode_ == PotentialMode::polynomial) return 0.0;
        return hdch::psi(spec_, find_beta(spec_).beta, 0);
    }

private:
    PotentialMode mode_ = PotentialMode::log;
    PotentialSpec spec_{};
};

} // namespace hdch

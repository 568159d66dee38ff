#pragma once

// Stopping threshold and increment taming.
//
//   phi(h)    = gamma1 * exp(gamma2 * |ln h|^gamma3)
//   tame_h(x) = x / (1 + |x|^delta * h^-theta)
//
// together with the first and second derivatives of tame_h and the norm
// bounds they satisfy.

#include "tamed/core.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace tamed {

struct SchemeParams {
    double delta = 5.0;
    double theta = 0.25;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double gamma3 = 0.5;

    void validate() const {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!positive(delta)) throw ConfigError("delta must be positive");
        if (!positive(theta)) throw ConfigError("theta must be positive");
        if (!positive(gamma1)) throw ConfigError("gamma1 must be positive");
        if (!positive(gamma2)) throw ConfigError("gamma2 must be positive");
        if (!(gamma3 > 0.0 && gamma3 < 1.0)) throw ConfigError("gamma3 must lie in (0,1)");
    }

    /// delta - 2 theta, the quantity the per-scheme order constraints bound.
    double excess() const { return delta - 2.0 * theta; }
};

/// Throws unless `p` is valid and satisfies the order constraint of `scheme`:
/// Euler needs delta - 2 theta > 1, Milstein >= 3, order 1.5 >= 4.
inline void check_scheme_constraint(const SchemeParams& p, Scheme scheme) {
    p.validate();
    const double e = p.excess();
    switch (scheme) {
    case Scheme::Euler:
        if (!(e > 1.0)) throw ConfigError("euler requires delta - 2*theta > 1");
        break;
    case Scheme::Milstein:
        if (!(e >= 3.0)) throw ConfigError("milstein requires delta - 2*theta >= 3");
        break;
    case Scheme::Order15:
        if (!(e >= 4.0)) throw ConfigError("order15 requires delta - 2*theta >= 4");
        break;
    }
}

inline double phi_threshold(double h, const SchemeParams& p) {
    if (!(std::isfinite(h) && h > 0.0)) throw DomainError("phi_threshold: step size must be positive and finite");
    return p.gamma1 * std::exp(p.gamma2 * std::pow(std::abs(std::log(h)), p.gamma3));
}

/// Upper bound on |tame(x)|: h^(theta/delta).
inline double tame_bound(double h, const SchemeParams& p) { return std::pow(h, p.theta / p.delta); }

namespace detail {

// Below this norm the x = 0 branches of the derivative formulas are used.
inline constexpr double kZeroRadius = 1e-300;
// exp() overflows past ~709.78.
inline constexpr double kLogOverflow = 700.0;

// Scalar pieces of the taming map at radius r, with q = r^delta h^-theta:
//   s    = 1/(1+q)
//   qs2  = q/(1+q)^2
//   q2s3 = q^2/(1+q)^3
// When q overflows, all three collapse to 1/q (relative error ~ 1/q).
struct TameFactors {
    double q;
    double s;
    double qs2;
    double q2s3;
};

inline TameFactors tame_factors(double r, double h, const SchemeParams& p) {
    const double log_q = p.delta * std::log(r) - p.theta * std::log(h);
    if (log_q > kLogOverflow) {
        const double inv = std::exp(-log_q);
        return {std::numeric_limits<double>::infinity(), inv, inv, inv};
    }
    const double q = std::pow(r, p.delta) * std::pow(h, -p.theta);
    const double s = 1.0 / (1.0 + q);
    const double qs = q * s;
    return {q, s, qs * s, qs * qs * s};
}

} // namespace detail

inline Vector tame(const Vector& x, double h, const SchemeParams& p) {
    if (!x.allFinite()) throw DomainError("tame: non-finite input");
    const double r = norm(x);
    if (r < detail::kZeroRadius) return x;
    return x * detail::tame_factors(r, h, p).s;
}

/// tame'(x) u
inline Vector tame_jacobian_apply(const Vector& x, const Vector& u, double h, const SchemeParams& p) {
    const double r = norm(x);
    if (r < detail::kZeroRadius) return u;
    const auto t = detail::tame_factors(r, h, p);
    const Vector e = x / r;
    return t.s * u - (p.delta * t.qs2 * e.dot(u)) * e;
}

/// tame''(x)(u, u)
inline Vector tame_hessian_apply(const Vector& x, const Vector& u, double h, const SchemeParams& p) {
    const double r = norm(x);
    if (r < detail::kZeroRadius) return Vector::Zero(x.size());
    const auto t = detail::tame_factors(r, h, p);
    const double d = p.delta;
    const Vector e = x / r;
    const double eu = e.dot(u);
    // Written in terms of e = x/|x| so the |x|^(delta-4) factors never appear
    // on their own.
    const double radial = d * (2.0 * d * t.q2s3 - (d - 2.0) * t.qs2) / r;
    const double mixed = d * t.qs2 / r;
    return (radial * eu * eu - mixed * u.squaredNorm()) * e - (2.0 * mixed * eu) * u;
}

// Norm bounds on the taming derivatives, as functions of |x|.

/// ||tame'(x)|| <= delta |x|^delta h^-theta + 1
inline double jacobian_norm_bound(double r, double h, const SchemeParams& p) {
    return p.delta * std::pow(r, p.delta) * std::pow(h, -p.theta) + 1.0;
}

/// ||tame'(x) - I|| <= (delta + 1) |x|^delta h^-theta
inline double jacobian_deviation_bound(double r, double h, const SchemeParams& p) {
    return (p.delta + 1.0) * std::pow(r, p.delta) * std::pow(h, -p.theta);
}

/// sup_{|u|<=1} |tame''(x)(u,u)| <= 2 delta^2 |x|^(2 delta - 1) h^(-2 theta) + (delta^2 + 5 delta) |x|^(delta-1) h^-theta
inline double hessian_norm_bound(double r, double h, const SchemeParams& p) {
    const double d = p.delta;
    return 2.0 * d * d * std::pow(r, 2.0 * d - 1.0) * std::pow(h, -2.0 * p.theta)
         + (d * d + 5.0 * d) * std::pow(r, d - 1.0) * std::pow(h, -p.theta);
}

} // namespace tamed

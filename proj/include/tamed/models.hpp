#pragma once

// SDE model interface
//
//   dX = f(X) dt + g(X) dW,   f : R^d -> R^d,  g : R^d -> R^{d x m}
//
// plus the derivative operators the higher-order schemes consume. With g_j the
// j-th column of g,
//
//   L^j Lambda   = D Lambda . g_j
//   A Lambda     = D Lambda . f + 1/2 sum_j D^2 Lambda (g_j, g_j)
//
// and the callbacks are
//
//   lg_g(j2, j1, x)     = L^{j2} g_{j1}(x)
//   lg_f(j, x)          = L^j f(x)
//   af(x)               = A f(x)
//   ag(j, x)            = A g_j(x)
//   llg(j2, j1, j, x)   = L^{j2} L^{j1} g_j(x)

#include "tamed/core.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tamed {

enum class NoiseStructure {
    Additive,    // g constant
    Scalar,      // m == 1
    Commutative, // L^{j2} g_{j1} == L^{j1} g_{j2}
    NoLevyArea,  // L^{j2} g_{j1} == 0 and L^{j2} L^{j1} g_j == 0
    General,
};

inline const char* noise_structure_name(NoiseStructure s) {
    switch (s) {
    case NoiseStructure::Additive: return "additive";
    case NoiseStructure::Scalar: return "scalar";
    case NoiseStructure::Commutative: return "commutative";
    case NoiseStructure::NoLevyArea: return "no-levy-area";
    case NoiseStructure::General: return "general";
    }
    return "?";
}

struct ModelSpec {
    using Field = std::function<Vector(const Vector&)>;
    using MatrixField = std::function<Matrix(const Vector&)>;
    using IndexedField = std::function<Vector(int, const Vector&)>;
    using PairField = std::function<Vector(int, int, const Vector&)>;
    using TripleField = std::function<Vector(int, int, int, const Vector&)>;

    std::string name;
    int d = 1;
    int m = 1;
    Field drift;
    MatrixField diffusion;
    PairField lg_g;
    IndexedField lg_f;
    Field af;
    IndexedField ag;
    TripleField llg;
    NoiseStructure noise = NoiseStructure::General;
    Vector x0;
    // Box used for randomized derivative checks.
    Vector box_lo;
    Vector box_hi;
};

/// Fills the callbacks implied by the noise structure with exact zeros
/// (Additive: lg_g, ag, llg; NoLevyArea: lg_g, llg) and checks dimensions.
inline void normalize(ModelSpec& model) {
    if (model.d < 1 || model.m < 1) throw ConfigError(model.name + ": dimensions must be positive");
    if (!model.drift || !model.diffusion) throw ConfigError(model.name + ": drift and diffusion are required");
    if (model.x0.size() != model.d) throw ConfigError(model.name + ": initial state has wrong dimension");
    if (model.noise == NoiseStructure::Scalar && model.m != 1)
        throw ConfigError(model.name + ": scalar noise structure requires m == 1");
    const int d = model.d;
    const bool additive = model.noise == NoiseStructure::Additive;
    if (additive || model.noise == NoiseStructure::NoLevyArea) {
        model.lg_g = [d](int, int, const Vector&) -> Vector { return Vector::Zero(d); };
        model.llg = [d](int, int, int, const Vector&) -> Vector { return Vector::Zero(d); };
    }
    if (additive) model.ag = [d](int, const Vector&) -> Vector { return Vector::Zero(d); };
    if (model.box_lo.size() != d) model.box_lo = Vector::Constant(d, -2.0);
    if (model.box_hi.size() != d) model.box_hi = Vector::Constant(d, 2.0);
}

/// Scheme/noise-structure compatibility plus callback availability.
inline void check_scheme_support(const ModelSpec& model, Scheme scheme) {
    using NS = NoiseStructure;
    switch (scheme) {
    case Scheme::Euler: return;
    case Scheme::Milstein:
        if (model.noise == NS::General)
            throw ConfigError("milstein is unsupported for general (non-commutative) noise on model " + model.name);
        if (!model.lg_g) throw ConfigError("milstein requires lg_g on model " + model.name);
        return;
    case Scheme::Order15:
        if (model.noise == NS::General || model.noise == NS::Commutative)
            throw ConfigError(std::string("order15 is unsupported for ") + noise_structure_name(model.noise)
                              + " noise on model " + model.name);
        if (!model.lg_g || !model.lg_f || !model.af || !model.ag || !model.llg)
            throw ConfigError("order15 requires lg_g, lg_f, af, ag and llg on model " + model.name);
        return;
    }
}

// ---------------------------------------------------------------------------
// Finite-difference verification of the derivative callbacks

struct CallbackError {
    std::string callback;
    bool present = false;
    double max_error = 0.0; // max |analytic - fd| / max(1, |fd|)
};

struct DerivativeCheckReport {
    std::vector<CallbackError> callbacks;
    double commutativity_defect = 0.0; // max |lg_g(j2,j1) - lg_g(j1,j2)|
    double tolerance = 0.0;
    long n_states = 0;

    bool passed() const {
        for (const auto& c : callbacks)
            if (c.present && !(c.max_error <= tolerance)) return false;
        return true;
    }
    const CallbackError* find(const std::string& name) const {
        for (const auto& c : callbacks)
            if (c.callback == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline double scaled_error(const Vector& analytic, const Vector& fd) {
    const double diff = (analytic - fd).lpNorm<Eigen::Infinity>();
    if (diff == 0.0) return 0.0;
    return diff / std::max(1.0, fd.lpNorm<Eigen::Infinity>());
}

// Central difference of F along direction u at x.
template <typename F>
Vector directional(const F& fn, const Vector& x, const Vector& u, double eps) {
    return (fn(Vector(x + eps * u)) - fn(Vector(x - eps * u))) / (2.0 * eps);
}

// Second central difference D^2 F(u, u) at x.
template <typename F>
Vector second_directional(const F& fn, const Vector& x, const Vector& u, double eps) {
    return (fn(Vector(x + eps * u)) - 2.0 * fn(x) + fn(Vector(x - eps * u))) / (eps * eps);
}

} // namespace detail

/// Compares every available callback with a finite-difference composition of
/// f and g alone. First derivatives use central differences with step `eps`;
/// second-order terms (the A operator and the nested L L g) use `eps2`.
inline DerivativeCheckReport fd_check_derivatives(const ModelSpec& model, const std::vector<Vector>& states,
                                                  double eps, double tolerance, double eps2 = 1e-4) {
    const int m = model.m;
    auto column = [&](int j) { return [&model, j](const Vector& y) -> Vector { return model.diffusion(y).col(j); }; };

    DerivativeCheckReport rep;
    rep.tolerance = tolerance;
    rep.n_states = static_cast<long>(states.size());
    CallbackError e_lgg{"lg_g", static_cast<bool>(model.lg_g)};
    CallbackError e_lgf{"lg_f", static_cast<bool>(model.lg_f)};
    CallbackError e_af{"af", static_cast<bool>(model.af)};
    CallbackError e_ag{"ag", static_cast<bool>(model.ag)};
    CallbackError e_llg{"llg", static_cast<bool>(model.llg)};

    for (const Vector& x : states) {
        const Vector fx = model.drift(x);
        const Matrix gx = model.diffusion(x);
        for (int j2 = 0; j2 < m; ++j2) {
            const Vector u = gx.col(j2);
            if (model.lg_g) {
                for (int j1 = 0; j1 < m; ++j1) {
                    const Vector fd = detail::directional(column(j1), x, u, eps);
                    e_lgg.max_error = std::max(e_lgg.max_error, detail::scaled_error(model.lg_g(j2, j1, x), fd));
                    rep.commutativity_defect = std::max(
                        rep.commutativity_defect, (model.lg_g(j2, j1, x) - model.lg_g(j1, j2, x)).lpNorm<Eigen::Infinity>());
                }
            }
            if (model.lg_f) {
                const Vector fd = detail::directional(model.drift, x, u, eps);
                e_lgf.max_error = std::max(e_lgf.max_error, detail::scaled_error(model.lg_f(j2, x), fd));
            }
        }
        auto generator = [&](const auto& fn) -> Vector {
            Vector acc = detail::directional(fn, x, fx, eps);
            for (int j = 0; j < m; ++j) acc += 0.5 * detail::second_directional(fn, x, Vector(gx.col(j)), eps2);
            return acc;
        };
        if (model.af) e_af.max_error = std::max(e_af.max_error, detail::scaled_error(model.af(x), generator(model.drift)));
        for (int j = 0; j < m; ++j) {
            if (model.ag)
                e_ag.max_error = std::max(e_ag.max_error, detail::scaled_error(model.ag(j, x), generator(column(j))));
            if (!model.llg) continue;
            for (int j1 = 0; j1 < m; ++j1) {
                // y -> L^{j1} g_j(y), itself by finite differences
                auto inner = [&](const Vector& y) -> Vector {
                    return detail::directional(column(j), y, Vector(model.diffusion(y).col(j1)), eps2);
                };
                for (int j2 = 0; j2 < m; ++j2) {
                    const Vector fd = detail::directional(inner, x, Vector(gx.col(j2)), eps2);
                    e_llg.max_error = std::max(e_llg.max_error, detail::scaled_error(model.llg(j2, j1, j, x), fd));
                }
            }
        }
    }
    rep.callbacks = {e_lgg, e_lgf, e_af, e_ag, e_llg};
    return rep;
}

/// Uniform samples from the model's check box.
template <typename Rng>
std::vector<Vector> sample_box(const ModelSpec& model, int count, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Vector x(model.d);
        for (int k = 0; k < model.d; ++k) x(k) = model.box_lo(k) + unit(rng) * (model.box_hi(k) - model.box_lo(k));
        out.push_back(std::move(x));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lyapunov-type condition  A U0 + 1/2 |g^T grad U0|^2 + U1 <= c + alpha U0

struct LyapunovPair {
    std::function<double(const Vector&)> u0;
    std::function<double(const Vector&)> u1;
    double alpha = 0.0;
    double c = 0.0;
    // Optional exact derivatives of U0; finite differences otherwise.
    std::function<Vector(const Vector&)> grad_u0;
    std::function<Matrix(const Vector&)> hess_u0;
};

struct LyapunovReport {
    double max_violation = -std::numeric_limits<double>::infinity(); // max of LHS - RHS
    long argmax = -1;
    long n_evaluated = 0;
    long n_nonfinite = 0;

    bool holds(double tol = 1e-8) const { return n_evaluated > 0 && max_violation <= tol; }
};

/// LHS - RHS at one state; derivatives of U0 from the pair's callbacks when
/// present, otherwise central differences (gradient step `eps`, second
/// derivatives step `eps2`).
inline double lyapunov_violation(const ModelSpec& model, const LyapunovPair& pair, const Vector& x, double eps,
                                 double eps2) {
    const Vector fx = model.drift(x);
    const Matrix gx = model.diffusion(x);
    const double u0 = pair.u0(x);
    Vector grad(model.d);
    if (pair.grad_u0) {
        grad = pair.grad_u0(x);
    } else {
        for (int i = 0; i < model.d; ++i) {
            Vector xp = x, xm = x;
            xp(i) += eps;
            xm(i) -= eps;
            grad(i) = (pair.u0(xp) - pair.u0(xm)) / (2.0 * eps);
        }
    }
    double generator = grad.dot(fx);
    for (int j = 0; j < model.m; ++j) {
        const Vector gj = gx.col(j);
        if (pair.hess_u0) {
            generator += 0.5 * gj.dot(pair.hess_u0(x) * gj);
        } else {
            const Vector xp = x + eps2 * gj, xm = x - eps2 * gj;
            generator += 0.5 * (pair.u0(xp) - 2.0 * u0 + pair.u0(xm)) / (eps2 * eps2);
        }
    }
    const double lhs = generator + 0.5 * (gx.transpose() * grad).squaredNorm() + pair.u1(x);
    return lhs - (pair.c + pair.alpha * u0);
}

inline LyapunovReport check_lyapunov_condition(const ModelSpec& model, const LyapunovPair& pair,
                                               const std::vector<Vector>& states, double eps = 1e-6,
                                               double eps2 = 1e-4) {
    LyapunovReport rep;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double v = lyapunov_violation(model, pair, states[i], eps, eps2);
        if (!std::isfinite(v)) {
            ++rep.n_nonfinite;
            continue;
        }
        ++rep.n_evaluated;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.argmax = static_cast<long>(i);
        }
    }
    return rep;
}

} // namespace tamed

#pragma once

// Stopped increment-tamed Euler, Milstein and order-1.5 schemes.
//
// Every scheme advances a grid value by
//
//   Y_{k+1} = Y_k + 1{|Y_k| <= phi(h)} tame_h(z_k)
//
// where z_k is the scheme's untamed increment built from (dW, dZ) of step k.
// Once |Y_k| > phi(h) the path is frozen for the rest of the run.

#include "tamed/brownian.hpp"
#include "tamed/models.hpp"
#include "tamed/taming.hpp"

#include <optional>
#include <string>

namespace tamed {

struct StepInputs {
    double h = 0.0;
    Vector dW;
    std::optional<Vector> dZ;
};

namespace detail {

inline void require_finite(const Vector& v, const char* what, const Vector& state) {
    if (!v.allFinite()) throw StepError(std::string("non-finite ") + what, state);
}

inline Vector euler_increment(const Vector& y, const StepInputs& in, const ModelSpec& model) {
    const Vector fy = model.drift(y);
    const Matrix gy = model.diffusion(y);
    if (!fy.allFinite() || !gy.allFinite()) throw StepError("non-finite drift or diffusion", y);
    return fy * in.h + gy * in.dW;
}

// 1/2 sum_{j1,j2} L^{j2} g_{j1} (dW_{j1} dW_{j2} - [j1 == j2] h)
inline Vector milstein_correction(const Vector& y, const StepInputs& in, const ModelSpec& model) {
    using NS = NoiseStructure;
    switch (model.noise) {
    case NS::Additive:
    case NS::NoLevyArea:
        return Vector::Zero(model.d);
    case NS::Scalar:
        return model.lg_g(0, 0, y) * (0.5 * (in.dW(0) * in.dW(0) - in.h));
    case NS::Commutative: {
        Vector out = Vector::Zero(model.d);
        for (int j1 = 0; j1 < model.m; ++j1)
            for (int j2 = 0; j2 < model.m; ++j2) {
                const double iterated = in.dW(j1) * in.dW(j2) - (j1 == j2 ? in.h : 0.0);
                out += model.lg_g(j2, j1, y) * (0.5 * iterated);
            }
        return out;
    }
    case NS::General: break;
    }
    throw ConfigError("milstein is unsupported for general noise");
}

inline Vector milstein_increment(const Vector& y, const StepInputs& in, const ModelSpec& model) {
    Vector z = euler_increment(y, in, model);
    if (model.noise == NoiseStructure::Additive || model.noise == NoiseStructure::NoLevyArea) return z;
    const Vector corr = milstein_correction(y, in, model);
    require_finite(corr, "milstein correction", y);
    return z + corr;
}

inline Vector order15_increment(const Vector& y, const StepInputs& in, const ModelSpec& model) {
    using NS = NoiseStructure;
    if (!in.dZ) throw ConfigError("order15 step requires dZ");
    const Vector& dW = in.dW;
    const Vector& dZ = *in.dZ;
    const double h = in.h;

    Vector z = euler_increment(y, in, model);
    // drift part: sum_j L^j f dZ_j + A f h^2/2
    for (int j = 0; j < model.m; ++j) z += model.lg_f(j, y) * dZ(j);
    z += model.af(y) * (0.5 * h * h);

    switch (model.noise) {
    case NS::Additive:
        break;
    case NS::Scalar: {
        const double w = dW(0);
        const double i11 = 0.5 * (w * w - h);
        const double i111 = w * w * w / 6.0 - 0.5 * h * w;
        z += model.lg_g(0, 0, y) * i11;
        z += model.ag(0, y) * (h * w - dZ(0));
        z += model.llg(0, 0, 0, y) * i111;
        break;
    }
    case NS::NoLevyArea:
        for (int j = 0; j < model.m; ++j) z += model.ag(j, y) * (h * dW(j) - dZ(j));
        break;
    case NS::Commutative:
    case NS::General:
        throw ConfigError(std::string("order15 is unsupported for ") + noise_structure_name(model.noise) + " noise");
    }
    require_finite(z, "order15 increment", y);
    return z;
}

inline Vector scheme_increment(Scheme scheme, const Vector& y, const StepInputs& in, const ModelSpec& model) {
    switch (scheme) {
    case Scheme::Euler: return euler_increment(y, in, model);
    case Scheme::Milstein: return milstein_increment(y, in, model);
    case Scheme::Order15: return order15_increment(y, in, model);
    }
    throw ConfigError("unknown scheme");
}

} // namespace detail

/// One step with a precomputed stopping threshold.
inline Vector step_gated(Scheme scheme, const Vector& y, const StepInputs& in, const ModelSpec& model,
                         const SchemeParams& p, double threshold) {
    if (norm(y) > threshold) return y;
    return y + tame(detail::scheme_increment(scheme, y, in, model), in.h, p);
}

inline Vector step_euler(const Vector& y, const StepInputs& in, const ModelSpec& model, const SchemeParams& p) {
    return step_gated(Scheme::Euler, y, in, model, p, phi_threshold(in.h, p));
}

inline Vector step_milstein(const Vector& y, const StepInputs& in, const ModelSpec& model, const SchemeParams& p) {
    check_scheme_support(model, Scheme::Milstein);
    return step_gated(Scheme::Milstein, y, in, model, p, phi_threshold(in.h, p));
}

inline Vector step_order15(const Vector& y, const StepInputs& in, const ModelSpec& model, const SchemeParams& p) {
    check_scheme_support(model, Scheme::Order15);
    return step_gated(Scheme::Order15, y, in, model, p, phi_threshold(in.h, p));
}

struct PathResult {
    Matrix states;                  // d x (N + 1), column k is Y at t_k
    std::optional<long> tau_index;  // first k with |Y_k| > phi(h)
    bool frozen = false;
    double h = 0.0;

    long steps() const { return static_cast<long>(states.cols()) - 1; }
    Vector terminal() const { return states.col(states.cols() - 1); }
};

/// Validates that `scheme` can run on `model` with parameters `p`.
inline void check_run_config(const ModelSpec& model, Scheme scheme, const SchemeParams& p) {
    check_scheme_constraint(p, scheme);
    check_scheme_support(model, scheme);
}

inline PathResult simulate_path(const ModelSpec& model, Scheme scheme, const BrownianLattice& lattice,
                                const SchemeParams& p) {
    check_run_config(model, scheme, p);
    if (lattice.m != model.m) throw ConfigError("lattice noise dimension does not match model");
    if (scheme == Scheme::Order15 && !lattice.has_dz()) throw ConfigError("order15 requires a lattice with dZ");

    const long n = lattice.steps();
    PathResult out;
    out.h = lattice.step_size();
    out.states.resize(model.d, n + 1);
    out.states.col(0) = model.x0;
    const double threshold = phi_threshold(out.h, p);

    StepInputs in;
    in.h = out.h;
    Vector y = model.x0;
    for (long k = 0; k < n; ++k) {
        if (norm(y) > threshold) {
            out.tau_index = k;
            out.frozen = true;
            for (long j = k + 1; j <= n; ++j) out.states.col(j) = y;
            return out;
        }
        in.dW = lattice.dW.col(k);
        if (scheme == Scheme::Order15) in.dZ = lattice.dZ->col(k);
        try {
            y += tame(detail::scheme_increment(scheme, y, in, model), in.h, p);
        } catch (const StepError& e) {
            throw StepError(std::string(e.what()) + " at step " + std::to_string(k), e.state(), k);
        }
        out.states.col(k + 1) = y;
    }
    if (norm(y) > threshold) {
        out.tau_index = n;
        out.frozen = true;
    }
    return out;
}

/// Number of steps k < tau with |Y_{k+1} - Y_k| > h^(theta/delta).
inline long count_increment_violations(const PathResult& path, const SchemeParams& p) {
    const double bound = tame_bound(path.h, p);
    const long last = path.tau_index.value_or(path.steps());
    long bad = 0;
    for (long k = 0; k < last; ++k)
        if ((path.states.col(k + 1) - path.states.col(k)).norm() > bound) ++bad;
    return bad;
}

// ---------------------------------------------------------------------------
// Classical (untamed, unstopped) Euler-Maruyama, for comparison runs.

struct EulerMaruyamaResult {
    Vector terminal;
    bool overflow = false;
    long overflow_step = -1;
};

/// Overflow means some state or coefficient evaluation became non-finite; the
/// path is abandoned at that step.
inline EulerMaruyamaResult simulate_euler_maruyama(const ModelSpec& model, const BrownianLattice& lattice) {
    if (lattice.m != model.m) throw ConfigError("lattice noise dimension does not match model");
    const double h = lattice.step_size();
    EulerMaruyamaResult out;
    Vector y = model.x0;
    for (long k = 0; k < lattice.steps(); ++k) {
        y += model.drift(y) * h + model.diffusion(y) * lattice.dW.col(k);
        if (!y.allFinite()) {
            out.overflow = true;
            out.overflow_step = k;
            break;
        }
    }
    out.terminal = std::move(y);
    return out;
}

} // namespace tamed

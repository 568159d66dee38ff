#pragma once

// Concrete models: stochastic Lorenz, Brownian dynamics, Langevin dynamics,
// the experimental psychology model, stochastic van der Pol and
// Duffing-van der Pol oscillators, stochastic Lotka-Volterra competition, plus
// two scalar test models (Ornstein-Uhlenbeck and cubic drift).
//
// Each model supplies hand-derived first and second derivatives of f and of
// the columns of g; the scheme operators (L^j g, L^j f, A f, A g, L L g) are
// composed from those in `detail::compose_operators`.

#include "tamed/models.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tamed {

namespace detail {

struct AnalyticDerivatives {
    std::function<Matrix(const Vector&)> jac_f;                                      // Df(x)
    std::function<Vector(const Vector&, const Vector&, const Vector&)> hess_f;       // D^2 f(x)(u, v)
    std::function<Matrix(int, const Vector&)> jac_g;                                 // D g_j(x)
    std::function<Vector(int, const Vector&, const Vector&, const Vector&)> hess_g;  // D^2 g_j(x)(u, v)
};

/// Fills lg_g, lg_f, af, ag, llg of `model` from analytic derivatives of f and g.
/// Callbacks already set on the model are kept.
inline void compose_operators(ModelSpec& model, const AnalyticDerivatives& der) {
    const int m = model.m;
    const auto f = model.drift;
    const auto g = model.diffusion;
    if (!model.lg_g && der.jac_g)
        model.lg_g = [g, der](int j2, int j1, const Vector& x) -> Vector { return der.jac_g(j1, x) * g(x).col(j2); };
    if (!model.lg_f)
        model.lg_f = [g, der](int j, const Vector& x) -> Vector { return der.jac_f(x) * g(x).col(j); };
    if (!model.af)
        model.af = [f, g, der, m](const Vector& x) -> Vector {
            const Matrix gx = g(x);
            Vector out = der.jac_f(x) * f(x);
            for (int j = 0; j < m; ++j) out += 0.5 * der.hess_f(x, gx.col(j), gx.col(j));
            return out;
        };
    if (!model.ag && der.jac_g)
        model.ag = [f, g, der, m](int j, const Vector& x) -> Vector {
            const Matrix gx = g(x);
            Vector out = der.jac_g(j, x) * f(x);
            for (int k = 0; k < m; ++k) out += 0.5 * der.hess_g(j, x, gx.col(k), gx.col(k));
            return out;
        };
    if (!model.llg && der.jac_g)
        model.llg = [g, der](int j2, int j1, int j, const Vector& x) -> Vector {
            const Matrix gx = g(x);
            return der.hess_g(j, x, gx.col(j1), gx.col(j2)) + der.jac_g(j, x) * (der.jac_g(j1, x) * gx.col(j2));
        };
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Potentials for Brownian / Langevin dynamics

struct Potential {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> grad;
    std::function<Matrix(const Vector&)> hess;
    std::function<Vector(const Vector&, const Vector&, const Vector&)> third; // D^3 V(x)(u, v, .)
};

/// V(x) = |x|^4/4 - |x|^2/2
inline Potential double_well() {
    Potential v;
    v.value = [](const Vector& x) {
        const double r2 = x.squaredNorm();
        return 0.25 * r2 * r2 - 0.5 * r2;
    };
    v.grad = [](const Vector& x) -> Vector { return (x.squaredNorm() - 1.0) * x; };
    v.hess = [](const Vector& x) -> Matrix {
        const auto n = x.size();
        return (x.squaredNorm() - 1.0) * Matrix::Identity(n, n) + 2.0 * x * x.transpose();
    };
    v.third = [](const Vector& x, const Vector& u, const Vector& w) -> Vector {
        return 2.0 * (x.dot(w) * u + x.dot(u) * w + u.dot(w) * x);
    };
    return v;
}

// ---------------------------------------------------------------------------
// Gallery constructors

/// f = (a1 (x2 - x1), a2 x1 - x2 - x1 x3, x1 x2 - a3 x3), g = noise (constant 3 x 3).
inline ModelSpec lorenz(double a1, double a2, double a3, const Matrix& noise, const Vector& x0) {
    if (a1 < 0 || a2 < 0 || a3 < 0) throw ConfigError("lorenz: alpha parameters must be nonnegative");
    if (noise.rows() != 3 || noise.cols() != 3) throw ConfigError("lorenz: noise matrix must be 3 x 3");
    ModelSpec model;
    model.name = "lorenz";
    model.d = 3;
    model.m = 3;
    model.noise = NoiseStructure::Additive;
    model.x0 = x0;
    model.box_lo = Vector::Constant(3, -5.0);
    model.box_hi = Vector::Constant(3, 5.0);
    model.drift = [=](const Vector& x) -> Vector {
        return detail::vec({a1 * (x(1) - x(0)), a2 * x(0) - x(1) - x(0) * x(2), x(0) * x(1) - a3 * x(2)});
    };
    model.diffusion = [noise](const Vector&) -> Matrix { return noise; };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        Matrix j(3, 3);
        j << -a1, a1, 0.0,
             a2 - x(2), -1.0, -x(0),
             x(1), x(0), -a3;
        return j;
    };
    der.hess_f = [](const Vector&, const Vector& u, const Vector& v) -> Vector {
        return detail::vec({0.0, -(u(0) * v(2) + u(2) * v(0)), u(0) * v(1) + u(1) * v(0)});
    };
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// f = -grad V, g = sqrt(beta) I (d = m = dim).
inline ModelSpec brownian_dynamics(int dim, const Potential& v, double beta, const Vector& x0) {
    if (dim < 1) throw ConfigError("brownian-dynamics: dimension must be >= 1");
    if (!(beta > 0)) throw ConfigError("brownian-dynamics: beta must be positive");
    ModelSpec model;
    model.name = "brownian-dynamics";
    model.d = dim;
    model.m = dim;
    model.noise = NoiseStructure::Additive;
    model.x0 = x0;
    model.drift = [v](const Vector& x) -> Vector { return -v.grad(x); };
    const Matrix g = std::sqrt(beta) * Matrix::Identity(dim, dim);
    model.diffusion = [g](const Vector&) -> Matrix { return g; };
    detail::AnalyticDerivatives der;
    der.jac_f = [v](const Vector& x) -> Matrix { return -v.hess(x); };
    der.hess_f = [v](const Vector& x, const Vector& u, const Vector& w) -> Vector { return -v.third(x, u, w); };
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// x = (q, p) in R^{2 dim}: f = (p, -grad V(q) - gamma p), g u = (0, sqrt(beta) u).
inline ModelSpec langevin(int dim, const Potential& v, double gamma, double beta, const Vector& x0) {
    if (dim < 1) throw ConfigError("langevin: dimension must be >= 1");
    if (!(gamma >= 0)) throw ConfigError("langevin: gamma must be nonnegative");
    if (!(beta > 0)) throw ConfigError("langevin: beta must be positive");
    const int n = dim;
    ModelSpec model;
    model.name = "langevin";
    model.d = 2 * n;
    model.m = n;
    model.noise = NoiseStructure::Additive;
    model.x0 = x0;
    model.drift = [=](const Vector& x) -> Vector {
        Vector out(2 * n);
        out.head(n) = x.tail(n);
        out.tail(n) = -v.grad(x.head(n)) - gamma * x.tail(n);
        return out;
    };
    Matrix g = Matrix::Zero(2 * n, n);
    g.bottomRows(n) = std::sqrt(beta) * Matrix::Identity(n, n);
    model.diffusion = [g](const Vector&) -> Matrix { return g; };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        Matrix j = Matrix::Zero(2 * n, 2 * n);
        j.topRightCorner(n, n) = Matrix::Identity(n, n);
        j.bottomLeftCorner(n, n) = -v.hess(x.head(n));
        j.bottomRightCorner(n, n) = -gamma * Matrix::Identity(n, n);
        return j;
    };
    der.hess_f = [=](const Vector& x, const Vector& u, const Vector& w) -> Vector {
        Vector out = Vector::Zero(2 * n);
        out.tail(n) = -v.third(x.head(n), u.head(n), w.head(n));
        return out;
    };
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// d = 2, m = 1:
///   f = (x2^2 (lambda + 4 gamma x1) - beta^2 x1 / 2, -x1 x2 (lambda + 4 gamma x1) - beta^2 x2 / 2)
///   g = (-beta x2, beta x1)
/// Since g is linear with D g = beta J (J the quarter rotation), L g = -beta^2 x,
/// L L g = -beta^2 g and A g = beta J f.
inline ModelSpec exp_psychology(double lambda, double gamma, double beta, const Vector& x0) {
    if (!(lambda > 0)) throw ConfigError("exp-psych: lambda must be positive");
    if (!(gamma > 0)) throw ConfigError("exp-psych: gamma must be positive");
    ModelSpec model;
    model.name = "exp-psych";
    model.d = 2;
    model.m = 1;
    model.noise = NoiseStructure::Scalar;
    model.x0 = x0;
    const double b2 = beta * beta;
    model.drift = [=](const Vector& x) -> Vector {
        const double c = lambda + 4.0 * gamma * x(0);
        return detail::vec({x(1) * x(1) * c - 0.5 * b2 * x(0), -x(0) * x(1) * c - 0.5 * b2 * x(1)});
    };
    model.diffusion = [beta](const Vector& x) -> Matrix {
        Matrix g(2, 1);
        g << -beta * x(1), beta * x(0);
        return g;
    };
    model.lg_g = [b2](int, int, const Vector& x) -> Vector { return -b2 * x; };
    model.llg = [beta, b2](int, int, int, const Vector& x) -> Vector {
        return detail::vec({b2 * beta * x(1), -b2 * beta * x(0)});
    };
    const auto f = model.drift;
    model.ag = [f, beta](int, const Vector& x) -> Vector {
        const Vector fx = f(x);
        return detail::vec({-beta * fx(1), beta * fx(0)});
    };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        const double c = lambda + 4.0 * gamma * x(0);
        Matrix j(2, 2);
        j << 4.0 * gamma * x(1) * x(1) - 0.5 * b2, 2.0 * x(1) * c,
             -x(1) * (lambda + 8.0 * gamma * x(0)), -x(0) * c - 0.5 * b2;
        return j;
    };
    der.hess_f = [=](const Vector& x, const Vector& u, const Vector& v) -> Vector {
        // f1: d11 = 0,          d12 = 8 gamma x2,              d22 = 2 (lambda + 4 gamma x1)
        // f2: d11 = -8 gamma x2, d12 = -(lambda + 8 gamma x1), d22 = 0
        const double cross = u(0) * v(1) + u(1) * v(0);
        return detail::vec({8.0 * gamma * x(1) * cross + 2.0 * (lambda + 4.0 * gamma * x(0)) * u(1) * v(1),
                            -8.0 * gamma * x(1) * u(0) * v(0) - (lambda + 8.0 * gamma * x(0)) * cross});
    };
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// Scalar noise amplitude phi : R -> R^m for the oscillators, with derivatives.
struct NoiseProfile {
    int m = 1;
    std::function<Vector(double)> value;
    std::function<Vector(double)> d1;
    std::function<Vector(double)> d2;
};

/// phi_j(x1) = scale_j sin(x1)
inline NoiseProfile sine_profile(const Vector& scale) {
    NoiseProfile p;
    p.m = static_cast<int>(scale.size());
    p.value = [scale](double s) -> Vector { return scale * std::sin(s); };
    p.d1 = [scale](double s) -> Vector { return scale * std::cos(s); };
    p.d2 = [scale](double s) -> Vector { return -scale * std::sin(s); };
    return p;
}

namespace detail {

// Shared pieces of the two oscillators: g u = (0, phi(x1) . u).
inline void attach_oscillator_noise(ModelSpec& model, const NoiseProfile& phi, AnalyticDerivatives& der) {
    model.m = phi.m;
    model.noise = NoiseStructure::NoLevyArea;
    model.diffusion = [phi](const Vector& x) -> Matrix {
        Matrix g = Matrix::Zero(2, phi.m);
        g.row(1) = phi.value(x(0)).transpose();
        return g;
    };
    der.jac_g = [phi](int j, const Vector& x) -> Matrix {
        Matrix jac = Matrix::Zero(2, 2);
        jac(1, 0) = phi.d1(x(0))(j);
        return jac;
    };
    der.hess_g = [phi](int j, const Vector& x, const Vector& u, const Vector& v) -> Vector {
        return vec({0.0, phi.d2(x(0))(j) * u(0) * v(0)});
    };
}

} // namespace detail

/// f = (x2, (gamma - lambda x1^2) x2 - beta x1), g u = (0, phi(x1) u).
inline ModelSpec van_der_pol(double gamma, double lambda, double beta, const NoiseProfile& phi, const Vector& x0) {
    if (!(lambda > 0)) throw ConfigError("van-der-pol: lambda must be positive");
    if (!(gamma >= 0) || !(beta >= 0)) throw ConfigError("van-der-pol: gamma and beta must be nonnegative");
    if (phi.m < 1) throw ConfigError("van-der-pol: noise dimension must be >= 1");
    ModelSpec model;
    model.name = "van-der-pol";
    model.d = 2;
    model.x0 = x0;
    model.drift = [=](const Vector& x) -> Vector {
        return detail::vec({x(1), (gamma - lambda * x(0) * x(0)) * x(1) - beta * x(0)});
    };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 1.0,
             -2.0 * lambda * x(0) * x(1) - beta, gamma - lambda * x(0) * x(0);
        return j;
    };
    der.hess_f = [=](const Vector& x, const Vector& u, const Vector& v) -> Vector {
        return detail::vec({0.0, -2.0 * lambda * (x(1) * u(0) * v(0) + x(0) * (u(0) * v(1) + u(1) * v(0)))});
    };
    detail::attach_oscillator_noise(model, phi, der);
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// f = (x2, a2 x2 - a1 x1 - a3 x1^2 x2 - x1^3), g u = (0, phi(x1) u).
inline ModelSpec duffing_van_der_pol(double a1, double a2, double a3, const NoiseProfile& phi, const Vector& x0) {
    if (!(a3 > 0)) throw ConfigError("duffing-van-der-pol: alpha3 must be positive");
    if (phi.m < 1) throw ConfigError("duffing-van-der-pol: noise dimension must be >= 1");
    ModelSpec model;
    model.name = "duffing-van-der-pol";
    model.d = 2;
    model.x0 = x0;
    model.drift = [=](const Vector& x) -> Vector {
        return detail::vec({x(1), a2 * x(1) - a1 * x(0) - a3 * x(0) * x(0) * x(1) - x(0) * x(0) * x(0)});
    };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 1.0,
             -a1 - 2.0 * a3 * x(0) * x(1) - 3.0 * x(0) * x(0), a2 - a3 * x(0) * x(0);
        return j;
    };
    der.hess_f = [=](const Vector& x, const Vector& u, const Vector& v) -> Vector {
        const double d11 = -2.0 * a3 * x(1) - 6.0 * x(0);
        const double d12 = -2.0 * a3 * x(0);
        return detail::vec({0.0, d11 * u(0) * v(0) + d12 * (u(0) * v(1) + u(1) * v(0))});
    };
    detail::attach_oscillator_noise(model, phi, der);
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// f = diag(x)(b - A x), g = diag(x) sigma.
/// L^{j2} g_{j1} has components x_i sigma_{i,j1} sigma_{i,j2}, symmetric in (j1, j2).
inline ModelSpec lotka_volterra(const Vector& b, const Matrix& a, const Matrix& sigma, const Vector& x0) {
    const auto d = b.size();
    if (d < 1 || a.rows() != d || a.cols() != d || sigma.rows() != d || sigma.cols() < 1)
        throw ConfigError("lotka-volterra: inconsistent dimensions");
    if ((a.array() < 0.0).any()) throw ConfigError("lotka-volterra: interaction matrix must be nonnegative");
    if (!(a.diagonal().minCoeff() > 0.0)) throw ConfigError("lotka-volterra: diagonal of A must be positive");
    if (x0.size() != d || !(x0.minCoeff() > 0.0)) throw ConfigError("lotka-volterra: initial state must be positive");
    ModelSpec model;
    model.name = "lotka-volterra";
    model.d = static_cast<int>(d);
    model.m = static_cast<int>(sigma.cols());
    model.noise = model.m == 1 ? NoiseStructure::Scalar : NoiseStructure::Commutative;
    model.x0 = x0;
    model.box_lo = Vector::Constant(d, 0.1);
    model.box_hi = Vector::Constant(d, 2.0);
    model.drift = [=](const Vector& x) -> Vector { return x.cwiseProduct(b - a * x); };
    model.diffusion = [sigma](const Vector& x) -> Matrix { return x.asDiagonal() * sigma; };
    model.lg_g = [sigma](int j2, int j1, const Vector& x) -> Vector {
        return x.cwiseProduct(sigma.col(j1).cwiseProduct(sigma.col(j2)));
    };
    detail::AnalyticDerivatives der;
    der.jac_f = [=](const Vector& x) -> Matrix {
        Matrix j = -(x.asDiagonal() * a);
        j.diagonal() += b - a * x;
        return j;
    };
    der.hess_f = [a](const Vector&, const Vector& u, const Vector& v) -> Vector {
        return -(u.cwiseProduct(a * v) + v.cwiseProduct(a * u));
    };
    der.jac_g = [sigma](int j, const Vector&) -> Matrix { return sigma.col(j).asDiagonal(); };
    der.hess_g = [d](int, const Vector&, const Vector&, const Vector&) -> Vector { return Vector::Zero(d); };
    compose_operators(model, der);
    normalize(model);
    return model;
}

/// Scalar Ornstein-Uhlenbeck: f = -a y, g = sigma.
inline ModelSpec ornstein_uhlenbeck(double a, double sigma, double x0) {
    ModelSpec model;
    model.name = "ou";
    model.noise = NoiseStructure::Additive;
    model.x0 = detail::vec({x0});
    model.drift = [a](const Vector& x) -> Vector { return -a * x; };
    model.diffusion = [sigma](const Vector&) -> Matrix { return Matrix::Constant(1, 1, sigma); };
    model.lg_f = [a, sigma](int, const Vector&) -> Vector { return Vector::Constant(1, -a * sigma); };
    model.af = [a](const Vector& x) -> Vector { return a * a * x; };
    normalize(model);
    return model;
}

/// Scalar cubic drift: f = -y^3, g = sigma.
inline ModelSpec cubic_drift(double sigma, double x0) {
    ModelSpec model;
    model.name = "cubic";
    model.noise = NoiseStructure::Additive;
    model.x0 = detail::vec({x0});
    model.drift = [](const Vector& x) -> Vector { return -x.array().cube().matrix(); };
    model.diffusion = [sigma](const Vector&) -> Matrix { return Matrix::Constant(1, 1, sigma); };
    model.lg_f = [sigma](int, const Vector& x) -> Vector { return Vector::Constant(1, -3.0 * x(0) * x(0) * sigma); };
    model.af = [sigma](const Vector& x) -> Vector {
        const double y = x(0);
        return Vector::Constant(1, 3.0 * std::pow(y, 5) - 3.0 * y * sigma * sigma);
    };
    normalize(model);
    return model;
}

// ---------------------------------------------------------------------------
// Lyapunov pairs

/// U0 = V(q) + |p|^2/2 + 1, U1 = 0 for Langevin dynamics with the double well.
/// A U0 + |g^T grad U0|^2/2 = beta dim/2 + (beta/2 - gamma)|p|^2 and U0 >= 3/4 + |p|^2/2,
/// so alpha = max(2 beta dim / 3, beta - 2 gamma) with c = 0 suffices.
inline LyapunovPair langevin_pair(int dim, double gamma, double beta) {
    const Potential v = double_well();
    const int n = dim;
    LyapunovPair pair;
    pair.u0 = [v, n](const Vector& x) { return v.value(x.head(n)) + 0.5 * x.tail(n).squaredNorm() + 1.0; };
    pair.u1 = [](const Vector&) { return 0.0; };
    pair.grad_u0 = [v, n](const Vector& x) -> Vector {
        Vector out(2 * n);
        out.head(n) = v.grad(x.head(n));
        out.tail(n) = x.tail(n);
        return out;
    };
    pair.hess_u0 = [v, n](const Vector& x) -> Matrix {
        Matrix out = Matrix::Zero(2 * n, 2 * n);
        out.topLeftCorner(n, n) = v.hess(x.head(n));
        out.bottomRightCorner(n, n) = Matrix::Identity(n, n);
        return out;
    };
    pair.alpha = std::max(2.0 * beta * n / 3.0, beta - 2.0 * gamma);
    pair.c = 0.0;
    return pair;
}

/// U0 = V + 1 for Brownian dynamics with the double well. For beta <= 2 the
/// |grad V|^2 terms are nonpositive and alpha = beta (dim + 2) bounds the rest.
inline LyapunovPair brownian_dynamics_pair(int dim, double beta) {
    const Potential v = double_well();
    LyapunovPair pair;
    pair.u0 = [v](const Vector& x) { return v.value(x) + 1.0; };
    pair.u1 = [](const Vector&) { return 0.0; };
    pair.grad_u0 = v.grad;
    pair.hess_u0 = v.hess;
    pair.alpha = beta * (dim + 2);
    return pair;
}

/// U0 = |x|^2 for the experimental psychology model, for which |X_t| is conserved:
/// A U0 + |g^T grad U0|^2/2 = 0.
inline LyapunovPair exp_psychology_pair() {
    LyapunovPair pair;
    pair.u0 = [](const Vector& x) { return x.squaredNorm(); };
    pair.u1 = [](const Vector&) { return 0.0; };
    pair.grad_u0 = [](const Vector& x) -> Vector { return 2.0 * x; };
    pair.hess_u0 = [](const Vector& x) -> Matrix { return 2.0 * Matrix::Identity(x.size(), x.size()); };
    return pair;
}

// ---------------------------------------------------------------------------
// Registry

using ParamMap = std::map<std::string, double>;

struct ModelEntry {
    std::string name;
    std::string summary;
    std::vector<std::pair<std::string, double>> defaults;
    std::function<ModelSpec(const ParamMap&)> build;
    std::function<LyapunovPair(const ParamMap&)> lyapunov; // empty when no default pair
};

namespace detail {

inline int integer_param(const ParamMap& p, const std::string& key) {
    const double v = p.at(key);
    if (v != std::floor(v) || v < 1 || v > 64) throw ConfigError("parameter '" + key + "' must be a positive integer");
    return static_cast<int>(v);
}

inline Vector phi_scale_vector(const ParamMap& p) { return Vector::Constant(1, p.at("phi_scale")); }

} // namespace detail

inline const std::vector<ModelEntry>& model_registry() {
    static const std::vector<ModelEntry> registry = [] {
        std::vector<ModelEntry> r;
        r.push_back({"lorenz", "stochastic Lorenz, additive noise sigma*I",
                     {{"alpha1", 1.0}, {"alpha2", 0.5}, {"alpha3", 1.0}, {"sigma", 0.3},
                      {"x0_1", 0.5}, {"x0_2", 0.5}, {"x0_3", 0.5}},
                     [](const ParamMap& p) {
                         return lorenz(p.at("alpha1"), p.at("alpha2"), p.at("alpha3"),
                                       p.at("sigma") * Matrix::Identity(3, 3),
                                       detail::vec({p.at("x0_1"), p.at("x0_2"), p.at("x0_3")}));
                     },
                     {}});
        r.push_back({"brownian-dynamics", "overdamped dynamics in the double well |x|^4/4 - |x|^2/2",
                     {{"dim", 1}, {"beta", 1.0}, {"x0", 0.5}},
                     [](const ParamMap& p) {
                         const int n = detail::integer_param(p, "dim");
                         return brownian_dynamics(n, double_well(), p.at("beta"), Vector::Constant(n, p.at("x0")));
                     },
                     [](const ParamMap& p) { return brownian_dynamics_pair(detail::integer_param(p, "dim"), p.at("beta")); }});
        r.push_back({"langevin", "underdamped Langevin dynamics in the double well",
                     {{"dim", 1}, {"gamma", 1.0}, {"beta", 1.0}, {"q0", 1.0}, {"p0", 0.0}},
                     [](const ParamMap& p) {
                         const int n = detail::integer_param(p, "dim");
                         Vector x0(2 * n);
                         x0.head(n).setConstant(p.at("q0"));
                         x0.tail(n).setConstant(p.at("p0"));
                         return langevin(n, double_well(), p.at("gamma"), p.at("beta"), x0);
                     },
                     [](const ParamMap& p) {
                         return langevin_pair(detail::integer_param(p, "dim"), p.at("gamma"), p.at("beta"));
                     }});
        r.push_back({"exp-psych", "experimental psychology model (scalar multiplicative noise)",
                     {{"lambda", 1.0}, {"gamma", 1.0}, {"beta", 0.2}, {"x0_1", 1.0}, {"x0_2", 0.0}},
                     [](const ParamMap& p) {
                         return exp_psychology(p.at("lambda"), p.at("gamma"), p.at("beta"),
                                               detail::vec({p.at("x0_1"), p.at("x0_2")}));
                     },
                     [](const ParamMap&) { return exp_psychology_pair(); }});
        r.push_back({"van-der-pol", "stochastic van der Pol oscillator, phi(x1) = phi_scale*sin(x1)",
                     {{"gamma", 1.0}, {"lambda", 1.0}, {"beta", 1.0}, {"phi_scale", 0.5}, {"x0_1", 1.0}, {"x0_2", 0.0}},
                     [](const ParamMap& p) {
                         return van_der_pol(p.at("gamma"), p.at("lambda"), p.at("beta"),
                                            sine_profile(detail::phi_scale_vector(p)),
                                            detail::vec({p.at("x0_1"), p.at("x0_2")}));
                     },
                     {}});
        r.push_back({"duffing-van-der-pol", "stochastic Duffing-van der Pol oscillator, phi(x1) = phi_scale*sin(x1)",
                     {{"alpha1", 1.0}, {"alpha2", 0.5}, {"alpha3", 1.0}, {"phi_scale", 0.5}, {"x0_1", 1.0}, {"x0_2", 0.0}},
                     [](const ParamMap& p) {
                         return duffing_van_der_pol(p.at("alpha1"), p.at("alpha2"), p.at("alpha3"),
                                                    sine_profile(detail::phi_scale_vector(p)),
                                                    detail::vec({p.at("x0_1"), p.at("x0_2")}));
                     },
                     {}});
        r.push_back({"lotka-volterra", "two-species stochastic Lotka-Volterra competition, diagonal sigma",
                     {{"b1", 1.0}, {"b2", 1.0}, {"a11", 1.0}, {"a12", 0.5}, {"a21", 0.5}, {"a22", 1.0},
                      {"sigma1", 0.2}, {"sigma2", 0.2}, {"x0_1", 0.5}, {"x0_2", 0.5}},
                     [](const ParamMap& p) {
                         Matrix a(2, 2);
                         a << p.at("a11"), p.at("a12"), p.at("a21"), p.at("a22");
                         Matrix sigma = Matrix::Zero(2, 2);
                         sigma(0, 0) = p.at("sigma1");
                         sigma(1, 1) = p.at("sigma2");
                         return lotka_volterra(detail::vec({p.at("b1"), p.at("b2")}), a, sigma,
                                               detail::vec({p.at("x0_1"), p.at("x0_2")}));
                     },
                     {}});
        r.push_back({"ou", "scalar Ornstein-Uhlenbeck f = -a y, g = sigma",
                     {{"a", 1.0}, {"sigma", 0.1}, {"x0", 1.0}},
                     [](const ParamMap& p) { return ornstein_uhlenbeck(p.at("a"), p.at("sigma"), p.at("x0")); },
                     {}});
        r.push_back({"cubic", "scalar cubic drift f = -y^3, g = sigma",
                     {{"sigma", 0.1}, {"x0", 1.0}},
                     [](const ParamMap& p) { return cubic_drift(p.at("sigma"), p.at("x0")); },
                     {}});
        return r;
    }();
    return registry;
}

inline const ModelEntry& find_model(const std::string& name) {
    for (const auto& e : model_registry())
        if (e.name == name) return e;
    throw ConfigError("unknown model '" + name + "'");
}

/// Defaults of `entry` overridden by `overrides`; unknown keys are rejected.
inline ParamMap resolve_params(const ModelEntry& entry, const ParamMap& overrides) {
    ParamMap params(entry.defaults.begin(), entry.defaults.end());
    for (const auto& [key, value] : overrides) {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError("model '" + entry.name + "' has no parameter '" + key + "'");
        it->second = value;
    }
    return params;
}

inline ModelSpec make_model(const std::string& name, const ParamMap& overrides = {}) {
    const auto& entry = find_model(name);
    return entry.build(resolve_params(entry, overrides));
}

} // namespace tamed

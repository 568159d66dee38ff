#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace tamed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid numeric argument (non-positive step size, non-finite input, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A run configuration that cannot be executed: bad parameters, a scheme the
/// model's noise structure cannot support, missing callbacks.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A one-step map produced a non-finite value.
class StepError : public std::runtime_error {
public:
    StepError(const std::string& what, Vector state, long step = -1)
        : std::runtime_error(what), state_(std::move(state)), step_(step) {}

    const Vector& state() const noexcept { return state_; }
    long step() const noexcept { return step_; }

private:
    Vector state_;
    long step_;
};

/// Euclidean norm that survives components near the overflow limit.
inline double norm(const Vector& x) {
    const double r = x.norm();
    return std::isfinite(r) || !x.allFinite() ? r : x.stableNorm();
}

enum class Scheme { Euler, Milstein, Order15 };

inline const char* scheme_name(Scheme s) {
    switch (s) {
    case Scheme::Euler: return "euler";
    case Scheme::Milstein: return "milstein";
    case Scheme::Order15: return "order15";
    }
    return "?";
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "euler") return Scheme::Euler;
    if (name == "milstein") return Scheme::Milstein;
    if (name == "order15") return Scheme::Order15;
    throw ConfigError("unknown scheme '" + name + "'");
}

} // namespace tamed

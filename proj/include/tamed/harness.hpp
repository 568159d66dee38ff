#pragma once

// Monte-Carlo drivers: strong convergence against a shared-path fine
// reference, the exponential-moment functional, and a classical
// Euler-Maruyama comparison.
//
// Paths are independent work items keyed by their index; per-path results are
// stored by index and reduced in index order with pairwise summation, so
// reports do not depend on the thread count.

#include "tamed/brownian.hpp"
#include "tamed/integrators.hpp"
#include "tamed/models.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace tamed {

// ---------------------------------------------------------------------------
// Utilities

inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. If any call
/// throws, the exception of the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(long count, unsigned threads, Fn&& fn) {
    const unsigned workers = std::min<long>(resolve_threads(threads), std::max<long>(count, 1));
    std::atomic<long> next{0};
    std::mutex mu;
    long failed_index = -1;
    std::exception_ptr failure;
    auto work = [&] {
        for (long i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (failed_index < 0 || i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Rate fitting

struct RateFit {
    double slope = 0.0;     // error ~ h^slope
    double intercept = 0.0; // log2(error) at level 0
    double residual = 0.0;  // residual sum of squares in log2 space
};

/// Least squares of log2(error) against -level.
inline RateFit fit_rate(std::span<const int> levels, std::span<const double> errors) {
    if (levels.size() != errors.size()) throw ConfigError("fit_rate: levels and errors differ in length");
    if (levels.size() < 2) throw ConfigError("fit_rate: need at least two levels");
    const auto n = static_cast<double>(levels.size());
    double sx = 0, sy = 0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
            throw DomainError("fit_rate: errors must be positive and finite");
        xs.push_back(-static_cast<double>(levels[i]));
        ys.push_back(std::log2(errors[i]));
        sx += xs.back();
        sy += ys.back();
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("fit_rate: levels must not all be equal");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        fit.residual += r * r;
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Strong convergence

struct StudyOptions {
    std::vector<int> levels;
    int ref_level = 12;
    long paths = 1000;
    std::uint64_t seed = 0;
    double t_final = 1.0;
    unsigned threads = 0;
};

struct ConvergenceReport {
    std::string scheme;
    std::string model;
    std::vector<int> levels;
    std::vector<double> errors_sup;      // sqrt(E[max_k |Y_ref(t_k) - Y(t_k)|^2])
    std::vector<double> errors_terminal; // sqrt(E[|Y_ref(T) - Y(T)|^2])
    std::optional<RateFit> fit_sup;
    std::optional<RateFit> fit_terminal;
    std::vector<long> stopped;           // paths with tau < infinity, per level
    long ref_stopped = 0;
    long increment_violations = 0;       // over every simulated path and level
    long paths = 0;
    int ref_level = 0;
    std::uint64_t seed = 0;
    double t_final = 1.0;
    SchemeParams params;
};

namespace detail {

inline void check_study(const StudyOptions& opt) {
    if (opt.paths < 1) throw ConfigError("number of paths must be >= 1");
    if (opt.levels.empty()) throw ConfigError("at least one level is required");
    if (!(opt.t_final > 0.0 && std::isfinite(opt.t_final))) throw ConfigError("t_final must be positive");
    for (int l : opt.levels)
        if (l < 0) throw ConfigError("levels must be nonnegative");
}

inline std::string path_context(long path, int level, const std::string& what) {
    return "path " + std::to_string(path) + " level " + std::to_string(level) + ": " + what;
}

} // namespace detail

inline ConvergenceReport run_convergence(const ModelSpec& model, Scheme scheme, const StudyOptions& opt,
                                         const SchemeParams& p) {
    detail::check_study(opt);
    check_run_config(model, scheme, p);
    const int max_level = *std::max_element(opt.levels.begin(), opt.levels.end());
    if (opt.ref_level < max_level) throw ConfigError("ref_level must be >= every level");

    const std::size_t nl = opt.levels.size();
    const bool with_dz = scheme == Scheme::Order15;
    // per path, per level: squared sup error, squared terminal error, stopped flag
    std::vector<double> sq_sup(static_cast<std::size_t>(opt.paths) * nl);
    std::vector<double> sq_term(sq_sup.size());
    std::vector<char> stopped(sq_sup.size());
    std::vector<char> ref_stopped(static_cast<std::size_t>(opt.paths));
    std::vector<long> violations(static_cast<std::size_t>(opt.paths));

    parallel_for(opt.paths, opt.threads, [&](long path) {
        const auto base = static_cast<std::size_t>(path) * nl;
        const BrownianLattice fine =
            sample_lattice(model.m, opt.ref_level, opt.t_final, with_dz, StreamKey{opt.seed, static_cast<std::uint64_t>(path)});
        PathResult ref;
        try {
            ref = simulate_path(model, scheme, fine, p);
        } catch (const StepError& e) {
            throw StepError(detail::path_context(path, opt.ref_level, e.what()), e.state(), e.step());
        }
        ref_stopped[static_cast<std::size_t>(path)] = ref.frozen;
        long bad = count_increment_violations(ref, p);
        for (std::size_t li = 0; li < nl; ++li) {
            const int level = opt.levels[li];
            PathResult coarse;
            try {
                coarse = simulate_path(model, scheme, coarsen(fine, level), p);
            } catch (const StepError& e) {
                throw StepError(detail::path_context(path, level, e.what()), e.state(), e.step());
            }
            bad += level == opt.ref_level ? 0 : count_increment_violations(coarse, p);
            const long stride = 1L << (opt.ref_level - level);
            double sup = 0.0;
            for (long k = 0; k <= coarse.steps(); ++k)
                sup = std::max(sup, (ref.states.col(k * stride) - coarse.states.col(k)).norm());
            const double term = (ref.terminal() - coarse.terminal()).norm();
            sq_sup[base + li] = sup * sup;
            sq_term[base + li] = term * term;
            stopped[base + li] = coarse.frozen;
        }
        violations[static_cast<std::size_t>(path)] = bad;
    });

    ConvergenceReport rep;
    rep.scheme = scheme_name(scheme);
    rep.model = model.name;
    rep.levels = opt.levels;
    rep.paths = opt.paths;
    rep.ref_level = opt.ref_level;
    rep.seed = opt.seed;
    rep.t_final = opt.t_final;
    rep.params = p;
    std::vector<double> column(static_cast<std::size_t>(opt.paths));
    auto rms = [&](const std::vector<double>& sq, std::size_t li) {
        for (long i = 0; i < opt.paths; ++i) column[static_cast<std::size_t>(i)] = sq[static_cast<std::size_t>(i) * nl + li];
        return std::sqrt(pairwise_sum(column) / static_cast<double>(opt.paths));
    };
    for (std::size_t li = 0; li < nl; ++li) {
        rep.errors_sup.push_back(rms(sq_sup, li));
        rep.errors_terminal.push_back(rms(sq_term, li));
        long s = 0;
        for (long i = 0; i < opt.paths; ++i) s += stopped[static_cast<std::size_t>(i) * nl + li];
        rep.stopped.push_back(s);
    }
    for (char s : ref_stopped) rep.ref_stopped += s;
    for (long v : violations) rep.increment_violations += v;

    auto positive = [](const std::vector<double>& e) {
        return std::all_of(e.begin(), e.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
    };
    std::vector<int> sorted = opt.levels;
    std::sort(sorted.begin(), sorted.end());
    const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    if (nl >= 2 && distinct) {
        if (positive(rep.errors_sup)) rep.fit_sup = fit_rate(rep.levels, rep.errors_sup);
        if (positive(rep.errors_terminal)) rep.fit_terminal = fit_rate(rep.levels, rep.errors_terminal);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential moments
//
// Estimates E[exp(e^{-alpha T} U0(Y_T) + int_0^{T ^ tau} e^{-alpha r} U1(Y_r) dr)]
// per level, with the integral taken by the trapezoid rule on the grid.

struct ExpMomentLevel {
    int level = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double max_exponent = 0.0;
    double max_u0 = 0.0;
    long clipped = 0; // exponent beyond the double range; contributes exp(kClipExponent)
    long stopped = 0;
};

struct ExpMomentReport {
    std::string scheme;
    std::string model;
    std::vector<ExpMomentLevel> levels;
    double alpha = 0.0;
    long paths = 0;
    std::uint64_t seed = 0;
    long clipped_total() const {
        long c = 0;
        for (const auto& l : levels) c += l.clipped;
        return c;
    }
};

inline constexpr double kClipExponent = 700.0;

/// The exponent of the functional along one path.
inline double exp_moment_exponent(const PathResult& path, const LyapunovPair& pair, double t_final) {
    const long n = path.steps();
    const double h = path.h;
    const long upto = path.tau_index.value_or(n);
    double integral = 0.0;
    if (pair.u1) {
        for (long k = 0; k < upto; ++k) {
            const double a = std::exp(-pair.alpha * h * static_cast<double>(k)) * pair.u1(path.states.col(k));
            const double b = std::exp(-pair.alpha * h * static_cast<double>(k + 1)) * pair.u1(path.states.col(k + 1));
            integral += 0.5 * h * (a + b);
        }
    }
    return std::exp(-pair.alpha * t_final) * pair.u0(path.terminal()) + integral;
}

inline ExpMomentReport run_exp_moment(const ModelSpec& model, Scheme scheme, const LyapunovPair& pair,
                                      const StudyOptions& opt, const SchemeParams& p) {
    detail::check_study(opt);
    check_run_config(model, scheme, p);
    if (!pair.u0) throw ConfigError("Lyapunov pair needs U0");
    const int top = *std::max_element(opt.levels.begin(), opt.levels.end());
    const std::size_t nl = opt.levels.size();
    const bool with_dz = scheme == Scheme::Order15;

    std::vector<double> exponent(static_cast<std::size_t>(opt.paths) * nl);
    std::vector<double> max_u0(exponent.size());
    std::vector<char> stopped(exponent.size());

    parallel_for(opt.paths, opt.threads, [&](long path) {
        const BrownianLattice fine =
            sample_lattice(model.m, top, opt.t_final, with_dz, StreamKey{opt.seed, static_cast<std::uint64_t>(path)});
        for (std::size_t li = 0; li < nl; ++li) {
            const auto idx = static_cast<std::size_t>(path) * nl + li;
            PathResult res;
            try {
                res = simulate_path(model, scheme, coarsen(fine, opt.levels[li]), p);
            } catch (const StepError& e) {
                throw StepError(detail::path_context(path, opt.levels[li], e.what()), e.state(), e.step());
            }
            exponent[idx] = exp_moment_exponent(res, pair, opt.t_final);
            double mu = 0.0;
            for (long k = 0; k <= res.steps(); ++k) mu = std::max(mu, pair.u0(res.states.col(k)));
            max_u0[idx] = mu;
            stopped[idx] = res.frozen;
        }
    });

    ExpMomentReport rep;
    rep.scheme = scheme_name(scheme);
    rep.model = model.name;
    rep.alpha = pair.alpha;
    rep.paths = opt.paths;
    rep.seed = opt.seed;
    std::vector<double> values(static_cast<std::size_t>(opt.paths));
    std::vector<double> squares(values.size());
    for (std::size_t li = 0; li < nl; ++li) {
        ExpMomentLevel lv;
        lv.level = opt.levels[li];
        lv.max_exponent = -std::numeric_limits<double>::infinity();
        for (long i = 0; i < opt.paths; ++i) {
            const auto idx = static_cast<std::size_t>(i) * nl + li;
            double e = exponent[idx];
            if (!(e <= kClipExponent)) { // also catches NaN
                ++lv.clipped;
                e = kClipExponent;
            }
            lv.max_exponent = std::max(lv.max_exponent, exponent[idx]);
            lv.max_u0 = std::max(lv.max_u0, max_u0[idx]);
            lv.stopped += stopped[idx];
            values[static_cast<std::size_t>(i)] = std::exp(e);
        }
        const double n = static_cast<double>(opt.paths);
        lv.estimate = pairwise_sum(values) / n;
        for (std::size_t i = 0; i < values.size(); ++i) squares[i] = (values[i] - lv.estimate) * (values[i] - lv.estimate);
        lv.std_error = opt.paths > 1 ? std::sqrt(pairwise_sum(squares) / (n - 1.0) / n) : 0.0;
        rep.levels.push_back(lv);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Classical Euler-Maruyama next to the stopped tamed Euler scheme

struct BaselineLevel {
    int level = 0;
    double em_second_moment = 0.0;    // E|Y_T|^2 over non-overflowing paths (NaN if none)
    long em_overflows = 0;
    double tamed_second_moment = 0.0;
    long tamed_overflows = 0;
};

struct BaselineReport {
    std::string model;
    std::vector<BaselineLevel> levels;
    long paths = 0;
    std::uint64_t seed = 0;
};

inline BaselineReport run_baseline_euler(const ModelSpec& model, const StudyOptions& opt, const SchemeParams& p) {
    detail::check_study(opt);
    check_run_config(model, Scheme::Euler, p);
    const int top = *std::max_element(opt.levels.begin(), opt.levels.end());
    const std::size_t nl = opt.levels.size();
    const std::size_t total = static_cast<std::size_t>(opt.paths) * nl;
    std::vector<double> em_sq(total), tamed_sq(total);
    std::vector<char> em_over(total), tamed_over(total);

    parallel_for(opt.paths, opt.threads, [&](long path) {
        const BrownianLattice fine =
            sample_lattice(model.m, top, opt.t_final, false, StreamKey{opt.seed, static_cast<std::uint64_t>(path)});
        for (std::size_t li = 0; li < nl; ++li) {
            const auto idx = static_cast<std::size_t>(path) * nl + li;
            const BrownianLattice lat = coarsen(fine, opt.levels[li]);
            const auto em = simulate_euler_maruyama(model, lat);
            em_over[idx] = em.overflow;
            em_sq[idx] = em.overflow ? 0.0 : em.terminal.squaredNorm();
            try {
                const PathResult tamed = simulate_path(model, Scheme::Euler, lat, p);
                const bool bad = !tamed.states.allFinite();
                tamed_over[idx] = bad;
                tamed_sq[idx] = bad ? 0.0 : tamed.terminal().squaredNorm();
            } catch (const StepError&) {
                tamed_over[idx] = 1;
                tamed_sq[idx] = 0.0;
            }
        }
    });

    BaselineReport rep;
    rep.model = model.name;
    rep.paths = opt.paths;
    rep.seed = opt.seed;
    std::vector<double> column(static_cast<std::size_t>(opt.paths));
    auto mean_over_ok = [&](const std::vector<double>& sq, const std::vector<char>& over, std::size_t li, long& count) {
        count = 0;
        for (long i = 0; i < opt.paths; ++i) {
            const auto idx = static_cast<std::size_t>(i) * nl + li;
            column[static_cast<std::size_t>(i)] = sq[idx];
            count += over[idx];
        }
        const long ok = opt.paths - count;
        return ok > 0 ? pairwise_sum(column) / static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
    };
    for (std::size_t li = 0; li < nl; ++li) {
        BaselineLevel lv;
        lv.level = opt.levels[li];
        lv.em_second_moment = mean_over_ok(em_sq, em_over, li, lv.em_overflows);
        lv.tamed_second_moment = mean_over_ok(tamed_sq, tamed_over, li, lv.tamed_overflows);
        rep.levels.push_back(lv);
    }
    return rep;
}

} // namespace tamed

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracles.hpp"
#include "tamed/tamed.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace tamed;

namespace {

// Pinned tolerances and run sizes.
constexpr std::uint64_t kSeed = 42;
constexpr long kPaths = 1000;
constexpr int kRefLevel = 12;
const std::vector<int> kLevels{4, 5, 6, 7, 8, 9};
constexpr double kMilsteinLo = 0.85, kMilsteinHi = 1.15;
constexpr double kOrder15Lo = 1.3, kOrder15Hi = 1.7;
constexpr double kEulerLo = 0.35, kEulerHi = 0.65;
constexpr long kTamingSamples = 100000;
constexpr double kFdTolerance = 1e-5, kFdStep = 1e-6;
constexpr int kFdStates = 100;
constexpr int kTamingDerivSamples = 1000;
constexpr double kJacobianTol = 1e-6, kHessianTol = 1e-4;
constexpr double kCoarsenTol = 1e-12;
constexpr int kIteratedSamples = 10000, kIteratedSubsteps = 1 << 12;
constexpr double kSeTolerance = 3.0;
constexpr double kCollapseTol = 1e-15;
constexpr long kExpMomentPaths = 2000;
constexpr double kExpMomentFactor = 3.0;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s [%2d] %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

StudyOptions study() {
    StudyOptions o;
    o.levels = kLevels;
    o.ref_level = kRefLevel;
    o.paths = kPaths;
    o.seed = kSeed;
    return o;
}

bool in_range(const std::optional<RateFit>& f, double lo, double hi) { return f && f->slope >= lo && f->slope <= hi; }

double slope_or_nan(const std::optional<RateFit>& f) { return f ? f->slope : std::nan(""); }

Vector random_direction(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> g;
    Vector u(d);
    for (int i = 0; i < d; ++i) u(i) = g(rng);
    return u / u.norm();
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    const SchemeParams p; // delta 5, theta 1/4, gamma (1, 1, 1/2)
    long violations_1_to_3 = 0;

    // 1. Milstein, experimental psychology model
    {
        const auto rep = run_convergence(make_model("exp-psych"), Scheme::Milstein, study(), p);
        violations_1_to_3 += rep.increment_violations;
        report(1, in_range(rep.fit_sup, kMilsteinLo, kMilsteinHi), "Milstein rate on exp-psych",
               fmt("sup slope %.4f in [%.2f, %.2f]", slope_or_nan(rep.fit_sup), kMilsteinLo, kMilsteinHi) +
                   fmt(" (terminal %.4f)", slope_or_nan(rep.fit_terminal)));
    }

    // 2. order 1.5, stochastic Lorenz with additive noise
    {
        const auto rep = run_convergence(make_model("lorenz"), Scheme::Order15, study(), p);
        violations_1_to_3 += rep.increment_violations;
        report(2, in_range(rep.fit_sup, kOrder15Lo, kOrder15Hi), "order-1.5 rate on Lorenz",
               fmt("sup slope %.4f in [%.2f, %.2f]", slope_or_nan(rep.fit_sup), kOrder15Lo, kOrder15Hi) +
                   fmt(" (terminal %.4f, stopped ref paths %.0f)", slope_or_nan(rep.fit_terminal), rep.ref_stopped));
    }

    // 3. Euler, experimental psychology model
    {
        const auto rep = run_convergence(make_model("exp-psych"), Scheme::Euler, study(), p);
        violations_1_to_3 += rep.increment_violations;
        report(3, in_range(rep.fit_sup, kEulerLo, kEulerHi), "Euler rate on exp-psych",
               fmt("sup slope %.4f in [%.2f, %.2f]", slope_or_nan(rep.fit_sup), kEulerLo, kEulerHi) +
                   fmt(" (terminal %.4f)", slope_or_nan(rep.fit_terminal)));
        // informational, not gating: a stronger noise makes the h^(1/2) term visible
        const auto strong = run_convergence(make_model("exp-psych", {{"beta", 1.0}}), Scheme::Euler, study(), p);
        std::printf("info [ 3] Euler rate on exp-psych with beta=1: sup slope %.4f (terminal %.4f)\n",
                    slope_or_nan(strong.fit_sup), slope_or_nan(strong.fit_terminal));
    }

    // 4. |tame(x)| <= h^(theta/delta), exact inequality
    {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> log_r(-10.0, 10.0), log_h(-30.0, 0.0);
        long bad = 0;
        for (long i = 0; i < kTamingSamples; ++i) {
            const double h = std::exp2(log_h(rng));
            const Vector x = random_direction(rng, 1 + static_cast<int>(i % 3)) * std::pow(10.0, log_r(rng));
            if (tame(x, h, p).norm() > tame_bound(h, p)) ++bad;
        }
        report(4, bad == 0, "taming bound", fmt("%.0f violations over %.0f samples", bad, kTamingSamples));
    }

    // 5. one-step increment bound over every step of runs 1-3
    report(5, violations_1_to_3 == 0, "one-step increment bound",
           fmt("%.0f violating steps across criteria 1-3", violations_1_to_3));

    // 6. derivative callbacks vs finite differences on the seven gallery models
    {
        bool ok = true;
        std::string detail;
        for (const char* name : {"lorenz", "brownian-dynamics", "langevin", "exp-psych", "van-der-pol",
                                 "duffing-van-der-pol", "lotka-volterra"}) {
            const auto model = make_model(name);
            std::mt19937_64 rng(6);
            const auto rep = fd_check_derivatives(model, sample_box(model, kFdStates, rng), kFdStep, kFdTolerance);
            double worst = 0;
            for (const auto& c : rep.callbacks) worst = std::max(worst, c.present ? c.max_error : INFINITY);
            bool model_ok = rep.passed() && worst <= kFdTolerance;
            if (model.noise == NoiseStructure::Additive)
                model_ok = model_ok && rep.find("lg_g")->max_error == 0.0 && rep.find("llg")->max_error == 0.0;
            if (model.noise == NoiseStructure::Commutative) model_ok = model_ok && rep.commutativity_defect == 0.0;
            ok = ok && model_ok;
            detail += std::string(" ") + name + fmt("=%.1e", worst);
        }
        report(6, ok, "gallery derivatives", "max scaled errors" + detail);
    }

    // 7. taming derivatives vs finite differences
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> radius(0.05, 10.0), log_h(-12.0, -1.0);
        double worst_j = 0, worst_h = 0;
        for (int i = 0; i < kTamingDerivSamples; ++i) {
            const int d = 1 + i % 3;
            const double h = std::exp2(log_h(rng));
            const Vector x = random_direction(rng, d) * radius(rng);
            const Vector u = random_direction(rng, d);
            const double e1 = 1e-6, e2 = 1e-4;
            const Vector fd1 = (tame(x + e1 * u, h, p) - tame(x - e1 * u, h, p)) / (2 * e1);
            const Vector fd2 = (tame(x + e2 * u, h, p) - 2 * tame(x, h, p) + tame(x - e2 * u, h, p)) / (e2 * e2);
            worst_j = std::max(worst_j, (tame_jacobian_apply(x, u, h, p) - fd1).norm() / std::max(fd1.norm(), 1e-12));
            worst_h = std::max(worst_h, (tame_hessian_apply(x, u, h, p) - fd2).norm() / std::max(fd2.norm(), 1e-12));
        }
        report(7, worst_j <= kJacobianTol && worst_h <= kHessianTol, "taming derivatives",
               fmt("jacobian rel err %.2e (tol %.0e), ", worst_j, kJacobianTol) +
                   fmt("hessian rel err %.2e (tol %.0e)", worst_h, kHessianTol));
    }

    // 8. coarsening identities
    {
        double sum_err = 0, compose_err = 0, trans_err = 0;
        for (std::uint64_t path = 0; path < 50; ++path) {
            const auto fine = sample_lattice(2, 12, 1.0, true, {kSeed, path});
            const double hf = fine.step_size();
            const auto half = coarsen(fine, 11);
            for (long k = 0; k < half.steps(); ++k)
                for (int j = 0; j < 2; ++j) {
                    sum_err = std::max(sum_err, std::abs(half.dW(j, k) - fine.dW(j, 2 * k) - fine.dW(j, 2 * k + 1)));
                    const double z = (*fine.dZ)(j, 2 * k) + (*fine.dZ)(j, 2 * k + 1) + fine.dW(j, 2 * k) * hf;
                    compose_err = std::max(compose_err, std::abs((*half.dZ)(j, k) - z));
                }
            for (int b : {0, 3, 7}) {
                const auto direct = coarsen(fine, b), chained = coarsen(coarsen(half, 9), b);
                trans_err = std::max({trans_err, (direct.dW - chained.dW).lpNorm<Eigen::Infinity>(),
                                      (*direct.dZ - *chained.dZ).lpNorm<Eigen::Infinity>()});
                sum_err = std::max(sum_err, (direct.terminal() - fine.terminal()).lpNorm<Eigen::Infinity>());
            }
        }
        report(8, sum_err <= kCoarsenTol && compose_err <= kCoarsenTol && trans_err <= kCoarsenTol,
               "Brownian coarsening",
               fmt("sum %.1e, two-step dZ %.1e, transitivity %.1e", sum_err, compose_err, trans_err));
    }

    // 9. closed-form iterated integrals vs nested Ito sums
    {
        std::mt19937_64 rng(9);
        const double h = 0.5;
        std::vector<double> c11, s11, c111, s111;
        for (int i = 0; i < kIteratedSamples; ++i) {
            const auto s = oracle::nested_ito_sums(rng, h, kIteratedSubsteps);
            c11.push_back(0.5 * (s.dw * s.dw - h));
            c111.push_back(s.dw * s.dw * s.dw / 6 - 0.5 * h * s.dw);
            s11.push_back(s.i11);
            s111.push_back(s.i111);
        }
        auto match = [](const std::vector<double>& a, const std::vector<double>& b, double& z_mean, double& z_var) {
            const auto sa = oracle::stats(a), sb = oracle::stats(b);
            z_mean = std::abs(sa.mean - sb.mean) / std::hypot(sa.se_mean, sb.se_mean);
            z_var = std::abs(sa.var - sb.var) / std::hypot(sa.se_var, sb.se_var);
            return z_mean <= kSeTolerance && z_var <= kSeTolerance;
        };
        double m11, v11, m111, v111;
        const bool ok11 = match(c11, s11, m11, v11), ok111 = match(c111, s111, m111, v111);
        report(9, ok11 && ok111, "iterated integrals",
               fmt("I11 mean/var gaps %.2f/%.2f SE, ", m11, v11) + fmt("I111 mean/var gaps %.2f/%.2f SE", m111, v111));
    }

    // 10. Milstein and Euler coincide on additive noise
    {
        const auto model = make_model("lorenz");
        double worst = 0;
        for (std::uint64_t path = 0; path < 100; ++path) {
            const auto lat = sample_lattice(3, 12, 1.0, false, {kSeed, path});
            const auto e = simulate_path(model, Scheme::Euler, lat, p);
            const auto m = simulate_path(model, Scheme::Milstein, lat, p);
            worst = std::max(worst, (e.states - m.states).lpNorm<Eigen::Infinity>());
        }
        report(10, worst <= kCollapseTol, "additive-noise collapse", fmt("max |Milstein - Euler| = %.1e", worst));
    }

    // 11. exponential moments and the untamed baseline
    {
        const auto& entry = find_model("langevin");
        const auto params = resolve_params(entry, {});
        StudyOptions o;
        o.levels = {5, 6, 7, 8, 9, 10};
        o.ref_level = 10;
        o.paths = kExpMomentPaths;
        o.seed = kSeed;
        const auto rep = run_exp_moment(entry.build(params), Scheme::Euler, entry.lyapunov(params), o, p);
        double lo = INFINITY, hi = 0;
        for (const auto& l : rep.levels) lo = std::min(lo, l.estimate), hi = std::max(hi, l.estimate);
        const bool stable = lo > 0 && hi / lo <= kExpMomentFactor && rep.clipped_total() == 0;

        StudyOptions b;
        b.levels = {3, 4, 5, 6, 7, 8, 9, 10};
        b.ref_level = 10;
        b.paths = 200;
        b.seed = kSeed;
        const auto base = run_baseline_euler(make_model("cubic", {{"x0", 5.0}}), b, p);
        const auto& coarse = base.levels.front();
        long tamed_over = 0;
        for (const auto& l : base.levels) tamed_over += l.tamed_overflows;
        const bool baseline = coarse.em_overflows >= 1 && tamed_over == 0;
        report(11, stable && baseline, "exponential moments and baseline",
               fmt("Langevin estimates in [%.4f, %.4f], ratio %.3f, ", lo, hi, hi / lo) +
                   fmt("clipped %.0f; EM overflows at level 3: %.0f, tamed overflows: %.0f", rep.clipped_total(),
                       coarse.em_overflows, tamed_over));
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 11 criteria failed (%.1f s)\n", failures, secs);
    return failures == 0 ? 0 : 1;
}

#include "oracles.hpp"
#include "tamed/gallery.hpp"
#include "tamed/harness.hpp"
#include "tamed/report_io.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

using namespace tamed;

namespace {

StudyOptions small_study(std::vector<int> levels, int ref, long paths, unsigned threads = 1) {
    StudyOptions o;
    o.levels = std::move(levels);
    o.ref_level = ref;
    o.paths = paths;
    o.seed = 17;
    o.threads = threads;
    return o;
}

int count_lines(const std::string& s, const std::string& prefix) {
    std::istringstream is(s);
    int n = 0;
    for (std::string line; std::getline(is, line);)
        if (line.rfind(prefix, 0) == 0) ++n;
    return n;
}

} // namespace

TEST(PairwiseSum, MatchesExactIntegerSum) {
    std::vector<double> v(1001);
    std::iota(v.begin(), v.end(), 1.0);
    EXPECT_EQ(pairwise_sum(v), 1001.0 * 1002.0 / 2.0);
    EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(FitRate, RecoversExactPowerLaw) {
    const std::vector<int> levels{4, 5, 6, 7};
    std::vector<double> errors;
    for (int l : levels) errors.push_back(3.0 * std::pow(2.0, -1.5 * l));
    const auto fit = fit_rate(levels, errors);
    EXPECT_NEAR(fit.slope, 1.5, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log2(3.0), 1e-12);
    EXPECT_NEAR(fit.residual, 0.0, 1e-20);
}

TEST(FitRate, AgreesWithIndependentOls) {
    const std::vector<int> levels{3, 4, 5, 6, 7, 8};
    const std::vector<double> errors{0.3, 0.17, 0.07, 0.041, 0.019, 0.011};
    std::vector<double> x, y;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        x.push_back(-levels[i]);
        y.push_back(std::log2(errors[i]));
    }
    EXPECT_NEAR(fit_rate(levels, errors).slope, oracle::ols_slope(x, y), 1e-12);
}

TEST(FitRate, Errors) {
    EXPECT_THROW(fit_rate(std::vector<int>{4}, std::vector<double>{0.1}), ConfigError);
    EXPECT_THROW(fit_rate(std::vector<int>{4, 5}, std::vector<double>{0.1, 0.0}), DomainError);
    EXPECT_THROW(fit_rate(std::vector<int>{4, 4}, std::vector<double>{0.1, 0.2}), ConfigError);
    EXPECT_THROW(fit_rate(std::vector<int>{4, 5}, std::vector<double>{0.1}), ConfigError);
}

TEST(ParallelFor, VisitsEachIndexOnceAndRethrowsLowestFailure) {
    std::vector<int> hits(257, 0);
    parallel_for(257, 4, [&](long i) { ++hits[static_cast<std::size_t>(i)]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    try {
        parallel_for(100, 3, [](long i) {
            if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
        });
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "37");
    }
}

TEST(Convergence, ReportShapeAndZeroErrorAtReference) {
    const auto model = make_model("exp-psych");
    const auto rep = run_convergence(model, Scheme::Milstein, small_study({3, 4, 5, 7}, 7, 20), SchemeParams{});
    EXPECT_EQ(rep.levels.size(), 4u);
    EXPECT_EQ(rep.errors_sup.size(), 4u);
    EXPECT_EQ(rep.errors_sup.back(), 0.0);
    EXPECT_EQ(rep.errors_terminal.back(), 0.0);
    EXPECT_FALSE(rep.fit_sup.has_value()); // a zero error cannot be fitted
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_GT(rep.errors_sup[i], 0.0);
        EXPECT_GE(rep.errors_sup[i], rep.errors_terminal[i]);
    }
    EXPECT_EQ(rep.increment_violations, 0);
}

TEST(Convergence, IndependentOfThreadCount) {
    const auto model = make_model("exp-psych");
    const auto one = run_convergence(model, Scheme::Order15, small_study({3, 4, 5}, 8, 37, 1), SchemeParams{});
    const auto many = run_convergence(model, Scheme::Order15, small_study({3, 4, 5}, 8, 37, 4), SchemeParams{});
    EXPECT_EQ(one.errors_sup, many.errors_sup);
    EXPECT_EQ(one.errors_terminal, many.errors_terminal);
    std::ostringstream a, b;
    write_convergence_csv(a, one);
    write_convergence_csv(b, many);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Convergence, MilsteinSlopeNearOneAtSmallScale) {
    const auto model = make_model("exp-psych");
    const auto rep = run_convergence(model, Scheme::Milstein, small_study({3, 4, 5, 6}, 10, 200), SchemeParams{});
    ASSERT_TRUE(rep.fit_sup.has_value());
    EXPECT_NEAR(rep.fit_sup->slope, 1.0, 0.2);
}

TEST(Convergence, BadOptions) {
    const auto model = make_model("exp-psych");
    EXPECT_THROW(run_convergence(model, Scheme::Euler, small_study({3, 4}, 3, 10), SchemeParams{}), ConfigError);
    EXPECT_THROW(run_convergence(model, Scheme::Euler, small_study({3, 4}, 6, 0), SchemeParams{}), ConfigError);
    EXPECT_THROW(run_convergence(model, Scheme::Euler, small_study({}, 6, 10), SchemeParams{}), ConfigError);
    auto lv = make_model("lotka-volterra");
    EXPECT_THROW(run_convergence(lv, Scheme::Order15, small_study({3, 4}, 6, 10), SchemeParams{}), ConfigError);
}

TEST(Convergence, StepFailureNamesPathAndLevel) {
    auto model = make_model("cubic");
    model.drift = [](const Vector& x) -> Vector {
        return x(0) < 0.95 ? Vector::Constant(1, NAN) : Vector::Constant(1, -x(0));
    };
    try {
        run_convergence(model, Scheme::Euler, small_study({2, 3}, 5, 4), SchemeParams{});
        FAIL();
    } catch (const StepError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("path 0"), std::string::npos) << what;
        EXPECT_NE(what.find("level"), std::string::npos) << what;
        EXPECT_NE(what.find("step"), std::string::npos) << what;
    }
}

TEST(ExpMoment, ExponentIsTrapezoidUpToTau) {
    PathResult path;
    path.h = 0.25;
    path.states = Matrix::Zero(1, 5);
    path.states << 0, 1, 2, 3, 3;
    LyapunovPair pair;
    pair.u0 = [](const Vector& x) { return x(0); };
    pair.u1 = [](const Vector& x) { return x(0); };
    pair.alpha = 0.0;
    // trapezoid over all four steps: 0.25 * (0/2 + 1 + 2 + 3 + 3/2) = 1.875
    EXPECT_NEAR(exp_moment_exponent(path, pair, 1.0), 3.0 + 1.875, 1e-15);
    path.tau_index = 2; // integral stops at t_2
    EXPECT_NEAR(exp_moment_exponent(path, pair, 1.0), 3.0 + 0.25 * (0.5 + 1.5), 1e-15);
    pair.alpha = 1.0;
    pair.u1 = [](const Vector&) { return 0.0; };
    EXPECT_NEAR(exp_moment_exponent(path, pair, 1.0), std::exp(-1.0) * 3.0, 1e-15);
}

// |X_t| = 1 is conserved for the psychology model, so E[exp(|Y_T|^2)] ~ e.
TEST(ExpMoment, ExpPsychologyNearE) {
    const auto model = make_model("exp-psych");
    const auto rep = run_exp_moment(model, Scheme::Milstein, exp_psychology_pair(), small_study({5, 7, 9}, 9, 100),
                                    SchemeParams{});
    ASSERT_EQ(rep.levels.size(), 3u);
    for (const auto& l : rep.levels) {
        EXPECT_NEAR(l.estimate, std::exp(1.0), 0.03) << l.level;
        EXPECT_EQ(l.clipped, 0);
        EXPECT_GT(l.estimate, 0.0);
    }
}

TEST(ExpMoment, HugeExponentIsClippedAndCounted) {
    const auto model = make_model("ou");
    LyapunovPair pair;
    pair.u0 = [](const Vector&) { return 1e4; };
    const auto rep = run_exp_moment(model, Scheme::Euler, pair, small_study({3}, 3, 10), SchemeParams{});
    EXPECT_EQ(rep.levels[0].clipped, 10);
    EXPECT_EQ(rep.clipped_total(), 10);
    EXPECT_TRUE(std::isfinite(rep.levels[0].estimate));
}

TEST(Baseline, EulerMaruyamaOverflowsTamedDoesNot) {
    const auto model = make_model("cubic", {{"x0", 5.0}});
    const auto rep = run_baseline_euler(model, small_study({3, 8}, 8, 50), SchemeParams{});
    EXPECT_GT(rep.levels[0].em_overflows, 0);
    EXPECT_EQ(rep.levels[0].tamed_overflows, 0);
    EXPECT_EQ(rep.levels[1].em_overflows, 0);
    EXPECT_TRUE(std::isfinite(rep.levels[1].em_second_moment));
}

TEST(ReportIo, CsvLayout) {
    const auto model = make_model("exp-psych");
    const auto rep = run_convergence(model, Scheme::Milstein, small_study({3, 4, 5}, 7, 10), SchemeParams{});
    std::ostringstream os;
    write_convergence_csv(os, rep);
    const std::string csv = os.str();
    EXPECT_EQ(count_lines(csv, "scheme,model,level,h,m_paths,err_sup_l2,err_T_l2"), 1);
    EXPECT_EQ(count_lines(csv, "milstein,exp-psych,"), 4); // three levels + slope footer
    EXPECT_EQ(count_lines(csv, "milstein,exp-psych,slope,"), 1);
    EXPECT_NE(csv.find("delta=5 theta=0.25 gamma1=1 gamma2=1 gamma3=0.5 t_final=1"), std::string::npos);
    EXPECT_EQ(fmt17(0.1), "0.10000000000000001");
}

TEST(ReportIo, SvgIsStandalone) {
    const auto model = make_model("exp-psych");
    const auto rep = run_convergence(model, Scheme::Milstein, small_study({3, 4, 5}, 7, 10), SchemeParams{});
    std::ostringstream os;
    write_convergence_svg(os, rep);
    const std::string svg = os.str();
    EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);
    std::size_t guides = 0;
    for (auto pos = svg.find("stroke-dasharray"); pos != std::string::npos; pos = svg.find("stroke-dasharray", pos + 1))
        ++guides;
    EXPECT_EQ(guides, 3u);
}

#pragma once

// CSV and SVG output for convergence reports.

#include "tamed/harness.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

namespace tamed {

/// Shortest round-trip rendering with 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_params_comment(std::ostream& os, const SchemeParams& p, double t_final) {
    os << "# delta=" << fmt17(p.delta) << " theta=" << fmt17(p.theta) << " gamma1=" << fmt17(p.gamma1)
       << " gamma2=" << fmt17(p.gamma2) << " gamma3=" << fmt17(p.gamma3) << " t_final=" << fmt17(t_final) << '\n';
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
    os << "# strong convergence study, reference = same scheme at ref_level\n";
    write_params_comment(os, rep.params, rep.t_final);
    os << "# ref_level=" << rep.ref_level << " paths=" << rep.paths << " seed=" << rep.seed
       << " ref_stopped=" << rep.ref_stopped << " increment_violations=" << rep.increment_violations << '\n';
    os << "scheme,model,level,h,m_paths,err_sup_l2,err_T_l2\n";
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const double h = rep.t_final / static_cast<double>(1L << rep.levels[i]);
        os << rep.scheme << ',' << rep.model << ',' << rep.levels[i] << ',' << fmt17(h) << ',' << rep.paths << ','
           << fmt17(rep.errors_sup[i]) << ',' << fmt17(rep.errors_terminal[i]) << '\n';
    }
    auto slope = [](const std::optional<RateFit>& f) { return f ? fmt17(f->slope) : std::string("nan"); };
    os << rep.scheme << ',' << rep.model << ",slope,,," << slope(rep.fit_sup) << ',' << slope(rep.fit_terminal) << '\n';
}

inline void write_exp_moment_csv(std::ostream& os, const ExpMomentReport& rep, const SchemeParams& p, double t_final) {
    os << "# exponential moment diagnostic, alpha=" << fmt17(rep.alpha) << '\n';
    write_params_comment(os, p, t_final);
    os << "# paths=" << rep.paths << " seed=" << rep.seed << '\n';
    os << "scheme,model,level,estimate,std_error,max_exponent,max_u0,clipped,stopped\n";
    for (const auto& l : rep.levels)
        os << rep.scheme << ',' << rep.model << ',' << l.level << ',' << fmt17(l.estimate) << ',' << fmt17(l.std_error)
           << ',' << fmt17(l.max_exponent) << ',' << fmt17(l.max_u0) << ',' << l.clipped << ',' << l.stopped << '\n';
}

inline void write_baseline_csv(std::ostream& os, const BaselineReport& rep, const SchemeParams& p, double t_final) {
    os << "# classical Euler-Maruyama against stopped tamed Euler on identical increments\n";
    write_params_comment(os, p, t_final);
    os << "# paths=" << rep.paths << " seed=" << rep.seed << '\n';
    os << "model,level,em_second_moment,em_overflows,tamed_second_moment,tamed_overflows\n";
    for (const auto& l : rep.levels)
        os << rep.model << ',' << l.level << ',' << fmt17(l.em_second_moment) << ',' << l.em_overflows << ','
           << fmt17(l.tamed_second_moment) << ',' << l.tamed_overflows << '\n';
}

/// Log-log plot of both error measures against h with slope guides.
inline void write_convergence_svg(std::ostream& os, const ConvergenceReport& rep) {
    const double W = 640, H = 480, L = 70, R = 20, T = 30, B = 60;
    std::vector<double> hs, all;
    for (int l : rep.levels) hs.push_back(std::log10(rep.t_final / static_cast<double>(1L << l)));
    for (double e : rep.errors_sup)
        if (e > 0) all.push_back(std::log10(e));
    for (double e : rep.errors_terminal)
        if (e > 0) all.push_back(std::log10(e));
    if (hs.empty() || all.empty()) throw DomainError("nothing to plot");
    double x0 = *std::min_element(hs.begin(), hs.end()), x1 = *std::max_element(hs.begin(), hs.end());
    double y0 = *std::min_element(all.begin(), all.end()), y1 = *std::max_element(all.begin(), all.end());
    if (x1 - x0 < 1e-9) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
    const double pad_x = 0.05 * (x1 - x0), pad_y = 0.1 * (y1 - y0);
    x0 -= pad_x; x1 += pad_x; y0 -= pad_y; y1 += pad_y;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto f = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<defs><clipPath id=\"plot\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
       << "\" height=\"" << H - T - B << "\"/></clipPath></defs>\n"
       << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\">" << rep.scheme << " on " << rep.model
       << "</text>\n"
       << "<text x=\"" << W / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">log10 h</text>\n"
       << "<text x=\"18\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << H / 2
       << ")\">log10 L2 error</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double x = x0 + (x1 - x0) * k / 4.0, y = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << f(px(x)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << f(x) << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << f(py(y) + 4) << "\" text-anchor=\"end\">" << f(y) << "</text>\n";
    }
    // guides through the first sup-error point
    const double gx = hs.front(), gy = rep.errors_sup.front() > 0 ? std::log10(rep.errors_sup.front()) : y0;
    const char* dash[] = {"2,2", "6,3", "10,4"};
    const double slopes[] = {0.5, 1.0, 1.5};
    os << "<g clip-path=\"url(#plot)\">\n";
    for (int i = 0; i < 3; ++i) {
        os << "<line x1=\"" << f(px(x0)) << "\" y1=\"" << f(py(gy + slopes[i] * (x0 - gx))) << "\" x2=\"" << f(px(x1))
           << "\" y2=\"" << f(py(gy + slopes[i] * (x1 - gx))) << "\" stroke=\"gray\" stroke-dasharray=\"" << dash[i]
           << "\"/>\n";
    }
    auto series = [&](const std::vector<double>& e, const char* colour) {
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0) os << f(px(hs[i])) << ',' << f(py(std::log10(e[i]))) << ' ';
        os << "\"/>\n";
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] > 0)
                os << "<circle cx=\"" << f(px(hs[i])) << "\" cy=\"" << f(py(std::log10(e[i]))) << "\" r=\"3\" fill=\""
                   << colour << "\"/>\n";
    };
    series(rep.errors_sup, "#1f77b4");
    series(rep.errors_terminal, "#d62728");
    os << "</g>\n";
    const double lx = L + 10, ly = T + 16;
    os << "<text x=\"" << lx << "\" y=\"" << ly << "\" fill=\"#1f77b4\">sup-norm error</text>\n"
       << "<text x=\"" << lx << "\" y=\"" << ly + 16 << "\" fill=\"#d62728\">terminal error</text>\n"
       << "<text x=\"" << lx << "\" y=\"" << ly + 32 << "\" fill=\"gray\">guides: slope 0.5, 1, 1.5</text>\n"
       << "</svg>\n";
}

} // namespace tamed

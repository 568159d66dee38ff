#pragma once

// Command-line front end. tools/tamed.cpp is a thin main() around
// parse_and_dispatch; keeping the logic here lets tests drive it directly.

#include "tamed/gallery.hpp"
#include "tamed/harness.hpp"
#include "tamed/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace tamed::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kMisuse = 2 };

struct RunConfig {
    std::string subcommand;
    std::string model;
    std::string scheme = "milstein";
    double t_final = 1.0;
    int level_lo = 4;
    int level_hi = 9;
    int ref_level = 12;
    int level = 10; // simulate
    long paths = 1000;
    std::uint64_t seed = 42;
    SchemeParams params;
    ParamMap overrides;
    unsigned threads = 0;
    std::string out;
    std::string svg;

    std::vector<int> levels() const {
        std::vector<int> v;
        for (int l = level_lo; l <= level_hi; ++l) v.push_back(l);
        return v;
    }
    StudyOptions study() const { return {levels(), ref_level, paths, seed, t_final, threads}; }
};

inline std::pair<int, int> parse_levels(const std::string& text) {
    const auto colon = text.find(':');
    try {
        std::size_t used = 0;
        if (colon == std::string::npos) {
            const int l = std::stoi(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return {l, l};
        }
        const std::string a = text.substr(0, colon), b = text.substr(colon + 1);
        const int lo = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        const int hi = std::stoi(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        if (lo > hi) throw ConfigError("level range '" + text + "' is empty");
        return {lo, hi};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad level range '" + text + "', expected a:b");
    }
}

inline std::pair<std::string, double> parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("bad --param '" + text + "', expected key=value");
    try {
        std::size_t used = 0;
        const std::string v = text.substr(eq + 1);
        const double value = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return {text.substr(0, eq), value};
    } catch (const std::exception&) {
        throw ConfigError("bad --param value in '" + text + "'");
    }
}

/// Applies a flat JSON object to `cfg`. Model parameters use keys "param.<name>".
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        auto num = [&]() -> double {
            if (!value.is_number()) throw ConfigError("config key '" + key + "' must be a number");
            return value.get<double>();
        };
        auto integer = [&]() -> long {
            if (!value.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
            return value.get<long>();
        };
        auto str = [&]() -> std::string {
            if (!value.is_string()) throw ConfigError("config key '" + key + "' must be a string");
            return value.get<std::string>();
        };
        if (key == "model") cfg.model = str();
        else if (key == "scheme") cfg.scheme = str();
        else if (key == "t_final") cfg.t_final = num();
        else if (key == "levels") std::tie(cfg.level_lo, cfg.level_hi) = parse_levels(str());
        else if (key == "ref_level") cfg.ref_level = static_cast<int>(integer());
        else if (key == "level") cfg.level = static_cast<int>(integer());
        else if (key == "paths") cfg.paths = integer();
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(integer());
        else if (key == "delta") cfg.params.delta = num();
        else if (key == "theta") cfg.params.theta = num();
        else if (key == "gamma1") cfg.params.gamma1 = num();
        else if (key == "gamma2") cfg.params.gamma2 = num();
        else if (key == "gamma3") cfg.params.gamma3 = num();
        else if (key == "threads") cfg.threads = static_cast<unsigned>(integer());
        else if (key == "out") cfg.out = str();
        else if (key == "svg") cfg.svg = str();
        else if (key.rfind("param.", 0) == 0) cfg.overrides[key.substr(6)] = num();
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON");
    }
    apply_json(cfg, j);
}

// Flags captured as optionals so they can be layered over the config file.
struct FlagValues {
    std::optional<std::string> config, model, scheme, levels, out, svg;
    std::optional<double> t_final, delta, theta, gamma1, gamma2, gamma3;
    std::optional<int> ref_level, level;
    std::optional<long> paths;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::vector<std::string> params;
};

inline void add_common_flags(CLI::App& sub, FlagValues& f) {
    sub.add_option("--config", f.config, "flat JSON config; flags override it");
    sub.add_option("--model", f.model, "model name (see `models`)");
    sub.add_option("--scheme", f.scheme, "euler | milstein | order15 | baseline-em");
    sub.add_option("--t-final", f.t_final, "time horizon T");
    sub.add_option("--levels", f.levels, "inclusive level range a:b, N = 2^level");
    sub.add_option("--ref-level", f.ref_level, "reference level");
    sub.add_option("--paths", f.paths, "Monte-Carlo paths");
    sub.add_option("--seed", f.seed, "RNG seed");
    sub.add_option("--delta", f.delta);
    sub.add_option("--theta", f.theta);
    sub.add_option("--gamma1", f.gamma1);
    sub.add_option("--gamma2", f.gamma2);
    sub.add_option("--gamma3", f.gamma3);
    sub.add_option("--param", f.params, "model parameter override key=value (repeatable)");
    sub.add_option("--threads", f.threads, "worker threads, 0 = all cores");
    sub.add_option("--out", f.out, "output CSV (stdout when omitted)");
    sub.add_option("--svg", f.svg, "log-log plot (converge only)");
}

inline RunConfig resolve_config(const std::string& subcommand, const FlagValues& f) {
    RunConfig cfg;
    cfg.subcommand = subcommand;
    if (f.config) load_config_file(cfg, *f.config);
    if (f.model) cfg.model = *f.model;
    if (f.scheme) cfg.scheme = *f.scheme;
    if (f.t_final) cfg.t_final = *f.t_final;
    if (f.levels) std::tie(cfg.level_lo, cfg.level_hi) = parse_levels(*f.levels);
    if (f.ref_level) cfg.ref_level = *f.ref_level;
    if (f.level) cfg.level = *f.level;
    if (f.paths) cfg.paths = *f.paths;
    if (f.seed) cfg.seed = *f.seed;
    if (f.delta) cfg.params.delta = *f.delta;
    if (f.theta) cfg.params.theta = *f.theta;
    if (f.gamma1) cfg.params.gamma1 = *f.gamma1;
    if (f.gamma2) cfg.params.gamma2 = *f.gamma2;
    if (f.gamma3) cfg.params.gamma3 = *f.gamma3;
    if (f.threads) cfg.threads = *f.threads;
    if (f.out) cfg.out = *f.out;
    if (f.svg) cfg.svg = *f.svg;
    for (const auto& p : f.params) cfg.overrides.insert_or_assign(parse_override(p).first, parse_override(p).second);
    return cfg;
}

/// Fail-fast validation of everything that does not need a simulation.
inline void validate(const RunConfig& cfg) {
    if (cfg.subcommand != "models" && cfg.model.empty()) throw ConfigError("--model is required");
    if (cfg.paths < 1) throw ConfigError("--paths must be >= 1");
    if (!(cfg.t_final > 0.0 && std::isfinite(cfg.t_final))) throw ConfigError("--t-final must be positive");
    if (cfg.level_lo < 0 || cfg.level_hi > 30) throw ConfigError("levels must lie in [0, 30]");
    if (cfg.ref_level < cfg.level_hi || cfg.ref_level > 30) throw ConfigError("--ref-level must lie in [max level, 30]");
    if (cfg.level < 0 || cfg.level > 30) throw ConfigError("--level must lie in [0, 30]");
    cfg.params.validate();
    check_scheme_constraint(cfg.params, cfg.scheme == "baseline-em" ? Scheme::Euler : parse_scheme(cfg.scheme));
    if (!cfg.svg.empty() && cfg.subcommand != "converge") throw ConfigError("--svg applies to converge only");
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
        if (!path_.empty()) {
            file_.open(path_, std::ios::binary | std::ios::trunc);
            if (!file_) throw ConfigError("cannot write '" + path_ + "'");
        }
    }
    std::ostream& stream() { return path_.empty() ? fallback_ : file_; }
    void finish() {
        if (path_.empty()) return;
        file_.flush();
        if (!file_) throw ConfigError("write to '" + path_ + "' failed");
    }

private:
    std::string path_;
    std::ostream& fallback_;
    std::ofstream file_;
};

inline int run_models(std::ostream& out) {
    for (const auto& e : model_registry()) {
        out << e.name << ": " << e.summary << '\n' << "   ";
        for (const auto& [k, v] : e.defaults) out << ' ' << k << '=' << fmt17(v);
        out << (e.lyapunov ? "   [Lyapunov pair]" : "") << '\n';
    }
    return kOk;
}

inline int run_converge(const RunConfig& cfg, const ModelSpec& model, std::ostream& out, std::ostream& err) {
    Output csv(cfg.out, out);
    if (cfg.scheme == "baseline-em") {
        const auto rep = run_baseline_euler(model, cfg.study(), cfg.params);
        write_baseline_csv(csv.stream(), rep, cfg.params, cfg.t_final);
        csv.finish();
        return kOk;
    }
    std::optional<Output> svg;
    if (!cfg.svg.empty()) svg.emplace(cfg.svg, out);
    const auto rep = run_convergence(model, parse_scheme(cfg.scheme), cfg.study(), cfg.params);
    write_convergence_csv(csv.stream(), rep);
    csv.finish();
    if (svg) {
        write_convergence_svg(svg->stream(), rep);
        svg->finish();
    }
    if (!cfg.out.empty() && rep.fit_sup)
        err << rep.scheme << " on " << rep.model << ": sup slope " << fmt17(rep.fit_sup->slope) << '\n';
    return kOk;
}

inline int run_simulate(const RunConfig& cfg, const ModelSpec& model, std::ostream& out) {
    if (cfg.scheme == "baseline-em") throw ConfigError("simulate supports euler, milstein and order15");
    const Scheme scheme = parse_scheme(cfg.scheme);
    check_run_config(model, scheme, cfg.params);
    Output csv(cfg.out, out);
    const auto lat = sample_lattice(model.m, cfg.level, cfg.t_final, scheme == Scheme::Order15, StreamKey{cfg.seed, 0});
    const auto path = simulate_path(model, scheme, lat, cfg.params);
    auto& os = csv.stream();
    os << "# " << scheme_name(scheme) << " on " << model.name << ", level " << cfg.level << ", seed " << cfg.seed;
    if (path.tau_index) os << ", stopped at step " << *path.tau_index;
    os << '\n';
    write_params_comment(os, cfg.params, cfg.t_final);
    os << 't';
    for (int i = 0; i < model.d; ++i) os << ",x" << i + 1;
    os << '\n';
    for (long k = 0; k <= path.steps(); ++k) {
        os << fmt17(path.h * static_cast<double>(k));
        for (int i = 0; i < model.d; ++i) os << ',' << fmt17(path.states(i, k));
        os << '\n';
    }
    csv.finish();
    return kOk;
}

inline int run_expmoment(const RunConfig& cfg, const ModelEntry& entry, const ModelSpec& model, std::ostream& out) {
    if (!entry.lyapunov) throw ConfigError("model '" + entry.name + "' has no default Lyapunov pair");
    if (cfg.scheme == "baseline-em") throw ConfigError("expmoment supports euler, milstein and order15");
    Output csv(cfg.out, out);
    const auto pair = entry.lyapunov(resolve_params(entry, cfg.overrides));
    const auto rep = run_exp_moment(model, parse_scheme(cfg.scheme), pair, cfg.study(), cfg.params);
    write_exp_moment_csv(csv.stream(), rep, cfg.params, cfg.t_final);
    csv.finish();
    return kOk;
}

struct TamingSweep {
    long samples = 0;
    long value_violations = 0;
    long jacobian_violations = 0;
    long deviation_violations = 0;
    long hessian_violations = 0;
};

/// Random (x, h) sweep of the taming map against its closed-form bounds.
inline TamingSweep taming_sweep(const SchemeParams& p, int d, long samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_r(-3.0, 3.0), log_h(-14.0, -1.0);
    std::normal_distribution<double> gauss;
    TamingSweep s;
    s.samples = samples;
    for (long i = 0; i < samples; ++i) {
        const double h = std::exp2(log_h(rng));
        Vector x(d), u(d);
        for (int k = 0; k < d; ++k) x(k) = gauss(rng), u(k) = gauss(rng);
        x *= std::pow(10.0, log_r(rng)) / x.norm();
        u /= u.norm();
        const double r = x.norm();
        if (tame(x, h, p).norm() > tame_bound(h, p)) ++s.value_violations;
        const Vector ju = tame_jacobian_apply(x, u, h, p);
        const double slack = 1e-12;
        if (ju.norm() > jacobian_norm_bound(r, h, p) * (1 + slack)) ++s.jacobian_violations;
        // J u - u cancels to O(eps) when q is tiny, so allow a few ulps absolutely
        const double ulps = 4.0 * std::numeric_limits<double>::epsilon();
        if ((ju - u).norm() > jacobian_deviation_bound(r, h, p) * (1 + slack) + ulps) ++s.deviation_violations;
        if (tame_hessian_apply(x, u, h, p).norm() > hessian_norm_bound(r, h, p) * (1 + slack)) ++s.hessian_violations;
    }
    return s;
}

inline int run_check(const RunConfig& cfg, const ModelEntry& entry, const ModelSpec& model, std::ostream& out) {
    std::mt19937_64 rng(cfg.seed);
    const auto states = sample_box(model, 100, rng);
    const auto rep = fd_check_derivatives(model, states, 1e-6, 1e-5);
    bool ok = rep.passed();
    out << "model " << model.name << " (" << noise_structure_name(model.noise) << " noise, d=" << model.d
        << ", m=" << model.m << "), " << rep.n_states << " states, tolerance " << fmt17(rep.tolerance) << '\n';
    for (const auto& c : rep.callbacks) {
        out << "  " << c.callback << ": ";
        if (!c.present) out << "absent\n";
        else out << "max error " << fmt17(c.max_error) << (c.max_error <= rep.tolerance ? "  ok" : "  FAIL") << '\n';
    }
    out << "  commutativity defect " << fmt17(rep.commutativity_defect) << '\n';
    if (entry.lyapunov) {
        const auto pair = entry.lyapunov(resolve_params(entry, cfg.overrides));
        const auto ly = check_lyapunov_condition(model, pair, states);
        const bool holds = ly.holds(1e-6);
        ok = ok && holds;
        out << "  lyapunov: max violation " << fmt17(ly.max_violation) << " over " << ly.n_evaluated << " states"
            << (holds ? "  ok" : "  FAIL") << '\n';
    }
    const auto sweep = taming_sweep(cfg.params, model.d, 10000, cfg.seed);
    const long bad = sweep.value_violations + sweep.jacobian_violations + sweep.deviation_violations +
                     sweep.hessian_violations;
    ok = ok && bad == 0;
    out << "  taming bounds: " << sweep.samples << " samples, violations value=" << sweep.value_violations
        << " jacobian=" << sweep.jacobian_violations << " deviation=" << sweep.deviation_violations
        << " hessian=" << sweep.hessian_violations << (bad == 0 ? "  ok" : "  FAIL") << '\n';
    return ok ? kOk : kFailure;
}

inline std::string usage() {
    return "usage: tamed <command> [options]\n"
           "commands:\n"
           "  converge   strong convergence study (CSV, optional SVG)\n"
           "  simulate   one path at --level, states as CSV\n"
           "  expmoment  exponential-moment diagnostic for a model's Lyapunov pair\n"
           "  check      derivative, Lyapunov and taming-bound checks\n"
           "  models     list models and default parameters\n"
           "run `tamed <command> --help` for options\n";
}

inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
    if (argc < 2) {
        err << usage();
        return kMisuse;
    }
    CLI::App app{"Stopped increment-tamed SDE schemes", "tamed"};
    app.require_subcommand(1);
    std::map<std::string, FlagValues> flags;
    std::vector<CLI::App*> subs;
    for (const char* name : {"converge", "simulate", "expmoment", "check"}) {
        auto* sub = app.add_subcommand(name);
        add_common_flags(*sub, flags[name]);
        if (std::string(name) == "simulate") sub->add_option("--level", flags[name].level, "level of the path");
        subs.push_back(sub);
    }
    subs.push_back(app.add_subcommand("models", "list models"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kOk;
        }
        err << "error: " << e.what() << '\n';
        return kMisuse;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "models") return run_models(out);
        const RunConfig cfg = resolve_config(command, flags[command]);
        validate(cfg);
        const ModelEntry& entry = find_model(cfg.model);
        const ModelSpec model = entry.build(resolve_params(entry, cfg.overrides));
        if (command == "converge") return run_converge(cfg, model, out, err);
        if (command == "simulate") return run_simulate(cfg, model, out);
        if (command == "expmoment") return run_expmoment(cfg, entry, model, out);
        return run_check(cfg, entry, model, out);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '\n') c = ' ';
        err << "error: " << msg << '\n';
        return kFailure;
    }
}

} // namespace tamed::cli

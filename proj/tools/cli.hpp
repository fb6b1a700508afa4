#pragma once

// dirlab command-line driver. Each subcommand reads one JSON config and writes
// CSV plus summary.json into --out. Exit codes: 0 pass, 1 usage/config error,
// 2 verification failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "dirlab/config.hpp"
#include "dirlab/dirlab.hpp"
#include "dirlab/io.hpp"

namespace dirlab::cli {

inline constexpr int kPass = 0;
inline constexpr int kUsage = 1;
inline constexpr int kFailed = 2;

using json = nlohmann::json;

struct GlobalOptions {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string method = "reciprocal_extrapolation";
    std::optional<double> tol;
};

struct RunContext {
    const Config& cfg;
    const GlobalOptions& opt;
    std::filesystem::path out;

    std::uint64_t seed() const { return opt.seed ? *opt.seed : cfg.count_or("mc", "seed", 0); }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw ConfigError("--out", "cannot write '" + (out / name).string() + "'");
        return f;
    }

    void summary(json doc) const {
        auto f = open("summary.json");
        f << doc.dump(2) << '\n';
    }
};

inline json model_json(const ModelSpec& m) {
    json j{{"type", m.name()}, {"regime", to_string(m.regime())}};
    if (m.is<ConstantRate>()) j["r"] = m.as<ConstantRate>().r;
    if (m.is<PoissonJump>()) {
        const auto& p = m.as<PoissonJump>();
        j["r0"] = p.r0;
        j["delta"] = p.delta;
        j["lambda"] = p.lambda;
    }
    if (m.is<MarkovChain>()) {
        const auto& c = m.as<MarkovChain>();
        j["state_rates"] = c.state_rates;
        j["transition"] = c.transition;
        j["initial_state"] = c.initial_state;
    }
    return j;
}

inline json estimate_json(const McEstimate& e) { return {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}}; }

inline int cmd_simulate(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const auto grid = ctx.cfg.grid(model);
    const auto n = ctx.cfg.count("mc", "n_paths");
    const auto set = simulate_paths(model, grid, n, ctx.seed(), ctx.opt.threads);
    auto csv = ctx.open("scenarios.csv");
    write_scenarios_csv(csv, set);

    double mean_rate = 0.0, mean_log_b = 0.0;
    for (const auto& p : set.paths) {
        mean_rate += p.rate_at(grid.horizon);
        mean_log_b += p.log_bank_account(grid.horizon);
    }
    mean_rate /= static_cast<double>(n);
    mean_log_b /= static_cast<double>(n);
    ctx.summary({{"subcommand", "simulate"}, {"model", model_json(model)}, {"horizon", grid.horizon},
                 {"n_paths", n}, {"seed", ctx.seed()}, {"mean_terminal_rate", mean_rate},
                 {"mean_log_bank_account", mean_log_b}, {"verdict", "pass"}});
    return kPass;
}

inline int cmd_price(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const double t = ctx.cfg.number_or("times", "t", 0.0);
    const double T = ctx.cfg.number("times", "T");
    const auto state = model.initial_state();
    const double log_p = log_price_closed_form(model, state, t, T);
    const auto n = ctx.cfg.count_or("mc", "n_paths", 0);

    auto csv_file = ctx.open("price.csv");
    CsvWriter csv(csv_file);
    csv.header({"t", "T", "logP", "closed_form", "mc_value", "mc_std_error", "n"});
    json summary{{"subcommand", "price"}, {"model", model_json(model)}, {"t", t}, {"T", T},
                 {"log_price", log_p}, {"closed_form", std::exp(log_p)}, {"seed", ctx.seed()}};
    csv.cell(t).cell(T).cell(log_p).cell(std::exp(log_p));
    if (n >= 2) {
        const auto mc = price_mc(model, state, t, T, n, ctx.seed(), ctx.opt.threads);
        csv.cell(mc.value).cell(mc.std_error).cell(mc.n);
        summary["mc"] = estimate_json(mc);
        summary["mc_within_3se"] = std::abs(mc.value - std::exp(log_p)) <= 3.0 * mc.std_error;
    } else {
        csv.cell("").cell("").cell(std::size_t{0});
    }
    csv.end_row();
    summary["verdict"] = "pass";
    ctx.summary(summary);
    return kPass;
}

inline int cmd_curve(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const double t = ctx.cfg.number_or("times", "t", 0.0);
    const auto mats = ctx.cfg.maturities();
    const auto state = model.initial_state();
    const auto curves = build_curves(model, state, t, mats);
    auto csv = ctx.open("curve.csv");
    write_curve_csv(csv, curves);
    const double step = ctx.cfg.number_or("schedule", "fd_step", 0.01);
    ctx.summary({{"subcommand", "curve"}, {"model", model_json(model)}, {"t", t}, {"n_maturities", mats.size()},
                 {"short_rate_consistency", short_rate_consistency(model, state, t, step)}, {"verdict", "pass"}});
    return kPass;
}

inline int cmd_long_rate(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const double t = ctx.cfg.number_or("times", "t", 0.0);
    const auto mats = ctx.cfg.maturities();
    const double tol = ctx.opt.tol ? *ctx.opt.tol : ctx.cfg.number_or("tolerances", "tol", 1e-6);
    const auto method = parse_long_rate_method(ctx.opt.method);
    const auto state = model.initial_state();

    std::vector<LongRateEstimate> rows;
    std::optional<LongRateEstimate> spectral;
    if (model.is<MarkovChain>()) spectral = perron_long_rate(model.as<MarkovChain>());
    if (method == LongRateMethod::spectral) {
        if (!spectral) throw ConfigError("--method", "spectral estimates need a markov model");
    } else {
        // log x(t,T) is affine in 1/T up to exponentially small terms, so fit it in the log domain
        const auto curves = build_curves(model, state, t, mats);
        std::vector<double> log_x(curves.rates.x.size());
        for (std::size_t i = 0; i < log_x.size(); ++i) log_x[i] = std::log(curves.rates.x[i]);
        auto est = extract_long_rate(curves.rates.maturities, log_x, method, tol, 0.0);
        est.value = std::exp(est.value);
        est.residual = est.value * std::expm1(est.residual);
        est.converged = est.residual <= tol;
        rows.push_back(est);
    }
    if (spectral) rows.push_back(*spectral);

    bool pass = true;
    json estimates = json::array();
    for (const auto& e : rows) {
        pass = pass && e.converged;
        estimates.push_back({{"method", to_string(e.method)}, {"x_L", e.value}, {"residual", e.residual},
                             {"T_used", e.T_used}, {"converged", e.converged},
                             {"z_L", zero_from_x(e.value, model.regime())}});
    }
    json summary{{"subcommand", "long-rate"}, {"model", model_json(model)}, {"t", t}, {"tol", tol},
                 {"estimates", estimates}};
    if (spectral && rows.size() == 2) {
        const double gap = std::abs(rows[0].value - spectral->value);
        summary["spectral_gap"] = gap;
        pass = pass && gap <= tol;
    }
    summary["verdict"] = pass ? "pass" : "fail";
    auto csv = ctx.open("long_rate.csv");
    write_long_rates_csv(csv, rows);
    ctx.summary(summary);
    return pass ? kPass : kFailed;
}

inline int cmd_verify_measure(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const double s = ctx.cfg.number("times", "s");
    const double t = ctx.cfg.number("times", "t");
    const double T = ctx.cfg.number("times", "T");
    MeasureCheckOptions opt;
    opt.n_paths = ctx.cfg.count_or("mc", "n_paths", opt.n_paths);
    opt.seed = ctx.seed();
    opt.threads = ctx.opt.threads;
    opt.se_multiple = ctx.cfg.number_or("tolerances", "se_multiple", opt.se_multiple);
    opt.exact_tol = ctx.cfg.number_or("tolerances", "exact_tol", opt.exact_tol);

    // condition on the state at s reached along path 0 of the scenario set
    ModelState state_s = model.initial_state();
    if (s > 0.0) state_s = simulate_path(model, TimeGrid{model.regime(), s, s}, opt.seed, 0).state_at(s);
    const auto rep = tower_identity_check(model, state_s, s, t, T, opt);
    auto csv = ctx.open("measure.csv");
    write_measure_csv(csv, rep);
    json rows = json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"identity", r.identity}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap}, {"se", r.se},
                        {"exact", r.exact}, {"pass", r.pass}});
    }
    ctx.summary({{"subcommand", "verify-measure"}, {"model", model_json(model)}, {"s", s}, {"t", t}, {"T", T},
                 {"seed", opt.seed}, {"state_s_rate", state_s.rate}, {"rows", rows},
                 {"verdict", rep.pass() ? "pass" : "fail"}});
    return rep.pass() ? kPass : kFailed;
}

inline json quantiles_json(const Quantiles& q) {
    return {{"min", q.min}, {"q05", q.q05}, {"q50", q.q50}, {"q95", q.q95}, {"max", q.max}};
}

inline int cmd_verify_dir(const RunContext& ctx) {
    const auto model = ctx.cfg.model();
    const double s = ctx.cfg.number("times", "s");
    const double t = ctx.cfg.number("times", "t");
    VerifyOptions opt;
    if (ctx.cfg.has("schedule", "taus")) opt.taus = ctx.cfg.numbers("schedule", "taus");
    opt.n_paths = ctx.cfg.count_or("mc", "n_paths", opt.n_paths);
    opt.seed = ctx.seed();
    opt.threads = ctx.opt.threads;
    opt.method = parse_long_rate_method(ctx.opt.method);
    opt.tol = ctx.opt.tol ? *ctx.opt.tol : ctx.cfg.number_or("tolerances", "tol", opt.tol);
    opt.k = ctx.cfg.number_or("tolerances", "k", opt.k);

    json summary{{"subcommand", "verify-dir"}, {"model", model_json(model)}, {"s", s}, {"t", t},
                 {"seed", opt.seed}, {"n_paths", opt.n_paths}, {"method", to_string(opt.method)}, {"k", opt.k}};
    MonotonicityReport rep;
    std::optional<PoissonExampleReport> example;
    try {
        if (model.is<PoissonJump>()) {
            const auto& p = model.as<PoissonJump>();
            PoissonExampleOptions ex;
            ex.verify = opt;
            ex.n_pricing = ctx.cfg.count_or("mc", "n_pricing", 20'000);
            ex.n_continuations = ctx.cfg.count_or("mc", "n_continuations", 20'000);
            example = run_example_poisson({p.r0, p.delta, p.lambda}, s, t, ex);
            rep = example->monotonicity;
        } else {
            rep = verify_dir(model, s, t, opt);
        }
    } catch (const VerificationAborted& e) {
        summary["verdict"] = "aborted";
        summary["diagnostic"] = e.what();
        ctx.summary(summary);
        std::cerr << e.what() << '\n';
        return kFailed;
    }

    auto csv = ctx.open("report.csv");
    write_monotonicity_csv(csv, rep);
    if (!rep.violations.empty()) {
        auto dump = ctx.open("violations.csv");
        write_violations_csv(dump, rep);
    }

    bool pass = rep.pass() && rep.recount() == rep.n_violations;
    summary["theorem"] = {{"n_violations", rep.n_violations}, {"n_nonconvergent", rep.n_nonconvergent},
                          {"max_epsilon", rep.max_epsilon}, {"diff_quantiles", quantiles_json(rep.diff)},
                          {"pass", rep.pass()}};
    if (rep.spectral) {
        summary["theorem"]["spectral_x_L"] = rep.spectral->value;
        summary["theorem"]["max_spectral_gap"] = rep.max_spectral_gap;
    }

    // cross-linked proof-step verdicts
    const double T_measure = t + opt.taus.front();
    MeasureCheckOptions mopt;
    mopt.n_paths = opt.n_paths;
    mopt.seed = derive_seed(opt.seed, 11);
    mopt.threads = opt.threads;
    const auto measure = tower_identity_check(model, rep.paths.front().state_s, s, t, T_measure, mopt);
    summary["forward_measure"] = {{"T", T_measure}, {"pass", measure.pass()}};
    pass = pass && measure.pass();
    if (model.is<MarkovChain>()) {
        std::vector<std::size_t> sched;
        for (double tau : opt.taus) sched.push_back(static_cast<std::size_t>(t + tau));
        const auto lemma = lemma2_markov_link(model, rep.paths.front().state_s, s, t, sched,
                                              ctx.cfg.number_or("tolerances", "lemma_tol", 1e-3));
        summary["lp_lemma"] = {{"pass", lemma.pass()}, {"bound", lemma.bound.front()}};
        pass = pass && lemma.pass();
    }
    if (example) {
        json pricing = json::array();
        for (const auto& r : example->pricing) {
            pricing.push_back({{"T", r.T}, {"closed_form", r.closed_form}, {"mc", estimate_json(r.mc)}, {"pass", r.pass}});
        }
        const auto& e = example->ergodicity;
        summary["example"] = {{"pricing", pricing},
                              {"max_long_rate_error", example->max_long_rate_error},
                              {"long_rate_pass", example->long_rate_pass},
                              {"ergodicity", {{"state_s_rate", e.state_s.rate}, {"variance", e.variance},
                                              {"std_error", e.std_error}, {"theoretical", e.theoretical},
                                              {"n", e.n}, {"pass", e.pass}}}};
        pass = pass && example->pass();
    }
    summary["verdict"] = pass ? "pass" : "fail";
    ctx.summary(summary);
    return pass ? kPass : kFailed;
}

inline int cmd_lemma_lab(const RunContext& ctx) {
    const auto space = ctx.cfg.space();
    const auto g = ctx.cfg.partition(space.size());
    const auto x = ctx.cfg.numbers("variable", "values");
    if (x.size() != space.size()) throw ConfigError("variable.values", "length must match the space");
    const std::string sequence = ctx.cfg.text("variable", "sequence", "constant");
    if (sequence != "constant" && sequence != "scaled") {
        throw ConfigError("variable.sequence", "must be 'constant' or 'scaled'");
    }
    std::vector<std::size_t> sched;
    for (double n : ctx.cfg.numbers("schedule", "n")) {
        if (!(n >= 1.0) || std::floor(n) != n) throw ConfigError("schedule.n", "entries must be integers >= 1");
        sched.push_back(static_cast<std::size_t>(n));
    }
    const double tol = ctx.opt.tol ? *ctx.opt.tol : ctx.cfg.number_or("tolerances", "tol", 1e-3);

    const auto x_n = [&](std::size_t n) {
        Rv v = x;
        if (sequence == "scaled") {
            for (double& e : v) e *= 1.0 - 1.0 / static_cast<double>(n + 1);
        }
        return v;
    };
    Lemma2Report rep;
    try {
        rep = lemma2_check(space, x_n, x, g, sched, tol);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("variable", e.what());
    }
    std::vector<double> ps(sched.begin(), sched.end());
    const auto limit = pnorm_limit_check(space, x, g, ps);

    auto csv = ctx.open("lemma_trace.csv");
    write_lemma_trace_csv(csv, rep);
    std::vector<bool> verdict(rep.verdict.begin(), rep.verdict.end());
    const bool pass = rep.pass() && limit.within_bound;
    ctx.summary({{"subcommand", "lemma-lab"}, {"sequence", sequence}, {"tol", tol}, {"bound", rep.bound},
                 {"atom_verdict", verdict}, {"sequence_converges", rep.sequence_converges},
                 {"pnorm_limit", {{"p", limit.p}, {"max_gap", limit.max_gap}, {"within_bound", limit.within_bound}}},
                 {"verdict", pass ? "pass" : "fail"}});
    return pass ? kPass : kFailed;
}

/// Runs the CLI; never throws.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"dirlab: long-rate monotonicity laboratory"};
    app.require_subcommand(1);
    GlobalOptions opt;
    app.add_option("--out", opt.out, "output directory")->capture_default_str();
    app.add_option("--seed", opt.seed, "64-bit seed (overrides mc.seed)");
    app.add_option("--threads", opt.threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const RunContext&);
    };
    const Sub subs[] = {
        {"simulate", "simulate short-rate paths", cmd_simulate},
        {"price", "zero-coupon bond price, closed form and Monte Carlo", cmd_price},
        {"curve", "discount and rate curves", cmd_curve},
        {"long-rate", "long-rate estimates", cmd_long_rate},
        {"verify-measure", "forward-measure conditioning identities", cmd_verify_measure},
        {"verify-dir", "long rates never fall, path by path", cmd_verify_dir},
        {"lemma-lab", "conditional L^p limit lemma on a finite space", cmd_lemma_lab},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> handles;
    for (const auto& sub : subs) {
        auto* cmd = app.add_subcommand(sub.name, sub.help);
        cmd->add_option("--config", opt.config, "JSON config")->required();
        cmd->add_option("--method", opt.method, "long-rate method: plain_tail | reciprocal_extrapolation | spectral");
        cmd->add_option("--tol", opt.tol, "long-rate / lemma tolerance");
        handles.emplace_back(cmd, &sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        std::filesystem::create_directories(opt.out);
        const auto cfg = Config::from_file(opt.config);
        RunContext ctx{cfg, opt, opt.out};
        for (const auto& [cmd, sub] : handles) {
            if (!cmd->parsed()) continue;
            // wall time goes to stderr so that output files stay reproducible
            const auto start = std::chrono::steady_clock::now();
            const int code = sub->fn(ctx);
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            std::cerr << sub->name << ": " << elapsed.count() << " s\n";
            return code;
        }
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace dirlab::cli

#pragma once

// End-to-end check that long rates never fall: x_L(s) >= x_L(t) on every
// simulated path, plus the Poisson jump example and its non-ergodicity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dirlab/conditional_lp.hpp"
#include "dirlab/forward_measure.hpp"
#include "dirlab/long_rates.hpp"
#include "dirlab/model.hpp"
#include "dirlab/parallel.hpp"
#include "dirlab/pricing.hpp"

namespace dirlab {

/// Raised when the long-rate limits cannot be established on enough paths.
class VerificationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VerifyOptions {
    std::vector<double> taus{125.0, 250.0, 500.0, 1000.0};  // maturities T = u + tau at observation time u
    std::size_t n_paths = 10'000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    LongRateMethod method = LongRateMethod::reciprocal_extrapolation;
    double tol = 1e-4;       // long-rate residual above which an extraction is non-convergent
    double k = 3.0;          // epsilon = k (residual_s + residual_t) + rounding floor
    double max_nonconvergent_fraction = 0.01;
    double spectral_tol = 1e-6;
};

/// x_L estimate at one observation time; residual is in x units.
struct LongRatePoint {
    double x = 0.0;
    double residual = 0.0;
    bool converged = true;
};

struct PathVerdict {
    std::size_t path_id = 0;
    ModelState state_s;
    ModelState state_t;
    LongRatePoint at_s;
    LongRatePoint at_t;
    double epsilon = 0.0;
    bool violation = false;
};

/// Curves of a violating path, kept for replay under the same seed.
struct ViolationDump {
    std::size_t path_id = 0;
    std::vector<double> maturities_s, log_x_s;
    std::vector<double> maturities_t, log_x_t;
};

struct Quantiles {
    double min = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, max = 0.0;
};

inline Quantiles quantiles(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) { return v[static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)))]; };
    return {v.front(), at(0.05), at(0.5), at(0.95), v.back()};
}

struct MonotonicityReport {
    std::string model_id;
    double s = 0.0, t = 0.0;
    LongRateMethod method = LongRateMethod::reciprocal_extrapolation;
    double k = 3.0;
    std::vector<PathVerdict> paths;
    std::size_t n_violations = 0;
    std::size_t n_nonconvergent = 0;
    double max_epsilon = 0.0;
    Quantiles diff;  // x_L(t) - x_L(s)
    std::vector<ViolationDump> violations;

    std::optional<LongRateEstimate> spectral;  // Markov chains only
    double max_spectral_gap = 0.0;
    bool spectral_pass = true;

    std::size_t recount() const {
        return static_cast<std::size_t>(std::count_if(paths.begin(), paths.end(), [](const PathVerdict& p) {
            return p.at_s.x < p.at_t.x - p.epsilon;
        }));
    }
    bool pass() const { return n_violations == 0 && spectral_pass; }
};

namespace detail {

inline std::vector<double> shifted(std::span<const double> taus, double u) {
    std::vector<double> out(taus.begin(), taus.end());
    for (double& T : out) T += u;
    return out;
}

inline std::vector<double> log_x_curve(const ModelSpec& model, const ModelState& state, double u,
                                       std::span<const double> maturities) {
    auto lp = log_prices_closed_form(model, state, u, maturities);
    for (std::size_t i = 0; i < lp.size(); ++i) lp[i] /= maturities[i];
    return lp;
}

}  // namespace detail

/// x_L at time u given the state, extracted from log x(u,T) = log P(u,T) / T.
/// log P(u,T) / T is affine in 1/T up to exponentially small terms for every
/// shipped model, so the reciprocal fit uses origin 0 in the log domain.
inline LongRatePoint long_rate_point(const ModelSpec& model, const ModelState& state, double u,
                                     std::span<const double> taus, LongRateMethod method, double tol) {
    const auto mats = detail::shifted(taus, u);
    const auto logx = detail::log_x_curve(model, state, u, mats);
    const auto est = extract_long_rate(mats, logx, method, std::numeric_limits<double>::infinity(), 0.0);
    LongRatePoint out;
    out.x = std::exp(est.value);
    out.residual = out.x * std::expm1(est.residual);
    out.converged = out.residual <= tol;
    return out;
}

/// Checks x_L(s) >= x_L(t) - epsilon on every path, conditioning on each
/// path's state at s and at t.
inline MonotonicityReport verify_dir(const ModelSpec& model, double s, double t, const VerifyOptions& opt) {
    if (!(s < t)) throw std::invalid_argument("verify_dir: requires s < t");
    if (!(s >= 0.0)) throw std::invalid_argument("verify_dir: requires s >= 0");
    if (opt.taus.size() < 4) throw std::invalid_argument("verify_dir: need at least 4 maturities in the schedule");
    if (!(opt.k > 0.0)) throw std::invalid_argument("verify_dir: k must be > 0");
    const TimeGrid grid{model.regime(), t, t};

    std::vector<PathVerdict> verdicts(opt.n_paths);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t i) {
        const auto path = simulate_path(model, grid, opt.seed, i);
        verdicts[i].path_id = i;
        verdicts[i].state_s = path.state_at(s);
        verdicts[i].state_t = path.state_at(t);
    });

    // long-rate estimates depend on (time, state) only
    std::map<std::pair<double, ModelState>, LongRatePoint> cache;
    for (const auto& v : verdicts) {
        cache.emplace(std::pair{s, v.state_s}, LongRatePoint{});
        cache.emplace(std::pair{t, v.state_t}, LongRatePoint{});
    }
    std::vector<std::pair<const std::pair<double, ModelState>, LongRatePoint>*> slots;
    for (auto& entry : cache) slots.push_back(&entry);
    parallel_for(slots.size(), opt.threads, [&](std::size_t i) {
        const auto& [u, state] = slots[i]->first;
        slots[i]->second = long_rate_point(model, state, u, opt.taus, opt.method, opt.tol);
    });

    MonotonicityReport rep;
    rep.model_id = model.name();
    rep.s = s;
    rep.t = t;
    rep.method = opt.method;
    rep.k = opt.k;
    std::vector<double> diffs;
    diffs.reserve(verdicts.size());
    for (auto& v : verdicts) {
        v.at_s = cache.at({s, v.state_s});
        v.at_t = cache.at({t, v.state_t});
        const double floor = 1024 * std::numeric_limits<double>::epsilon() * std::max(v.at_s.x, v.at_t.x);
        v.epsilon = opt.k * (v.at_s.residual + v.at_t.residual) + floor;
        v.violation = v.at_s.x < v.at_t.x - v.epsilon;
        if (v.violation) ++rep.n_violations;
        if (!v.at_s.converged || !v.at_t.converged) ++rep.n_nonconvergent;
        rep.max_epsilon = std::max(rep.max_epsilon, v.epsilon);
        diffs.push_back(v.at_t.x - v.at_s.x);
    }
    rep.paths = std::move(verdicts);
    rep.diff = quantiles(std::move(diffs));

    if (static_cast<double>(rep.n_nonconvergent) > opt.max_nonconvergent_fraction * static_cast<double>(opt.n_paths)) {
        throw VerificationAborted("verify_dir: long-rate extraction did not converge on " +
                                  std::to_string(rep.n_nonconvergent) + " of " + std::to_string(opt.n_paths) +
                                  " paths (tol " + std::to_string(opt.tol) + "); the limits are not established");
    }

    for (const auto& v : rep.paths) {
        if (!v.violation) continue;
        ViolationDump dump{v.path_id, detail::shifted(opt.taus, s), {}, detail::shifted(opt.taus, t), {}};
        dump.log_x_s = detail::log_x_curve(model, v.state_s, s, dump.maturities_s);
        dump.log_x_t = detail::log_x_curve(model, v.state_t, t, dump.maturities_t);
        rep.violations.push_back(std::move(dump));
    }

    if (model.is<MarkovChain>()) {
        rep.spectral = perron_long_rate(model.as<MarkovChain>());
        for (const auto& v : rep.paths) {
            rep.max_spectral_gap = std::max({rep.max_spectral_gap, std::abs(v.at_s.x - rep.spectral->value),
                                             std::abs(v.at_t.x - rep.spectral->value)});
        }
        rep.spectral_pass = rep.spectral->converged && rep.max_spectral_gap <= opt.spectral_tol;
    }
    return rep;
}

/// Exact instance of the L^p lemma behind the theorem for a Markov chain:
/// atoms are the states at t weighted by the forward measure given the state
/// at s, X_n = x(t, n) and the limit is x_L(t). The p-norms are
/// E~[x(t,n)^n]^(1/n) = (P(s,n) / P(s,t))^(1/n).
inline Lemma2Report lemma2_markov_link(const ModelSpec& model, const ModelState& state_s, double s, double t,
                                       std::span<const std::size_t> n_schedule, double tol) {
    if (!model.is<MarkovChain>()) throw std::invalid_argument("lemma2_markov_link: Markov chains only");
    const auto& chain = model.as<MarkovChain>();
    const Matrix m = discounted_matrix(chain);
    const std::size_t n = chain.size();
    std::vector<double> mu(n, 0.0), next(n);
    mu[state_s.chain_state] = 1.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(t - s); ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) next[j] += mu[i] * m[i][j];
        }
        mu.swap(next);
    }
    double mass = 0.0;
    std::vector<std::size_t> atom_state;
    for (std::size_t j = 0; j < n; ++j) {
        if (mu[j] > 0.0) {
            atom_state.push_back(j);
            mass += mu[j];
        }
    }
    std::vector<double> probs;
    for (std::size_t j : atom_state) probs.push_back(mu[j] / mass);
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (double& p : probs) p /= total;
    const FiniteProbSpace space(std::move(probs));

    const std::size_t longest = n_schedule.empty() ? 0 : n_schedule.back();
    if (longest <= static_cast<std::size_t>(t)) throw std::invalid_argument("lemma2_markov_link: schedule must exceed t");
    const auto table = markov_log_price_table(chain, longest - static_cast<std::size_t>(t));
    const double rho = perron_long_rate(chain).value;
    const auto x_n = [&](std::size_t T) {
        Rv x(atom_state.size());
        const auto steps = T > static_cast<std::size_t>(t) ? T - static_cast<std::size_t>(t) : 0;
        for (std::size_t a = 0; a < x.size(); ++a) {
            x[a] = std::exp(table[steps][atom_state[a]] / static_cast<double>(T));
        }
        return x;
    };
    const Rv limit(atom_state.size(), rho);
    return lemma2_check(space, x_n, limit, Partition::trivial(atom_state.size()), n_schedule, tol);
}

/// Spread of z_L(t) given the state at s; zero iff z_L(t) is F_s-measurable.
struct ErgodicityDiagnostic {
    ModelState state_s;
    double s = 0.0, t = 0.0;
    std::size_t n = 0;
    double variance = 0.0;
    double std_error = 0.0;
    double theoretical = 0.0;  // delta^2 lambda (t - s)
    bool pass = false;         // within 4 SE of the theoretical value
};

struct PoissonParams {
    double r0 = 0.05;
    double delta = 0.1;
    double lambda = 0.5;
};

struct PricingCheckRow {
    double T = 0.0;
    double closed_form = 0.0;
    McEstimate mc;
    bool pass = false;  // within 3 SE
};

struct PoissonExampleOptions {
    VerifyOptions verify;
    std::vector<double> pricing_maturities{1.0, 2.0, 5.0, 10.0};
    std::size_t n_pricing = 200'000;
    std::size_t n_continuations = 100'000;
};

struct PoissonExampleReport {
    std::vector<PricingCheckRow> pricing;
    double max_long_rate_error = 0.0;  // max over paths |z_L(t) - (r_t + lambda)|
    bool long_rate_pass = true;        // each within k * residual + rounding floor
    ErgodicityDiagnostic ergodicity;
    MonotonicityReport monotonicity;

    bool pass() const {
        return std::all_of(pricing.begin(), pricing.end(), [](const auto& r) { return r.pass; }) && long_rate_pass &&
               ergodicity.pass && monotonicity.pass();
    }
};

/// z_L(u) from the closed-form zero curve, fitted in 1/(T - u).
inline LongRateEstimate poisson_long_zero_rate(const ModelSpec& model, const ModelState& state, double u,
                                               std::span<const double> taus) {
    const auto mats = detail::shifted(taus, u);
    const auto lp = log_prices_closed_form(model, state, u, mats);
    std::vector<double> z(lp.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = -lp[i] / (mats[i] - u);
    return extract_long_rate(mats, z, LongRateMethod::reciprocal_extrapolation, std::numeric_limits<double>::infinity(), u);
}

/// The jump-rate example: closed form against Monte Carlo, z_L(t) = r_t + lambda
/// on each path, non-measurability of z_L(t) given F_s, and the theorem check.
/// delta = 0 is accepted as the constant-rate degenerate case.
inline PoissonExampleReport run_example_poisson(const PoissonParams& params, double s, double t,
                                                const PoissonExampleOptions& opt) {
    if (!(s < t)) throw std::invalid_argument("run_example_poisson: requires s < t");
    const bool degenerate = params.delta == 0.0;
    const ModelSpec model = degenerate ? ModelSpec::constant(params.r0, Regime::continuous)
                                       : ModelSpec::poisson(params.r0, params.delta, params.lambda);
    const double jump_intensity = degenerate ? 0.0 : params.lambda;
    const std::uint64_t seed = opt.verify.seed;
    PoissonExampleReport rep;

    const ModelState start = model.initial_state();
    for (std::size_t i = 0; i < opt.pricing_maturities.size(); ++i) {
        const double T = opt.pricing_maturities[i];
        PricingCheckRow row{T, price_closed_form(model, start, 0.0, T),
                            price_mc(model, start, 0.0, T, opt.n_pricing, derive_seed(seed, 100 + i), opt.verify.threads)};
        row.pass = std::abs(row.mc.value - row.closed_form) <= 3.0 * row.mc.std_error;
        rep.pricing.push_back(row);
    }

    rep.monotonicity = verify_dir(model, s, t, opt.verify);

    std::map<ModelState, LongRateEstimate> z_cache;
    for (const auto& v : rep.monotonicity.paths) {
        if (!z_cache.contains(v.state_t)) z_cache.emplace(v.state_t, poisson_long_zero_rate(model, v.state_t, t, opt.verify.taus));
    }
    for (const auto& [state, est] : z_cache) {
        const double expected = state.rate + jump_intensity;
        const double err = std::abs(est.value - expected);
        const double floor = 1024 * std::numeric_limits<double>::epsilon() * std::abs(expected);
        rep.max_long_rate_error = std::max(rep.max_long_rate_error, err);
        if (err > opt.verify.k * est.residual + floor) rep.long_rate_pass = false;
    }

    // continuations from the state at s observed on path 0
    auto& erg = rep.ergodicity;
    erg.s = s;
    erg.t = t;
    erg.state_s = rep.monotonicity.paths.empty() ? start : rep.monotonicity.paths.front().state_s;
    erg.n = opt.n_continuations;
    erg.theoretical = degenerate ? 0.0 : params.delta * params.delta * params.lambda * (t - s);
    if (erg.n < 2) throw std::invalid_argument("run_example_poisson: need at least 2 continuations");
    const ModelSpec restarted = model.restarted_from(erg.state_s);
    const TimeGrid grid{Regime::continuous, t - s, t - s};
    const std::uint64_t cont_seed = derive_seed(seed, 7);
    std::vector<double> z_long(erg.n);
    parallel_for(erg.n, opt.verify.threads, [&](std::size_t i) {
        const auto state_t = simulate_path(restarted, grid, cont_seed, i).state_at(t - s);
        z_long[i] = poisson_long_zero_rate(model, state_t, t, opt.verify.taus).value;
    });
    // deviations from the first continuation keep a constant sample exact
    const double ref = z_long.front();
    double shift = 0.0;
    for (double z : z_long) shift += z - ref;
    shift /= static_cast<double>(erg.n);
    double m2 = 0.0, m4 = 0.0;
    for (double z : z_long) {
        const double d = (z - ref - shift) * (z - ref - shift);
        m2 += d;
        m4 += d * d;
    }
    const double nn = static_cast<double>(erg.n);
    erg.variance = m2 / (nn - 1.0);
    m4 /= nn;
    const double pop_var = m2 / nn;
    erg.std_error = std::sqrt(std::max(0.0, m4 - pop_var * pop_var) / nn);
    if (erg.theoretical == 0.0) {
        erg.pass = erg.variance <= 1e-24;
    } else {
        erg.pass = erg.variance > 0.0 && std::abs(erg.variance - erg.theoretical) <= 4.0 * erg.std_error;
    }
    return rep;
}

}  // namespace dirlab

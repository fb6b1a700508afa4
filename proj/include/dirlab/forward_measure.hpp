#pragma once

// Change to the forward (time-s) neutral measure for maturity t,
//   dQ~/dQ = (B_s / B_t) / P(s,t),
// and checks of the conditioning identities
//   P(s,T) = E[(B_s/B_t) P(t,T) | F_s],   P(s,T)/P(s,t) = E~[P(t,T) | F_s].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirlab/model.hpp"
#include "dirlab/pricing.hpp"

namespace dirlab {

/// Per-path Radon-Nikodym weights. `normalization` is the sample mean of the
/// weights, which estimates E_Q[w | F_s] = 1.
struct ForwardWeights {
    double s = 0.0;
    double t = 0.0;
    std::vector<double> weights;
    McEstimate normalization;
};

/// Weights on paths that all share the same information at s (for s > 0 the
/// set must hold continuations from one state at s).
inline ForwardWeights rn_weights(const ScenarioSet& scenarios, double s, double t, double price_s_t) {
    if (s > t) throw std::invalid_argument("rn_weights: requires s <= t");
    if (!(price_s_t > 0.0)) throw std::invalid_argument("rn_weights: P(s,t) must be > 0");
    ForwardWeights out{s, t, std::vector<double>(scenarios.paths.size()), {}};
    for (std::size_t i = 0; i < scenarios.paths.size(); ++i) {
        const auto& path = scenarios.paths[i];
        const double log_growth = path.regime() == Regime::continuous
                                      ? path.integral(s, t)
                                      : path.log_bank_account(t) - path.log_bank_account(s);
        out.weights[i] = std::exp(-log_growth) / price_s_t;
    }
    if (out.weights.size() >= 2) {
        out.normalization = summarize(out.weights);
    } else {
        out.normalization = {out.weights.empty() ? 0.0 : out.weights.front(), 0.0, out.weights.size()};
    }
    return out;
}

/// Self-normalized estimate sum w_i p_i / sum w_i with a delta-method standard
/// error. Deviations are taken from payoff[0] so constant payoffs pass through exactly.
inline McEstimate forward_expectation(const ForwardWeights& weights, std::span<const double> payoff) {
    const auto& w = weights.weights;
    if (payoff.size() != w.size()) throw std::invalid_argument("forward_expectation: payoff length mismatch");
    if (w.empty()) throw std::invalid_argument("forward_expectation: no paths");
    const double ref = payoff[0];
    double sw = 0.0, swd = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        sw += w[i];
        swd += w[i] * (payoff[i] - ref);
    }
    const double shift = swd / sw;
    double var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double e = w[i] * ((payoff[i] - ref) - shift);
        var += e * e;
    }
    return {ref + shift, std::sqrt(var) / sw, w.size()};
}

struct IdentityRow {
    std::string identity;  // "tower" or "forward"
    double s = 0.0, t = 0.0, T = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    double se = 0.0;  // 0 for exact rows
    bool exact = false;
    bool pass = false;
};

struct MeasureReport {
    std::vector<IdentityRow> rows;
    bool pass() const {
        for (const auto& r : rows) {
            if (!r.pass) return false;
        }
        return true;
    }
};

struct MeasureCheckOptions {
    std::size_t n_paths = 200'000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double exact_tol = 1e-12;
    double se_multiple = 3.0;
};

namespace detail {

inline IdentityRow make_row(std::string name, double s, double t, double T, double lhs, double rhs, double se,
                            bool exact, const MeasureCheckOptions& opt) {
    const double gap = rhs - lhs;
    const bool pass = exact ? std::abs(gap) <= opt.exact_tol : std::abs(gap) <= opt.se_multiple * se;
    return {std::move(name), s, t, T, lhs, rhs, gap, se, exact, pass};
}

}  // namespace detail

/// Verifies both conditioning identities given the model state at s.
/// Markov chains are checked exactly: the left side by backward induction,
/// the right side by propagating the discounted state distribution forward.
/// Poisson models use Monte Carlo continuations from the state at s.
inline MeasureReport tower_identity_check(const ModelSpec& model, const ModelState& state_s, double s, double t,
                                          double T, const MeasureCheckOptions& opt = {}) {
    if (!(s <= t && t <= T)) throw std::invalid_argument("tower_identity_check: requires s <= t <= T");
    const double p_sT = price_closed_form(model, state_s, s, T);
    const double p_st = price_closed_form(model, state_s, s, t);
    MeasureReport rep;

    if (s == t) {
        rep.rows.push_back(detail::make_row("tower", s, t, T, p_sT, price_closed_form(model, state_s, t, T), 0.0, true, opt));
        rep.rows.push_back(detail::make_row("forward", s, t, T, p_sT / p_st, price_closed_form(model, state_s, t, T), 0.0, true, opt));
        return rep;
    }

    if (model.is<ConstantRate>()) {
        const double discount = p_st;  // B_s / B_t is deterministic
        const double p_tT = price_closed_form(model, state_s, t, T);
        rep.rows.push_back(detail::make_row("tower", s, t, T, p_sT, discount * p_tT, 0.0, true, opt));
        rep.rows.push_back(detail::make_row("forward", s, t, T, p_sT / p_st, p_tT, 0.0, true, opt));
        return rep;
    }

    if (model.is<MarkovChain>()) {
        const auto& chain = model.as<MarkovChain>();
        const Matrix m = discounted_matrix(chain);
        const std::size_t n = chain.size();
        // mu_j = E[(B_s/B_t) 1{state_t = j} | state_s]
        std::vector<double> mu(n, 0.0), next(n);
        mu[state_s.chain_state] = 1.0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(t - s); ++k) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) next[j] += mu[i] * m[i][j];
            }
            mu.swap(next);
        }
        const auto table = markov_log_price_table(chain, static_cast<std::size_t>(T - t));
        const auto& log_p_tT = table.back();
        double tower = 0.0, mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            tower += mu[j] * std::exp(log_p_tT[j]);
            mass += mu[j];
        }
        rep.rows.push_back(detail::make_row("tower", s, t, T, p_sT, tower, 0.0, true, opt));
        rep.rows.push_back(detail::make_row("forward", s, t, T, p_sT / p_st, tower / mass, 0.0, true, opt));
        return rep;
    }

    // Poisson: continuations from the state at s, in time shifted by s.
    const ModelSpec restarted = model.restarted_from(state_s);
    const double span_st = t - s;
    const auto scenarios = simulate_paths(restarted, TimeGrid{Regime::continuous, span_st, span_st}, opt.n_paths,
                                          opt.seed, opt.threads);
    const auto weights = rn_weights(scenarios, 0.0, span_st, p_st);
    std::vector<double> payoff(scenarios.paths.size()), discounted(scenarios.paths.size());
    for (std::size_t i = 0; i < payoff.size(); ++i) {
        const auto state_t = scenarios.paths[i].state_at(span_st);
        payoff[i] = price_closed_form(model, state_t, t, T);
        discounted[i] = weights.weights[i] * p_st * payoff[i];
    }
    const auto tower = summarize(discounted);
    const auto fwd = forward_expectation(weights, payoff);
    rep.rows.push_back(detail::make_row("tower", s, t, T, p_sT, tower.value, tower.std_error, false, opt));
    rep.rows.push_back(detail::make_row("forward", s, t, T, p_sT / p_st, fwd.value, fwd.std_error, false, opt));
    return rep;
}

}  // namespace dirlab

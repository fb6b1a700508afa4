#pragma once

// Zero-coupon bond prices P(t,T) = E_Q[B_t / B_T | F_t] and the rate curves
// derived from them. Prices are carried as log P throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dirlab/model.hpp"
#include "dirlab/parallel.hpp"

namespace dirlab {

/// Monte Carlo estimate; std_error is the sample standard deviation over sqrt(n).
struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error of `samples`, summed in index order.
inline McEstimate summarize(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("summarize: need at least 2 samples");
    // deviations from the first sample keep constant samples exact
    const double ref = samples[0];
    double shift = 0.0;
    for (double x : samples) shift += x - ref;
    shift /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - ref - shift) * (x - ref - shift);
    const double var = ss / static_cast<double>(n - 1);
    return {ref + shift, std::sqrt(var / static_cast<double>(n)), n};
}

using Matrix = std::vector<std::vector<double>>;

/// M[i][j] = transition[i][j] / (1 + R_i): one period of discounting and moving.
inline Matrix discounted_matrix(const MarkovChain& chain) {
    Matrix m = chain.transition;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        for (double& v : m[i]) v /= 1.0 + chain.state_rates[i];
    }
    return m;
}

/// table[k][i] = log (M^k 1)_i for k = 0..steps, by backward induction with
/// per-step rescaling so long horizons do not underflow.
inline std::vector<std::vector<double>> markov_log_price_table(const MarkovChain& chain, std::size_t steps) {
    const Matrix m = discounted_matrix(chain);
    const std::size_t n = chain.size();
    std::vector<double> v(n, 1.0), next(n);
    double log_scale = 0.0;
    std::vector<std::vector<double>> table;
    table.reserve(steps + 1);
    table.emplace_back(n, 0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        double peak = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * v[j];
            next[i] = acc;
            peak = std::max(peak, acc);
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / peak;
        log_scale += std::log(peak);
        auto& row = table.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) row[i] = log_scale + std::log(v[i]);
    }
    return table;
}

namespace detail {

inline void check_times(const ModelSpec& model, double t, double T) {
    if (!(t >= 0.0)) throw std::invalid_argument("pricing: t must be >= 0");
    if (T < t) throw std::invalid_argument("pricing: requires t <= T");
    if (model.regime() == Regime::discrete) {
        as_period(t, "t");
        as_period(T, "T");
    }
}

inline double poisson_log_price(const PoissonJump& m, double rate, double tau) {
    return -rate * tau - m.lambda * tau - m.lambda * std::expm1(-m.delta * tau) / m.delta;
}

}  // namespace detail

/// log P(t, T) for every maturity, given the model state at t.
inline std::vector<double> log_prices_closed_form(const ModelSpec& model, const ModelState& state, double t,
                                                  std::span<const double> maturities) {
    for (double T : maturities) detail::check_times(model, t, T);
    std::vector<double> out(maturities.size());
    if (model.is<MarkovChain>()) {
        const auto& chain = model.as<MarkovChain>();
        if (state.chain_state >= chain.size()) throw std::invalid_argument("pricing: chain state out of range");
        double longest = 0.0;
        for (double T : maturities) longest = std::max(longest, T - t);
        const auto table = markov_log_price_table(chain, static_cast<std::size_t>(longest));
        for (std::size_t k = 0; k < maturities.size(); ++k) {
            out[k] = table[static_cast<std::size_t>(maturities[k] - t)][state.chain_state];
        }
        return out;
    }
    for (std::size_t k = 0; k < maturities.size(); ++k) {
        const double tau = maturities[k] - t;
        if (model.is<PoissonJump>()) {
            out[k] = detail::poisson_log_price(model.as<PoissonJump>(), state.rate, tau);
        } else {
            const double r = model.as<ConstantRate>().r;
            out[k] = model.regime() == Regime::discrete ? -tau * std::log1p(r) : -r * tau;
        }
    }
    return out;
}

inline double log_price_closed_form(const ModelSpec& model, const ModelState& state, double t, double T) {
    return log_prices_closed_form(model, state, t, std::span<const double>(&T, 1)).front();
}

inline double price_closed_form(const ModelSpec& model, const ModelState& state, double t, double T) {
    return std::exp(log_price_closed_form(model, state, t, T));
}

/// E[B_t / B_T | state at t] by restarting the model from `state` and
/// simulating n continuations. Each sample is exp(-log(B_T / B_t)) computed
/// exactly on the path.
inline McEstimate price_mc(const ModelSpec& model, const ModelState& state, double t, double T, std::size_t n,
                           std::uint64_t seed, unsigned threads = 1) {
    detail::check_times(model, t, T);
    if (n < 2) throw std::invalid_argument("price_mc: n must be >= 2");
    const double tau = T - t;
    if (tau == 0.0) return {1.0, 0.0, n};

    const ModelSpec restarted = model.restarted_from(state);
    const TimeGrid grid{model.regime(), tau, tau};
    std::vector<double> samples(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto path = simulate_path(restarted, grid, seed, i);
        samples[i] = std::exp(-path.log_bank_account(tau));
    });
    return summarize(samples);
}

/// Bond prices observed at a fixed time, stored as log P.
struct DiscountCurve {
    Regime regime = Regime::continuous;
    double observation_time = 0.0;
    ModelState state;
    std::vector<double> maturities;
    std::vector<double> log_prices;

    double price(std::size_t i) const { return std::exp(log_prices[i]); }
};

/// Forward rate f(t,T), zero rate z(t,T) and x(t,T) = P(t,T)^(1/T) on the
/// maturities of a DiscountCurve.
struct RateCurve {
    double observation_time = 0.0;
    std::vector<double> maturities;
    std::vector<double> forward;
    std::vector<double> zero;
    std::vector<double> x;
};

struct Curves {
    DiscountCurve discount;
    RateCurve rates;
};

/// Derives f, z and x from log prices.
///
/// Discrete: f(t,T) = P(t,T)/P(t,T+1) - 1 needs `next_log_prices[i]` = log P(t,T_i + 1).
/// Continuous: f = -d/dT log P by central differences on the maturity grid,
/// one-sided at both ends. x uses the exponent 1/T; for fixed t its limit
/// agrees with P^(1/(T-t)).
inline RateCurve derive_rates(const DiscountCurve& curve, std::span<const double> next_log_prices = {}) {
    const auto& mats = curve.maturities;
    const auto& lp = curve.log_prices;
    const std::size_t n = mats.size();
    const double t = curve.observation_time;
    if (n == 0) throw std::invalid_argument("curves: maturities must be non-empty");
    if (lp.size() != n) throw std::invalid_argument("curves: log_prices must align with maturities");

    RateCurve out{t, mats, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = mats[i] - t;
        if (!std::isfinite(lp[i])) throw std::invalid_argument("curves: log prices must be finite");
        out.x[i] = std::exp(lp[i] / mats[i]);
        if (curve.regime == Regime::discrete) {
            out.zero[i] = std::expm1(-lp[i] / tau);
        } else {
            out.zero[i] = -lp[i] / tau;
        }
    }

    if (curve.regime == Regime::discrete) {
        if (next_log_prices.size() != n) {
            throw std::invalid_argument("curves: discrete forward rates need P(t, T+1) for every maturity");
        }
        for (std::size_t i = 0; i < n; ++i) out.forward[i] = std::expm1(lp[i] - next_log_prices[i]);
        return out;
    }

    if (n < 2) throw std::invalid_argument("curves: continuous forward rates need at least 2 maturities");
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        out.forward[i] = -(lp[hi] - lp[lo]) / (mats[hi] - mats[lo]);
    }
    return out;
}

/// Closed-form discount curve at time t plus the derived rate curve.
inline Curves build_curves(const ModelSpec& model, const ModelState& state, double t,
                           std::span<const double> maturities) {
    if (maturities.empty()) throw std::invalid_argument("curves: maturities must be non-empty");
    for (std::size_t i = 0; i < maturities.size(); ++i) {
        if (!(maturities[i] > t)) throw std::invalid_argument("curves: every maturity must exceed t");
        if (i > 0 && !(maturities[i] > maturities[i - 1])) {
            throw std::invalid_argument("curves: maturities must be strictly increasing");
        }
    }

    DiscountCurve discount{model.regime(), t, state, {maturities.begin(), maturities.end()}, {}};
    discount.log_prices = log_prices_closed_form(model, state, t, maturities);
    std::vector<double> next;
    if (model.regime() == Regime::discrete) {
        std::vector<double> shifted(maturities.begin(), maturities.end());
        for (double& T : shifted) T += 1.0;
        next = log_prices_closed_form(model, state, t, shifted);
    }
    RateCurve rates = derive_rates(discount, next);
    return {std::move(discount), std::move(rates)};
}

/// |f(t,t) - R_t|. Exact in the discrete regime; the continuous regime uses
/// the one-sided difference -(log P(t, t+step) - log P(t,t)) / step.
inline double short_rate_consistency(const ModelSpec& model, const ModelState& state, double t, double step = 0.01) {
    if (model.regime() == Regime::discrete) {
        const double f = std::expm1(-log_price_closed_form(model, state, t, t + 1.0));
        return std::abs(f - state.rate);
    }
    if (!(step > 0.0)) throw std::invalid_argument("short_rate_consistency: step must be > 0");
    const double f = -(log_price_closed_form(model, state, t, t + step) - log_price_closed_form(model, state, t, t)) / step;
    return std::abs(f - state.rate);
}

}  // namespace dirlab

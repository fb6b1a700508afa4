#pragma once

// T -> infinity limits of the rate curves: finite-horizon estimators, a
// Perron-eigenvalue oracle for Markov chains and the x_L <-> z_L conversions.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirlab/model.hpp"
#include "dirlab/pricing.hpp"

namespace dirlab {

enum class LongRateMethod { plain_tail, reciprocal_extrapolation, spectral };

inline const char* to_string(LongRateMethod m) {
    switch (m) {
        case LongRateMethod::plain_tail: return "plain_tail";
        case LongRateMethod::reciprocal_extrapolation: return "reciprocal_extrapolation";
        case LongRateMethod::spectral: return "spectral";
    }
    return "?";
}

inline LongRateMethod parse_long_rate_method(const std::string& name) {
    if (name == "plain_tail") return LongRateMethod::plain_tail;
    if (name == "reciprocal_extrapolation") return LongRateMethod::reciprocal_extrapolation;
    if (name == "spectral") return LongRateMethod::spectral;
    throw std::invalid_argument("unknown long-rate method '" + name + "'");
}

struct LongRateEstimate {
    double value = 0.0;
    LongRateMethod method = LongRateMethod::plain_tail;
    double residual = 0.0;  // >= 0; fit / convergence diagnostic
    double T_used = 0.0;
    bool converged = true;  // residual <= tol
};

namespace detail {

struct LineFit {
    double intercept;
    double rms;
};

// Least squares of values on 1/(T - origin) over [first, first + count).
inline LineFit fit_reciprocal(std::span<const double> maturities, std::span<const double> values, double origin,
                              std::size_t first, std::size_t count) {
    double su = 0.0, sv = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        su += 1.0 / (maturities[i] - origin);
        sv += values[i];
    }
    const double mu = su / static_cast<double>(count);
    const double mv = sv / static_cast<double>(count);
    double suu = 0.0, suv = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const double du = 1.0 / (maturities[i] - origin) - mu;
        suu += du * du;
        suv += du * (values[i] - mv);
    }
    const double slope = suv / suu;
    const double intercept = mv - slope * mu;
    double ss = 0.0;
    for (std::size_t i = first; i < first + count; ++i) {
        const double e = values[i] - intercept - slope / (maturities[i] - origin);
        ss += e * e;
    }
    return {intercept, std::sqrt(ss / static_cast<double>(count))};
}

}  // namespace detail

/// Estimates lim_{T->inf} value(T) from a sampled curve.
///
/// plain_tail: the value at the largest T; residual = |last - second-to-last|.
/// reciprocal_extrapolation: least-squares fit value(T) ~ a + b/(T - origin)
/// over the last ceil(n/2) maturities, returning a. The residual is the larger
/// of the fit RMS and the shift of a when the window moves back by one point.
inline LongRateEstimate extract_long_rate(std::span<const double> maturities, std::span<const double> values,
                                          LongRateMethod method, double tol, double origin = 0.0) {
    const std::size_t n = maturities.size();
    if (values.size() != n) throw std::invalid_argument("extract_long_rate: values must align with maturities");
    if (n < 4) throw std::invalid_argument("extract_long_rate: need at least 4 maturities");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) throw std::invalid_argument("extract_long_rate: values must be finite");
        if (i > 0 && !(maturities[i] > maturities[i - 1])) {
            throw std::invalid_argument("extract_long_rate: maturities must be strictly increasing");
        }
    }

    LongRateEstimate est;
    est.method = method;
    est.T_used = maturities[n - 1];
    switch (method) {
        case LongRateMethod::plain_tail:
            est.value = values[n - 1];
            est.residual = std::abs(values[n - 1] - values[n - 2]);
            break;
        case LongRateMethod::reciprocal_extrapolation: {
            if (!(maturities[0] > origin)) throw std::invalid_argument("extract_long_rate: maturities must exceed origin");
            const std::size_t m = (n + 1) / 2;
            const auto tail = detail::fit_reciprocal(maturities, values, origin, n - m, m);
            const auto shifted = detail::fit_reciprocal(maturities, values, origin, n - m - 1, m);
            est.value = tail.intercept;
            est.residual = std::max(tail.rms, std::abs(tail.intercept - shifted.intercept));
            break;
        }
        case LongRateMethod::spectral:
            throw std::invalid_argument("extract_long_rate: spectral estimates come from perron_long_rate");
    }
    est.converged = est.residual <= tol;
    return est;
}

/// Period of an irreducible chain: gcd of level[i] + 1 - level[j] over all edges i -> j.
inline std::size_t chain_period(const MarkovChain& chain) {
    const std::size_t n = chain.size();
    std::vector<long> level(n, -1);
    std::vector<std::size_t> order{0};
    level[0] = 0;
    for (std::size_t head = 0; head < order.size(); ++head) {
        const std::size_t i = order[head];
        for (std::size_t j = 0; j < n; ++j) {
            if (chain.transition[i][j] > 0.0 && level[j] < 0) {
                level[j] = level[i] + 1;
                order.push_back(j);
            }
        }
    }
    long g = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (chain.transition[i][j] > 0.0 && level[i] >= 0) g = std::gcd(g, std::abs(level[i] + 1 - level[j]));
        }
    }
    return static_cast<std::size_t>(g);
}

/// x_L as the spectral radius of the discounted transition matrix, by power
/// iteration from the uniform vector. Refuses reducible or periodic chains,
/// for which the limit may depend on the starting state.
inline LongRateEstimate perron_long_rate(const MarkovChain& chain, double gap_tol = 1e-12,
                                         std::size_t max_iterations = 1'000'000) {
    const std::size_t n = chain.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (bool r : chain.reachable_from(i)) {
            if (!r) throw std::invalid_argument("perron_long_rate: chain is reducible; x_L may depend on the state");
        }
    }
    if (const auto period = chain_period(chain); period != 1) {
        throw std::invalid_argument("perron_long_rate: chain is periodic (period " + std::to_string(period) + ")");
    }

    // v stays strictly positive, so min and max of (Mv)_i / v_i bracket the
    // spectral radius (Collatz-Wielandt); iterate until the bracket is tight.
    const Matrix m = discounted_matrix(chain);
    std::vector<double> v(n, 1.0 / static_cast<double>(n)), w(n);
    double lo = 0.0, hi = INFINITY;
    std::size_t it = 0;
    bool done = false;
    while (!done && it < max_iterations) {
        ++it;
        double total = 0.0;
        lo = INFINITY;
        hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * v[j];
            w[i] = acc;
            total += acc;
            lo = std::min(lo, acc / v[i]);
            hi = std::max(hi, acc / v[i]);
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / total;
        done = hi - lo <= gap_tol;
    }
    const double ratio = 0.5 * (lo + hi);
    const double gap = 0.5 * (hi - lo);

    LongRateEstimate est;
    est.value = ratio;
    est.method = LongRateMethod::spectral;
    est.residual = gap;
    est.T_used = static_cast<double>(it);
    est.converged = done;
    return est;
}

/// z_L from x_L: 1/x - 1 (discrete) or -ln x (continuous).
inline double zero_from_x(double x, Regime regime) {
    if (!(x > 0.0)) throw std::invalid_argument("convert: x_L must be > 0");
    return regime == Regime::discrete ? 1.0 / x - 1.0 : -std::log(x);
}

/// Inverse of zero_from_x.
inline double x_from_zero(double z, Regime regime) {
    if (regime == Regime::discrete) {
        if (!(1.0 + z > 0.0)) throw std::invalid_argument("convert: discrete z_L must exceed -1");
        return 1.0 / (1.0 + z);
    }
    return std::exp(-z);
}

/// |f(t,T) - z(t,T)| along a maturity schedule.
struct Lemma1Report {
    std::vector<double> maturities;
    std::vector<double> discrepancy;
    double tail = 0.0;       // discrepancy at the largest maturity
    bool shrinking = true;   // non-increasing along the schedule
};

namespace detail {

// scale[i] is 1 + |log P(t, T_i)|; a rise smaller than the rounding left by
// accumulating that log price is noise, not growth.
inline Lemma1Report finish_lemma1(std::vector<double> mats, std::vector<double> gaps, const std::vector<double>& scale) {
    Lemma1Report rep{std::move(mats), std::move(gaps), 0.0, true};
    rep.tail = rep.discrepancy.back();
    for (std::size_t i = 1; i < rep.discrepancy.size(); ++i) {
        const double noise = 64 * std::numeric_limits<double>::epsilon() * scale[i];
        if (rep.discrepancy[i] > rep.discrepancy[i - 1] + noise) rep.shrinking = false;
    }
    return rep;
}

}  // namespace detail

inline Lemma1Report lemma1_check(const ModelSpec& model, const ModelState& state, double t,
                                 std::span<const double> schedule) {
    if (model.regime() != Regime::discrete) throw std::invalid_argument("lemma1_check: discrete regime only");
    if (schedule.empty()) throw std::invalid_argument("lemma1_check: empty schedule");
    const auto curves = build_curves(model, state, t, schedule);
    std::vector<double> gaps(schedule.size());
    std::vector<double> scale(schedule.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        gaps[i] = std::abs(curves.rates.forward[i] - curves.rates.zero[i]);
        scale[i] = 1.0 + std::abs(curves.discount.log_prices[i]);
    }
    return detail::finish_lemma1({schedule.begin(), schedule.end()}, std::move(gaps), scale);
}

/// Same check for an arbitrary discrete forward curve I -> f(t, I), with
/// z(t,T) = prod_{I=t}^{T-1} (1 + f(t,I))^(1/(T-t)) - 1.
inline Lemma1Report lemma1_check(const std::function<double(std::size_t)>& forward, std::size_t t,
                                 std::span<const std::size_t> schedule) {
    if (schedule.empty()) throw std::invalid_argument("lemma1_check: empty schedule");
    std::vector<double> mats, gaps, scale;
    double log_growth = 0.0;
    std::size_t reached = t;
    for (std::size_t T : schedule) {
        if (T <= t || T < reached) throw std::invalid_argument("lemma1_check: schedule must be increasing and > t");
        for (; reached < T; ++reached) log_growth += std::log1p(forward(reached));
        const double z = std::expm1(log_growth / static_cast<double>(T - t));
        mats.push_back(static_cast<double>(T));
        gaps.push_back(std::abs(forward(T) - z));
        scale.push_back(1.0 + std::abs(log_growth));
    }
    return detail::finish_lemma1(std::move(mats), std::move(gaps), scale);
}

}  // namespace dirlab

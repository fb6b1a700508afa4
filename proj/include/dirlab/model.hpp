#pragma once

// Short-rate models under the martingale measure Q, exact path simulation and
// the bank-account numeraire.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dirlab/parallel.hpp"
#include "dirlab/philox.hpp"

namespace dirlab {

enum class Regime { discrete, continuous };

inline const char* to_string(Regime regime) {
    return regime == Regime::discrete ? "discrete" : "continuous";
}

/// Invalid model, grid or path parameters. The message names the violated invariant.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

inline std::size_t as_period(double t, const char* what) {
    if (!is_integral(t) || t < 0.0) {
        throw std::invalid_argument(std::string(what) + " must be a non-negative integer period in the discrete regime");
    }
    return static_cast<std::size_t>(t);
}

}  // namespace detail

/// Time domain of a simulation. `output_step` only affects reporting.
struct TimeGrid {
    Regime regime = Regime::continuous;
    double horizon = 1.0;
    double output_step = 1.0;

    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ModelError("grid: horizon must be > 0");
        if (regime == Regime::discrete) {
            if (!detail::is_integral(horizon)) throw ModelError("grid: discrete horizon must be an integer number of periods");
            return;
        }
        if (!(output_step > 0.0) || output_step > horizon) {
            throw ModelError("grid: output_step must satisfy 0 < output_step <= horizon");
        }
    }

    /// Strictly increasing times starting at 0 and ending at the horizon.
    std::vector<double> reporting_times() const {
        validate();
        std::vector<double> times;
        if (regime == Regime::discrete) {
            for (std::size_t k = 0; k <= static_cast<std::size_t>(horizon); ++k) times.push_back(static_cast<double>(k));
            return times;
        }
        for (std::size_t k = 0;; ++k) {
            const double u = static_cast<double>(k) * output_step;
            if (u > horizon * (1.0 - 1e-12)) break;
            times.push_back(u);
        }
        times.push_back(horizon);
        return times;
    }
};

struct ConstantRate {
    double r = 0.0;
};

/// r_t = r0 + delta * N_t with N a Poisson process of intensity lambda.
struct PoissonJump {
    double r0 = 0.0;
    double delta = 0.0;
    double lambda = 0.0;
};

/// One-period rates driven by a finite-state Markov chain.
struct MarkovChain {
    std::vector<double> state_rates;
    std::vector<std::vector<double>> transition;  // row-stochastic
    std::size_t initial_state = 0;

    std::size_t size() const { return state_rates.size(); }

    /// States reachable from `from` through positive transition entries (including itself).
    std::vector<bool> reachable_from(std::size_t from) const {
        std::vector<bool> seen(size(), false);
        std::queue<std::size_t> frontier;
        seen[from] = true;
        frontier.push(from);
        while (!frontier.empty()) {
            const std::size_t i = frontier.front();
            frontier.pop();
            for (std::size_t j = 0; j < size(); ++j) {
                if (transition[i][j] > 0.0 && !seen[j]) {
                    seen[j] = true;
                    frontier.push(j);
                }
            }
        }
        return seen;
    }
};

/// Information at time t that the shipped (Markov) models need for conditioning.
struct ModelState {
    double rate = 0.0;
    std::size_t chain_state = 0;

    friend bool operator==(const ModelState&, const ModelState&) = default;
    friend auto operator<=>(const ModelState&, const ModelState&) = default;
};

class ModelSpec {
public:
    using Kind = std::variant<ConstantRate, PoissonJump, MarkovChain>;

    ModelSpec(Kind kind, Regime regime) : kind_(std::move(kind)), regime_(regime) { validate(); }

    static ModelSpec constant(double r, Regime regime) { return {ConstantRate{r}, regime}; }
    static ModelSpec poisson(double r0, double delta, double lambda) {
        return {PoissonJump{r0, delta, lambda}, Regime::continuous};
    }
    static ModelSpec markov(std::vector<double> rates, std::vector<std::vector<double>> transition,
                            std::size_t initial_state = 0) {
        return {MarkovChain{std::move(rates), std::move(transition), initial_state}, Regime::discrete};
    }

    const Kind& kind() const { return kind_; }
    Regime regime() const { return regime_; }

    template <typename T>
    bool is() const { return std::holds_alternative<T>(kind_); }
    template <typename T>
    const T& as() const { return std::get<T>(kind_); }

    const char* name() const {
        if (is<ConstantRate>()) return "constant";
        if (is<PoissonJump>()) return "poisson";
        return "markov";
    }

    ModelState initial_state() const {
        return std::visit(
            [](const auto& m) -> ModelState {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, ConstantRate>) return {m.r, 0};
                else if constexpr (std::is_same_v<M, PoissonJump>) return {m.r0, 0};
                else return {m.state_rates[m.initial_state], m.initial_state};
            },
            kind_);
    }

    /// Same model restarted from `state` (used to condition on F_t for Markov models).
    ModelSpec restarted_from(const ModelState& state) const {
        if (is<PoissonJump>()) {
            auto m = as<PoissonJump>();
            m.r0 = state.rate;
            return {m, regime_};
        }
        if (is<MarkovChain>()) {
            auto m = as<MarkovChain>();
            m.initial_state = state.chain_state;
            return {std::move(m), regime_};
        }
        return *this;
    }

private:
    void validate() const {
        std::visit([this](const auto& m) { check(m); }, kind_);
    }

    void check(const ConstantRate& m) const {
        if (!std::isfinite(m.r)) throw ModelError("constant: r must be finite");
        if (regime_ == Regime::discrete && !(1.0 + m.r > 0.0)) {
            throw ModelError("constant: discrete rates require 1 + r > 0");
        }
    }

    void check(const PoissonJump& m) const {
        if (regime_ != Regime::continuous) throw ModelError("poisson: model is continuous-regime only");
        if (!std::isfinite(m.r0)) throw ModelError("poisson: r0 must be finite");
        if (!(m.delta > 0.0) || !std::isfinite(m.delta)) throw ModelError("poisson: delta must be > 0");
        if (!(m.lambda > 0.0) || !std::isfinite(m.lambda)) throw ModelError("poisson: lambda must be > 0");
    }

    void check(const MarkovChain& m) const {
        if (regime_ != Regime::discrete) throw ModelError("markov: model is discrete-regime only");
        const std::size_t n = m.size();
        if (n == 0) throw ModelError("markov: state_rates must be non-empty");
        if (m.transition.size() != n) throw ModelError("markov: transition must be square with one row per state");
        for (const auto& row : m.transition) {
            if (row.size() != n) throw ModelError("markov: transition must be square with one row per state");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || !std::isfinite(p)) throw ModelError("markov: transition entries must be >= 0");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12) throw ModelError("markov: every transition row must sum to 1 within 1e-12");
        }
        if (m.initial_state >= n) throw ModelError("markov: initial_state out of range");
        const auto reach = m.reachable_from(m.initial_state);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(m.state_rates[i])) throw ModelError("markov: state_rates must be finite");
            if (reach[i] && !(1.0 + m.state_rates[i] > 0.0)) {
                throw ModelError("markov: reachable rates require 1 + R > 0");
            }
        }
    }

    Kind kind_;
    Regime regime_;
};

/// One realized short-rate trajectory.
///
/// Continuous paths are stored as r0 plus sorted jump times of size delta, so
/// every integral of the rate is exact. Discrete paths store R_k and the chain
/// state for k = 0..horizon.
class ShortRatePath {
public:
    static ShortRatePath jumps(double r0, double delta, std::vector<double> jump_times, double horizon) {
        if (!std::is_sorted(jump_times.begin(), jump_times.end())) throw ModelError("path: jump times must be sorted");
        if (!jump_times.empty() && (jump_times.front() < 0.0 || jump_times.back() > horizon)) {
            throw ModelError("path: jump times must lie in [0, horizon]");
        }
        ShortRatePath p;
        p.regime_ = Regime::continuous;
        p.horizon_ = horizon;
        p.r0_ = r0;
        p.delta_ = delta;
        p.jump_times_ = std::move(jump_times);
        return p;
    }

    static ShortRatePath periods(std::vector<double> rates, std::vector<std::size_t> states = {}) {
        if (rates.empty()) throw ModelError("path: discrete path needs at least one rate");
        if (!states.empty() && states.size() != rates.size()) throw ModelError("path: states must align with rates");
        for (double r : rates) {
            if (!(1.0 + r > 0.0)) throw ModelError("path: discrete rates require 1 + R > 0");
        }
        ShortRatePath p;
        p.regime_ = Regime::discrete;
        p.horizon_ = static_cast<double>(rates.size() - 1);
        p.rates_ = std::move(rates);
        p.states_ = states.empty() ? std::vector<std::size_t>(p.rates_.size(), 0) : std::move(states);
        return p;
    }

    Regime regime() const { return regime_; }
    double horizon() const { return horizon_; }
    const std::vector<double>& jump_times() const { return jump_times_; }
    const std::vector<double>& period_rates() const { return rates_; }

    /// Number of jumps in [0, u].
    std::size_t jump_count(double u) const {
        return static_cast<std::size_t>(std::upper_bound(jump_times_.begin(), jump_times_.end(), u) - jump_times_.begin());
    }

    double rate_at(double u) const {
        check_time(u);
        if (regime_ == Regime::continuous) return r0_ + delta_ * static_cast<double>(jump_count(u));
        return rates_[static_cast<std::size_t>(std::floor(u))];
    }

    ModelState state_at(double u) const {
        check_time(u);
        if (regime_ == Regime::continuous) return {rate_at(u), 0};
        const auto k = detail::as_period(u, "observation time");
        return {rates_[k], states_[k]};
    }

    /// log B_t: sum of log(1 + R_i) for i < t (discrete), integral of R over [0, t] (continuous).
    double log_bank_account(double t) const {
        check_time(t);
        if (regime_ == Regime::continuous) return integral(0.0, t);
        const auto k = detail::as_period(t, "t");
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += std::log1p(rates_[i]);
        return acc;
    }

    /// Exact integral of the piecewise-constant rate over [s, t]. Continuous regime only.
    double integral(double s, double t) const {
        if (regime_ != Regime::continuous) throw std::invalid_argument("integrated_rate: continuous regime only");
        if (s > t) throw std::invalid_argument("integrated_rate: requires s <= t");
        check_time(s);
        check_time(t);
        double acc = r0_ * (t - s);
        for (double tau : jump_times_) {
            if (tau >= t) break;
            acc += delta_ * (t - std::max(tau, s));
        }
        return acc;
    }

    friend bool operator==(const ShortRatePath&, const ShortRatePath&) = default;

private:
    ShortRatePath() = default;

    void check_time(double u) const {
        if (!(u >= 0.0) || u > horizon_) throw std::out_of_range("time outside [0, horizon]");
    }

    Regime regime_ = Regime::continuous;
    double horizon_ = 0.0;
    double r0_ = 0.0;
    double delta_ = 0.0;
    std::vector<double> jump_times_;
    std::vector<double> rates_;
    std::vector<std::size_t> states_;
};

inline double bank_account(const ShortRatePath& path, double t) { return std::exp(path.log_bank_account(t)); }

inline double integrated_rate(const ShortRatePath& path, double s, double t) { return path.integral(s, t); }

struct ScenarioSet {
    ModelSpec model;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::vector<ShortRatePath> paths;
};

namespace detail {

inline void check_regimes(const ModelSpec& model, const TimeGrid& grid) {
    grid.validate();
    if (model.regime() != grid.regime) {
        throw ModelError(std::string("regime mismatch: model is ") + to_string(model.regime()) + ", grid is " +
                         to_string(grid.regime));
    }
}

}  // namespace detail

/// Path `index` of the scenario set keyed by `seed`. A pure function of its arguments.
inline ShortRatePath simulate_path(const ModelSpec& model, const TimeGrid& grid, std::uint64_t seed,
                                   std::uint64_t index) {
    if (model.is<ConstantRate>()) {
        const double r = model.as<ConstantRate>().r;
        if (grid.regime == Regime::continuous) return ShortRatePath::jumps(r, 0.0, {}, grid.horizon);
        return ShortRatePath::periods(std::vector<double>(static_cast<std::size_t>(grid.horizon) + 1, r));
    }

    RandomStream rng(seed, index);
    if (model.is<PoissonJump>()) {
        const auto& m = model.as<PoissonJump>();
        std::vector<double> jumps;
        for (double u = rng.exponential(m.lambda); u <= grid.horizon; u += rng.exponential(m.lambda)) {
            jumps.push_back(u);
        }
        return ShortRatePath::jumps(m.r0, m.delta, std::move(jumps), grid.horizon);
    }

    const auto& m = model.as<MarkovChain>();
    const auto periods = static_cast<std::size_t>(grid.horizon);
    std::vector<double> rates(periods + 1);
    std::vector<std::size_t> states(periods + 1);
    std::size_t state = m.initial_state;
    for (std::size_t k = 0; k <= periods; ++k) {
        states[k] = state;
        rates[k] = m.state_rates[state];
        if (k < periods) state = rng.categorical(m.transition[state]);
    }
    return ShortRatePath::periods(std::move(rates), std::move(states));
}

/// n_paths independent paths under Q. Output is invariant to `threads`.
inline ScenarioSet simulate_paths(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                                  std::uint64_t seed, unsigned threads = 1) {
    detail::check_regimes(model, grid);
    if (n_paths < 1) throw std::invalid_argument("simulate_paths: n_paths must be >= 1");
    std::vector<ShortRatePath> paths(n_paths, ShortRatePath::periods({0.0}));
    parallel_for(n_paths, threads, [&](std::size_t i) { paths[i] = simulate_path(model, grid, seed, i); });
    return {model, grid, seed, std::move(paths)};
}

}  // namespace dirlab

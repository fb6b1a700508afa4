#pragma once

// Exact conditional expectations, conditional L^p norms and conditional
// essential suprema on finite probability spaces. A sub-sigma-algebra of a
// finite space is a partition of its atoms, so every object here is exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace dirlab {

/// Atoms with strictly positive probabilities summing to 1 (within 1e-12).
class FiniteProbSpace {
public:
    explicit FiniteProbSpace(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw std::invalid_argument("space: at least one atom required");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p > 0.0)) throw std::invalid_argument("space: atom probabilities must be > 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("space: probabilities must sum to 1");
    }

    static FiniteProbSpace uniform(std::size_t n) { return FiniteProbSpace(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

    std::size_t size() const { return probs_.size(); }
    double prob(std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

private:
    std::vector<double> probs_;
};

/// A random variable: one value per atom.
using Rv = std::vector<double>;

/// Disjoint non-empty cells covering every atom.
class Partition {
public:
    Partition(std::vector<std::vector<std::size_t>> cells, std::size_t n_atoms)
        : cells_(std::move(cells)), cell_of_(n_atoms, npos) {
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            if (cells_[c].empty()) throw std::invalid_argument("partition: cells must be non-empty");
            for (std::size_t a : cells_[c]) {
                if (a >= n_atoms) throw std::invalid_argument("partition: atom index out of range");
                if (cell_of_[a] != npos) throw std::invalid_argument("partition: cells must be disjoint");
                cell_of_[a] = c;
            }
        }
        for (std::size_t a : cell_of_) {
            if (a == npos) throw std::invalid_argument("partition: cells must cover every atom");
        }
    }

    static Partition trivial(std::size_t n) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return Partition({std::move(all)}, n);
    }

    static Partition discrete(std::size_t n) {
        std::vector<std::vector<std::size_t>> cells(n);
        for (std::size_t i = 0; i < n; ++i) cells[i] = {i};
        return Partition(std::move(cells), n);
    }

    std::size_t n_atoms() const { return cell_of_.size(); }
    const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }
    std::size_t cell_of(std::size_t atom) const { return cell_of_[atom]; }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::vector<std::vector<std::size_t>> cells_;
    std::vector<std::size_t> cell_of_;
};

namespace detail {

inline void check_shapes(const FiniteProbSpace& space, std::span<const double> x, const Partition& g) {
    if (x.size() != space.size() || g.n_atoms() != space.size()) {
        throw std::invalid_argument("conditional: random variable, space and partition sizes differ");
    }
}

inline void check_non_negative(std::span<const double> x) {
    for (double v : x) {
        if (!(v >= 0.0)) throw std::invalid_argument("conditional: values must be non-negative");
    }
}

template <typename PerCell>
Rv broadcast(const Partition& g, PerCell&& per_cell) {
    Rv out(g.n_atoms());
    for (const auto& cell : g.cells()) {
        const double v = per_cell(cell);
        for (std::size_t a : cell) out[a] = v;
    }
    return out;
}

}  // namespace detail

inline double expectation(const FiniteProbSpace& space, std::span<const double> x) {
    if (x.size() != space.size()) throw std::invalid_argument("expectation: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += space.prob(i) * x[i];
    return acc;
}

/// E[X | G]: on each cell, sum p_i x_i / sum p_i.
inline Rv cond_expectation(const FiniteProbSpace& space, std::span<const double> x, const Partition& g) {
    detail::check_shapes(space, x, g);
    return detail::broadcast(g, [&](const std::vector<std::size_t>& cell) {
        double num = 0.0, den = 0.0;
        for (std::size_t a : cell) {
            num += space.prob(a) * x[a];
            den += space.prob(a);
        }
        return num / den;
    });
}

/// E[X^p | G]^(1/p) for X >= 0 and p >= 1, via a log-sum-exp of
/// p log x_i + log p_i so that large p does not overflow. Zero atoms drop out.
inline Rv cond_p_norm(const FiniteProbSpace& space, std::span<const double> x, double p, const Partition& g) {
    detail::check_shapes(space, x, g);
    detail::check_non_negative(x);
    if (!(p >= 1.0)) throw std::invalid_argument("cond_p_norm: p must be >= 1");
    return detail::broadcast(g, [&](const std::vector<std::size_t>& cell) {
        double peak = -std::numeric_limits<double>::infinity();
        double mass = 0.0;
        for (std::size_t a : cell) {
            mass += space.prob(a);
            if (x[a] > 0.0) peak = std::max(peak, p * std::log(x[a]) + std::log(space.prob(a)));
        }
        if (!std::isfinite(peak)) return 0.0;
        double sum = 0.0;
        for (std::size_t a : cell) {
            if (x[a] > 0.0) sum += std::exp(p * std::log(x[a]) + std::log(space.prob(a)) - peak);
        }
        return std::exp((peak + std::log(sum) - std::log(mass)) / p);
    });
}

/// Conditional essential supremum: the per-cell maximum (atoms have positive mass).
inline Rv cond_ess_sup(const FiniteProbSpace& space, std::span<const double> x, const Partition& g) {
    detail::check_shapes(space, x, g);
    return detail::broadcast(g, [&](const std::vector<std::size_t>& cell) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t a : cell) m = std::max(m, x[a]);
        return m;
    });
}

/// Gap between the conditional p-norm and the conditional ess-sup at the
/// largest p, with the per-cell bound ess_sup * (1 - mass^(1/p)), where mass is
/// the conditional probability of the maximizing atoms.
struct PnormLimitReport {
    double p = 0.0;
    Rv gap;
    Rv bound;
    double max_gap = 0.0;
    bool within_bound = true;
};

inline PnormLimitReport pnorm_limit_check(const FiniteProbSpace& space, std::span<const double> x, const Partition& g,
                                          std::span<const double> p_schedule) {
    if (p_schedule.empty()) throw std::invalid_argument("pnorm_limit_check: empty schedule");
    const double p = *std::max_element(p_schedule.begin(), p_schedule.end());
    const Rv norm = cond_p_norm(space, x, p, g);
    const Rv sup = cond_ess_sup(space, x, g);

    PnormLimitReport rep{p, Rv(x.size()), Rv(x.size()), 0.0, true};
    for (const auto& cell : g.cells()) {
        const double top = sup[cell.front()];
        double top_mass = 0.0, mass = 0.0;
        for (std::size_t a : cell) {
            mass += space.prob(a);
            if (x[a] == top) top_mass += space.prob(a);
        }
        const double bound = top * -std::expm1(std::log(top_mass / mass) / p);
        for (std::size_t a : cell) {
            rep.gap[a] = std::abs(sup[a] - norm[a]);
            rep.bound[a] = bound;
            rep.max_gap = std::max(rep.max_gap, rep.gap[a]);
            // a few ulps of the log-sum-exp path are allowed on top of the analytic bound
            if (rep.gap[a] > bound + 64 * std::numeric_limits<double>::epsilon() * top) rep.within_bound = false;
        }
    }
    return rep;
}

struct Lemma2TraceRow {
    std::size_t n = 0;
    std::size_t atom = 0;
    double norm = 0.0;   // E[X_n^n | G]^(1/n) at the atom
    double limit = 0.0;  // X at the atom
    bool verdict = false;  // limit <= norm + tol
};

struct Lemma2Report {
    std::vector<Lemma2TraceRow> trace;
    Rv bound;                   // C_est: minimum of the norms over the final octave of the schedule
    std::vector<bool> verdict;  // X <= C_est + tol per atom
    bool sequence_converges = true;
    bool pass() const {
        return std::all_of(verdict.begin(), verdict.end(), [](bool v) { return v; });
    }
};

/// Finite-schedule check that X <= liminf_n E[X_n^n | G]^(1/n). The liminf is
/// proxied by the minimum over schedule entries n >= n_max / 2. A sequence
/// whose sup-distance to X grows over that tail is reported through
/// `sequence_converges`, not failed.
inline Lemma2Report lemma2_check(const FiniteProbSpace& space, const std::function<Rv(std::size_t)>& x_n,
                                 std::span<const double> x_limit, const Partition& g,
                                 std::span<const std::size_t> n_schedule, double tol) {
    if (n_schedule.empty()) throw std::invalid_argument("lemma2_check: empty schedule");
    for (std::size_t k = 0; k < n_schedule.size(); ++k) {
        if (n_schedule[k] < 1 || (k > 0 && n_schedule[k] <= n_schedule[k - 1])) {
            throw std::invalid_argument("lemma2_check: schedule must be strictly increasing and >= 1");
        }
    }
    detail::check_shapes(space, x_limit, g);
    detail::check_non_negative(x_limit);

    const std::size_t atoms = space.size();
    const std::size_t n_max = n_schedule.back();
    Lemma2Report rep;
    rep.bound.assign(atoms, std::numeric_limits<double>::infinity());
    double prev_distance = std::numeric_limits<double>::infinity();
    for (std::size_t n : n_schedule) {
        const Rv xn = x_n(n);
        const Rv norm = cond_p_norm(space, xn, static_cast<double>(n), g);
        const bool in_tail = 2 * n >= n_max;
        double distance = 0.0;
        for (std::size_t a = 0; a < atoms; ++a) {
            distance = std::max(distance, std::abs(xn[a] - x_limit[a]));
            rep.trace.push_back({n, a, norm[a], x_limit[a], x_limit[a] <= norm[a] + tol});
            if (in_tail) rep.bound[a] = std::min(rep.bound[a], norm[a]);
        }
        if (in_tail && distance > prev_distance) rep.sequence_converges = false;
        prev_distance = distance;
    }
    rep.verdict.resize(atoms);
    for (std::size_t a = 0; a < atoms; ++a) rep.verdict[a] = x_limit[a] <= rep.bound[a] + tol;
    return rep;
}

/// Largest atom-wise excess of E[X f | G] over
/// E[X^n | G]^(1/n) E[f^(n/(n-1)) | G]^((n-1)/n). Non-positive when the
/// conditional Hoelder inequality holds (up to rounding).
inline double holder_excess(const FiniteProbSpace& space, std::span<const double> x, std::span<const double> f,
                            const Partition& g, double n) {
    if (!(n > 1.0)) throw std::invalid_argument("holder_excess: n must be > 1");
    Rv xf(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xf[i] = x[i] * f[i];
    const Rv lhs = cond_expectation(space, xf, g);
    const Rv nx = cond_p_norm(space, x, n, g);
    const Rv nf = cond_p_norm(space, f, n / (n - 1.0), g);
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < x.size(); ++a) excess = std::max(excess, lhs[a] - nx[a] * nf[a]);
    return excess;
}

/// max_atom |E[f^(n/(n-1)) | G]^((n-1)/n) - E[f | G]|; tends to 0 for bounded f.
inline double dominated_convergence_gap(const FiniteProbSpace& space, std::span<const double> f, const Partition& g,
                                        double n) {
    if (!(n > 1.0)) throw std::invalid_argument("dominated_convergence_gap: n must be > 1");
    const Rv norm = cond_p_norm(space, f, n / (n - 1.0), g);
    const Rv mean = cond_expectation(space, f, g);
    double gap = 0.0;
    for (std::size_t a = 0; a < f.size(); ++a) gap = std::max(gap, std::abs(norm[a] - mean[a]));
    return gap;
}

}  // namespace dirlab

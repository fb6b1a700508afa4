#pragma once

// CSV exports. Every floating-point value is written with 17 significant
// digits so files round-trip exactly and compare byte-for-byte across runs.

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dirlab/conditional_lp.hpp"
#include "dirlab/forward_measure.hpp"
#include "dirlab/harness.hpp"
#include "dirlab/long_rates.hpp"
#include "dirlab/model.hpp"
#include "dirlab/pricing.hpp"

namespace dirlab {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Minimal CSV row builder.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    CsvWriter& header(std::initializer_list<std::string_view> cols) {
        bool first = true;
        for (auto c : cols) {
            if (!first) os_ << ',';
            os_ << c;
            first = false;
        }
        os_ << '\n';
        return *this;
    }

    CsvWriter& cell(double v) { return raw(fmt17(v)); }
    CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
    CsvWriter& cell(bool v) { return raw(v ? "1" : "0"); }
    CsvWriter& cell(std::string_view v) { return raw(v); }
    CsvWriter& cell(const char* v) { return raw(v); }

    void end_row() {
        os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(std::string_view v) {
        if (!first_) os_ << ',';
        os_ << v;
        first_ = false;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
};

/// (path_id, time, rate) on the grid's reporting times.
inline void write_scenarios_csv(std::ostream& os, const ScenarioSet& set) {
    CsvWriter csv(os);
    csv.header({"path_id", "time", "rate"});
    const auto times = set.grid.reporting_times();
    for (std::size_t i = 0; i < set.paths.size(); ++i) {
        for (double u : times) {
            csv.cell(i).cell(u).cell(set.paths[i].rate_at(u));
            csv.end_row();
        }
    }
}

/// (t, T, logP, P, f, z, x).
inline void write_curve_csv(std::ostream& os, const Curves& curves) {
    CsvWriter csv(os);
    csv.header({"t", "T", "logP", "P", "f", "z", "x"});
    const auto& d = curves.discount;
    const auto& r = curves.rates;
    for (std::size_t i = 0; i < d.maturities.size(); ++i) {
        csv.cell(d.observation_time).cell(d.maturities[i]).cell(d.log_prices[i]).cell(d.price(i));
        csv.cell(r.forward[i]).cell(r.zero[i]).cell(r.x[i]);
        csv.end_row();
    }
}

/// (method, value, residual, T_used).
inline void write_long_rates_csv(std::ostream& os, const std::vector<LongRateEstimate>& estimates) {
    CsvWriter csv(os);
    csv.header({"method", "value", "residual", "T_used"});
    for (const auto& e : estimates) {
        csv.cell(to_string(e.method)).cell(e.value).cell(e.residual).cell(e.T_used);
        csv.end_row();
    }
}

/// (identity, s, t, T, lhs, rhs, gap, se).
inline void write_measure_csv(std::ostream& os, const MeasureReport& rep) {
    CsvWriter csv(os);
    csv.header({"identity", "s", "t", "T", "lhs", "rhs", "gap", "se"});
    for (const auto& r : rep.rows) {
        csv.cell(r.identity).cell(r.s).cell(r.t).cell(r.T).cell(r.lhs).cell(r.rhs).cell(r.gap).cell(r.se);
        csv.end_row();
    }
}

/// (n, atom, norm, limit, verdict).
inline void write_lemma_trace_csv(std::ostream& os, const Lemma2Report& rep) {
    CsvWriter csv(os);
    csv.header({"n", "atom", "norm", "limit", "verdict"});
    for (const auto& r : rep.trace) {
        csv.cell(r.n).cell(r.atom).cell(r.norm).cell(r.limit).cell(r.verdict);
        csv.end_row();
    }
}

/// One row per path of a MonotonicityReport.
inline void write_monotonicity_csv(std::ostream& os, const MonotonicityReport& rep) {
    CsvWriter csv(os);
    csv.header({"path_id", "rate_s", "state_s", "rate_t", "state_t", "x_L_s", "residual_s", "x_L_t", "residual_t",
                "epsilon", "violation"});
    for (const auto& p : rep.paths) {
        csv.cell(p.path_id).cell(p.state_s.rate).cell(p.state_s.chain_state).cell(p.state_t.rate);
        csv.cell(p.state_t.chain_state).cell(p.at_s.x).cell(p.at_s.residual).cell(p.at_t.x).cell(p.at_t.residual);
        csv.cell(p.epsilon).cell(p.violation);
        csv.end_row();
    }
}

/// Full curves of violating paths: (path_id, time, T, log_x).
inline void write_violations_csv(std::ostream& os, const MonotonicityReport& rep) {
    CsvWriter csv(os);
    csv.header({"path_id", "time", "T", "log_x"});
    for (const auto& v : rep.violations) {
        for (std::size_t i = 0; i < v.maturities_s.size(); ++i) {
            csv.cell(v.path_id).cell(rep.s).cell(v.maturities_s[i]).cell(v.log_x_s[i]);
            csv.end_row();
        }
        for (std::size_t i = 0; i < v.maturities_t.size(); ++i) {
            csv.cell(v.path_id).cell(rep.t).cell(v.maturities_t[i]).cell(v.log_x_t[i]);
            csv.end_row();
        }
    }
}

}  // namespace dirlab

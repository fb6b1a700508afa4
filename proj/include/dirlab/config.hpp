#pragma once

// JSON run configuration: sections model / grid / times / schedule / mc /
// tolerances (plus space / partition / variable for the L^p lab).

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dirlab/conditional_lp.hpp"
#include "dirlab/model.hpp"

namespace dirlab {

/// Malformed configuration; what() starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& problem) : std::runtime_error(field + ": " + problem) {}
};

class Config {
public:
    using json = nlohmann::json;

    explicit Config(json doc) : doc_(std::move(doc)) {
        if (!doc_.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
        try {
            return Config(json::parse(in));
        } catch (const json::parse_error& e) {
            throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
        }
    }

    static Config from_string(const std::string& text) { return Config(json::parse(text)); }

    bool has(const std::string& section) const { return doc_.contains(section); }
    bool has(const std::string& section, const std::string& key) const {
        return doc_.contains(section) && doc_.at(section).is_object() && doc_.at(section).contains(key);
    }

    double number(const std::string& section, const std::string& key) const {
        const auto& v = field(section, key);
        if (!v.is_number()) throw ConfigError(section + "." + key, "must be a number");
        return v.get<double>();
    }

    double number_or(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? number(section, key) : fallback;
    }

    std::uint64_t count(const std::string& section, const std::string& key) const {
        const auto& v = field(section, key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ConfigError(section + "." + key, "must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::uint64_t count_or(const std::string& section, const std::string& key, std::uint64_t fallback) const {
        return has(section, key) ? count(section, key) : fallback;
    }

    std::vector<double> numbers(const std::string& section, const std::string& key) const {
        const auto& v = field(section, key);
        if (!v.is_array()) throw ConfigError(section + "." + key, "must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(section + "." + key, "must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        if (!has(section, key)) return fallback;
        const auto& v = field(section, key);
        if (!v.is_string()) throw ConfigError(section + "." + key, "must be a string");
        return v.get<std::string>();
    }

    ModelSpec model() const {
        const std::string type = text("model", "type", "");
        try {
            if (type == "constant") {
                const std::string regime = text("model", "regime", "continuous");
                if (regime != "discrete" && regime != "continuous") {
                    throw ConfigError("model.regime", "must be 'discrete' or 'continuous'");
                }
                return ModelSpec::constant(number("model", "r"), regime == "discrete" ? Regime::discrete : Regime::continuous);
            }
            if (type == "poisson") {
                return ModelSpec::poisson(number("model", "r0"), number("model", "delta"), number("model", "lambda"));
            }
            if (type == "markov") {
                const auto rates = numbers("model", "state_rates");
                const auto& rows = field("model", "transition");
                if (!rows.is_array()) throw ConfigError("model.transition", "must be an array of rows");
                std::vector<std::vector<double>> transition;
                for (const auto& row : rows) {
                    if (!row.is_array()) throw ConfigError("model.transition", "must be an array of rows");
                    std::vector<double> r;
                    for (const auto& e : row) {
                        if (!e.is_number()) throw ConfigError("model.transition", "entries must be numbers");
                        r.push_back(e.get<double>());
                    }
                    transition.push_back(std::move(r));
                }
                return ModelSpec::markov(rates, std::move(transition), count_or("model", "initial_state", 0));
            }
        } catch (const ModelError& e) {
            throw ConfigError("model", e.what());
        }
        throw ConfigError("model.type", "must be one of 'constant', 'poisson', 'markov'");
    }

    TimeGrid grid(const ModelSpec& model) const {
        TimeGrid g{model.regime(), number("grid", "horizon"), number_or("grid", "output_step", 1.0)};
        try {
            g.validate();
        } catch (const ModelError& e) {
            throw ConfigError("grid", e.what());
        }
        return g;
    }

    /// schedule.maturities as an explicit list, or schedule.start/stop/count
    /// (inclusive, evenly spaced).
    std::vector<double> maturities() const {
        if (has("schedule", "maturities")) return numbers("schedule", "maturities");
        if (has("schedule", "start")) {
            const double start = number("schedule", "start");
            const double stop = number("schedule", "stop");
            const auto n = count("schedule", "count");
            if (n < 2 || !(stop > start)) throw ConfigError("schedule", "needs count >= 2 and stop > start");
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
            }
            out.back() = stop;
            return out;
        }
        throw ConfigError("schedule", "needs 'maturities' or 'start'/'stop'/'count'");
    }

    FiniteProbSpace space() const {
        try {
            if (has("space", "uniform")) return FiniteProbSpace::uniform(count("space", "uniform"));
            return FiniteProbSpace(numbers("space", "probs"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("space", e.what());
        }
    }

    Partition partition(std::size_t n_atoms) const {
        if (!has("partition")) return Partition::trivial(n_atoms);
        const auto& p = doc_.at("partition");
        try {
            if (p.is_string()) {
                if (p == "trivial") return Partition::trivial(n_atoms);
                if (p == "discrete") return Partition::discrete(n_atoms);
                throw ConfigError("partition", "must be 'trivial', 'discrete' or {\"cells\": [...]}");
            }
            const auto& cells = field("partition", "cells");
            if (!cells.is_array()) throw ConfigError("partition.cells", "must be an array of index arrays");
            std::vector<std::vector<std::size_t>> out;
            for (const auto& c : cells) {
                if (!c.is_array()) throw ConfigError("partition.cells", "must be an array of index arrays");
                out.push_back(c.get<std::vector<std::size_t>>());
            }
            return Partition(std::move(out), n_atoms);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("partition", e.what());
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("partition.cells", e.what());
        }
    }

    const json& doc() const { return doc_; }

private:
    const json& field(const std::string& section, const std::string& key) const {
        if (!doc_.contains(section)) throw ConfigError(section, "section is missing");
        const auto& s = doc_.at(section);
        if (!s.is_object()) throw ConfigError(section, "must be an object");
        if (!s.contains(key)) throw ConfigError(section + "." + key, "is missing");
        return s.at(key);
    }

    json doc_;
};

}  // namespace dirlab

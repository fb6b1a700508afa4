#pragma once

// Models shared by the unit and acceptance suites.

#include <vector>

#include "dirlab/model.hpp"

namespace dirlab::testing {

inline ModelSpec shipped_poisson() { return ModelSpec::poisson(0.05, 0.1, 0.5); }

/// Rates (0.0, 0.1), symmetric 0.5 transitions: x_L = 21/22.
inline ModelSpec markov2() { return ModelSpec::markov({0.0, 0.1}, {{0.5, 0.5}, {0.5, 0.5}}, 0); }

inline ModelSpec markov3() {
    return ModelSpec::markov({0.03, 0.05, 0.08}, {{0.5, 0.5, 0.0}, {0.2, 0.5, 0.3}, {0.4, 0.0, 0.6}}, 0);
}

inline ModelSpec markov4() {
    return ModelSpec::markov({0.02, 0.03, 0.04, 0.05},
                             {{0.4, 0.3, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}, {0.3, 0.3, 0.2, 0.2}},
                             0);
}

// Spectral radii of the discounted matrices, from a 40-digit eigenvalue solve.
inline constexpr double kRho2 = 21.0 / 22.0;
inline constexpr double kRho3 = 0.9520340602333895;
inline constexpr double kRho4 = 0.9668888379019049;

inline std::vector<ModelSpec> theorem_fleet() {
    return {ModelSpec::constant(0.03, Regime::discrete), markov2(), markov3(), markov4(), shipped_poisson()};
}

inline std::vector<ModelSpec> discrete_fleet() {
    return {ModelSpec::constant(0.03, Regime::discrete), markov2(), markov3(), markov4()};
}

}  // namespace dirlab::testing

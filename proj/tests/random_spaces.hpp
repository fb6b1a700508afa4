#pragma once

// Seed-fixed random finite spaces for the conditional L^p property sweeps.

#include <cstdint>
#include <vector>

#include "dirlab/conditional_lp.hpp"
#include "dirlab/philox.hpp"

namespace dirlab::testing {

struct RandomCase {
    FiniteProbSpace space;
    Partition g;
    Rv x, f;
};

// Random space with 2..12 atoms, a random partition and two non-negative variables.
inline RandomCase random_case(std::uint64_t id) {
    RandomStream rng(2718, id);
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 11);
    std::vector<double> w(n);
    double total = 0.0;
    for (double& v : w) total += (v = 0.05 + rng.uniform());
    for (double& v : w) v /= total;
    std::vector<std::vector<std::size_t>> cells;
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * n);
    std::vector<std::size_t> label(n);
    for (std::size_t a = 0; a < n; ++a) label[a] = a < k ? a : static_cast<std::size_t>(rng.uniform() * k);
    cells.resize(k);
    for (std::size_t a = 0; a < n; ++a) cells[label[a]].push_back(a);
    Rv x(n), f(n);
    for (std::size_t a = 0; a < n; ++a) {
        x[a] = rng.uniform() < 0.1 ? 0.0 : 5.0 * rng.uniform();
        f[a] = 3.0 * rng.uniform();
    }
    return {FiniteProbSpace(std::move(w)), Partition(std::move(cells), n), std::move(x), std::move(f)};
}

}  // namespace dirlab::testing

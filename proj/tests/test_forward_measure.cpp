#include "dirlab/forward_measure.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fleet.hpp"

namespace dirlab {
namespace {

using testing::markov2;
using testing::shipped_poisson;

TEST(RnWeights, ConstantRateWeightsAreOne) {
    const auto m = ModelSpec::constant(0.04, Regime::continuous);
    const auto set = simulate_paths(m, {Regime::continuous, 5.0, 5.0}, 10, 1);
    const auto w = rn_weights(set, 0.0, 5.0, price_closed_form(m, m.initial_state(), 0.0, 5.0));
    for (double x : w.weights) EXPECT_NEAR(x, 1.0, 1e-15);
    EXPECT_NEAR(w.normalization.value, 1.0, 1e-15);
}

TEST(RnWeights, EqualTimesGiveUnitWeights) {
    const auto set = simulate_paths(shipped_poisson(), {Regime::continuous, 5.0, 1.0}, 50, 2);
    const auto w = rn_weights(set, 3.0, 3.0, 1.0);
    for (double x : w.weights) EXPECT_EQ(x, 1.0);
}

TEST(RnWeights, PoissonNormalizationWithinThreeStandardErrors) {
    const auto m = shipped_poisson();
    const auto set = simulate_paths(m, {Regime::continuous, 5.0, 5.0}, 200000, 31);
    const auto w = rn_weights(set, 0.0, 5.0, price_closed_form(m, m.initial_state(), 0.0, 5.0));
    EXPECT_GT(w.normalization.std_error, 0.0);
    EXPECT_LE(std::abs(w.normalization.value - 1.0), 3.0 * w.normalization.std_error);
    for (double x : w.weights) EXPECT_GT(x, 0.0);
}

TEST(RnWeights, DiscreteWeightsUseThePredictableProduct) {
    const auto p = ShortRatePath::periods({0.1, 0.2, 0.3, 0.4});
    const ScenarioSet set{ModelSpec::constant(0.0, Regime::discrete), {Regime::discrete, 3.0, 1.0}, 0, {p}};
    const auto w = rn_weights(set, 1.0, 3.0, 0.5);
    EXPECT_NEAR(w.weights[0], 1.0 / (1.2 * 1.3) / 0.5, 1e-15);
}

TEST(RnWeights, Errors) {
    const auto set = simulate_paths(shipped_poisson(), {Regime::continuous, 5.0, 1.0}, 5, 2);
    EXPECT_THROW(rn_weights(set, 3.0, 2.0, 1.0), std::invalid_argument);
    EXPECT_THROW(rn_weights(set, 0.0, 2.0, 0.0), std::invalid_argument);
}

TEST(ForwardExpectation, ConstantPayoffIsExact) {
    const auto m = shipped_poisson();
    const auto set = simulate_paths(m, {Regime::continuous, 5.0, 5.0}, 1000, 8);
    const auto w = rn_weights(set, 0.0, 5.0, price_closed_form(m, m.initial_state(), 0.0, 5.0));
    const std::vector<double> payoff(1000, 0.7);
    const auto e = forward_expectation(w, payoff);
    EXPECT_EQ(e.value, 0.7);
    EXPECT_EQ(e.std_error, 0.0);
    EXPECT_THROW(forward_expectation(w, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST(ForwardExpectation, WeightedMeanByHand) {
    ForwardWeights w{0.0, 1.0, {1.0, 3.0}, {}};
    const std::vector<double> payoff{2.0, 6.0};
    EXPECT_NEAR(forward_expectation(w, payoff).value, (2.0 + 18.0) / 4.0, 1e-15);
}

TEST(TowerIdentity, SameTimeIsExact) {
    const auto rep = tower_identity_check(shipped_poisson(), {0.05, 0}, 2.0, 2.0, 9.0);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_TRUE(r.exact);
        EXPECT_EQ(r.gap, 0.0);
    }
    EXPECT_TRUE(rep.pass());
}

TEST(TowerIdentity, ConstantRateIsExact) {
    const auto m = ModelSpec::constant(0.03, Regime::discrete);
    const auto rep = tower_identity_check(m, m.initial_state(), 0.0, 4.0, 11.0);
    EXPECT_TRUE(rep.pass());
    for (const auto& r : rep.rows) EXPECT_LE(std::abs(r.gap), 1e-15);
}

TEST(TowerIdentity, MarkovIsExact) {
    for (const auto& m : testing::discrete_fleet()) {
        const auto rep = tower_identity_check(m, m.initial_state(), 0.0, 2.0, 5.0);
        EXPECT_TRUE(rep.pass()) << m.name();
        for (const auto& r : rep.rows) EXPECT_LE(std::abs(r.gap), 1e-12) << m.name() << " " << r.identity;
    }
    const auto rep = tower_identity_check(markov2(), {0.1, 1}, 3.0, 10.0, 40.0);
    EXPECT_TRUE(rep.pass());
}

TEST(TowerIdentity, PoissonWithinThreeStandardErrors) {
    MeasureCheckOptions opt;
    opt.seed = 5;
    opt.threads = 2;
    const auto rep = tower_identity_check(shipped_poisson(), {0.05, 0}, 0.0, 5.0, 15.0, opt);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_FALSE(r.exact);
        EXPECT_GT(r.se, 0.0);
        EXPECT_LE(std::abs(r.gap), 3.0 * r.se) << r.identity;
    }
    // lhs values come from the closed form
    EXPECT_DOUBLE_EQ(rep.rows[0].lhs, price_closed_form(shipped_poisson(), {0.05, 0}, 0.0, 15.0));
}

TEST(TowerIdentity, PoissonFromLaterState) {
    MeasureCheckOptions opt;
    opt.n_paths = 100000;
    opt.seed = 6;
    const auto rep = tower_identity_check(shipped_poisson(), {0.25, 0}, 4.0, 7.0, 20.0, opt);
    EXPECT_TRUE(rep.pass());
}

TEST(TowerIdentity, RejectsBadTimes) {
    EXPECT_THROW(tower_identity_check(markov2(), {0.0, 0}, 3.0, 2.0, 5.0), std::invalid_argument);
    EXPECT_THROW(tower_identity_check(markov2(), {0.0, 0}, 0.0, 6.0, 5.0), std::invalid_argument);
}

}  // namespace
}  // namespace dirlab

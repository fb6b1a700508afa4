#include "dirlab/long_rates.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fleet.hpp"

namespace dirlab {
namespace {

using testing::markov2;
using testing::shipped_poisson;

std::vector<double> poisson_zero_curve(double r, std::span<const double> taus) {
    std::vector<double> z;
    for (double tau : taus) z.push_back(r + 0.5 - 0.5 / (0.1 * tau) * (1.0 - std::exp(-0.1 * tau)));
    return z;
}

TEST(ExtractLongRate, ConstantCurve) {
    const std::vector<double> mats{10, 20, 40, 80};
    const std::vector<double> vals(4, 0.05);
    for (auto method : {LongRateMethod::plain_tail, LongRateMethod::reciprocal_extrapolation}) {
        const auto e = extract_long_rate(mats, vals, method, 1e-12);
        EXPECT_NEAR(e.value, 0.05, 1e-15);
        EXPECT_NEAR(e.residual, 0.0, 1e-15);
        EXPECT_TRUE(e.converged);
        EXPECT_EQ(e.T_used, 80.0);
    }
}

TEST(ExtractLongRate, PoissonTailAndExtrapolation) {
    const std::vector<double> taus{125, 250, 500, 1000};
    const auto z = poisson_zero_curve(0.05, taus);
    const auto plain = extract_long_rate(taus, z, LongRateMethod::plain_tail, 1e-2);
    // exact tail gap lambda (1 - e^{-delta tau}) / (delta tau) = 0.005 at tau = 1000
    EXPECT_NEAR(0.55 - plain.value, 0.005, 1e-12);
    EXPECT_LE(std::abs(plain.value - 0.55), 0.006);
    const auto rec = extract_long_rate(taus, z, LongRateMethod::reciprocal_extrapolation, 1e-3);
    EXPECT_LE(std::abs(rec.value - 0.55), 1e-3);
    EXPECT_TRUE(rec.converged);
}

TEST(ExtractLongRate, OriginShiftsTheFit) {
    // z(t, T) as a function of T with t = 5
    const std::vector<double> taus{125, 250, 500, 1000};
    const auto z = poisson_zero_curve(0.15, taus);
    std::vector<double> mats;
    for (double tau : taus) mats.push_back(5.0 + tau);
    const auto rec = extract_long_rate(mats, z, LongRateMethod::reciprocal_extrapolation, 1e-9, 5.0);
    EXPECT_NEAR(rec.value, 0.65, 1e-12);
}

// plain_tail residual on a doubling schedule is lambda / (delta tau): O(1/T).
TEST(ExtractLongRate, PlainTailResidualDecaysLikeOneOverT) {
    for (double top : {500.0, 1000.0, 2000.0, 4000.0}) {
        const std::vector<double> taus{top / 8, top / 4, top / 2, top};
        const auto e = extract_long_rate(taus, poisson_zero_curve(0.05, taus), LongRateMethod::plain_tail, 1.0);
        const double model = 0.5 / (0.1 * top);
        EXPECT_GT(e.residual, model / 2.0);
        EXPECT_LT(e.residual, model * 2.0);
    }
}

TEST(ExtractLongRate, FlagsNonConvergence) {
    const std::vector<double> mats{1, 2, 3, 4};
    const std::vector<double> vals{1, 2, 3, 5};
    EXPECT_FALSE(extract_long_rate(mats, vals, LongRateMethod::plain_tail, 0.5).converged);
    EXPECT_FALSE(extract_long_rate(mats, vals, LongRateMethod::reciprocal_extrapolation, 0.5).converged);
}

TEST(ExtractLongRate, Errors) {
    const std::vector<double> three{1, 2, 3};
    EXPECT_THROW(extract_long_rate(three, three, LongRateMethod::plain_tail, 1.0), std::invalid_argument);
    const std::vector<double> bad{1, 3, 2, 4};
    EXPECT_THROW(extract_long_rate(bad, bad, LongRateMethod::plain_tail, 1.0), std::invalid_argument);
    const std::vector<double> ok{1, 2, 3, 4};
    EXPECT_THROW(extract_long_rate(ok, ok, LongRateMethod::spectral, 1.0), std::invalid_argument);
}

TEST(Perron, SingleState) {
    const auto e = perron_long_rate(MarkovChain{{0.04}, {{1.0}}, 0});
    EXPECT_NEAR(e.value, 1.0 / 1.04, 1e-15);
    EXPECT_LE(e.residual, 1e-12);
}

TEST(Perron, TwoStateByHand) {
    // rows of M are proportional, det M = 0, rho = trace = 0.5 + 1/2.2
    const auto e = perron_long_rate(markov2().as<MarkovChain>());
    EXPECT_NEAR(e.value, 21.0 / 22.0, 1e-14);
    EXPECT_LE(e.residual, 1e-12);
    EXPECT_NEAR(zero_from_x(e.value, Regime::discrete), 1.0 / 21.0, 1e-14);
}

TEST(Perron, EqualRatesFactorOut) {
    const auto e = perron_long_rate(MarkovChain{{0.05, 0.05, 0.05}, {{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.3, 0.3, 0.4}}, 0});
    EXPECT_NEAR(e.value, 1.0 / 1.05, 1e-13);
}

TEST(Perron, FleetMatchesHighPrecisionEigenvalues) {
    EXPECT_NEAR(perron_long_rate(testing::markov3().as<MarkovChain>()).value, testing::kRho3, 1e-13);
    EXPECT_NEAR(perron_long_rate(testing::markov4().as<MarkovChain>()).value, testing::kRho4, 1e-13);
}

TEST(Perron, RefusesReducibleAndPeriodicChains) {
    EXPECT_THROW(perron_long_rate(MarkovChain{{0.0, 0.1}, {{1.0, 0.0}, {0.5, 0.5}}, 0}), std::invalid_argument);
    EXPECT_THROW(perron_long_rate(MarkovChain{{0.0, 0.1}, {{0.0, 1.0}, {1.0, 0.0}}, 0}), std::invalid_argument);
    EXPECT_EQ(chain_period(MarkovChain{{0, 0, 0}, {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}, 0}), 3u);
    EXPECT_EQ(chain_period(markov2().as<MarkovChain>()), 1u);
}

// x(0,T) = P(0,T)^(1/T) extrapolated from T <= 500 agrees with the Perron root.
TEST(Perron, TailOfXCurveAgrees) {
    for (const auto& [model, rho] : {std::pair{markov2(), testing::kRho2}, std::pair{testing::markov3(), testing::kRho3},
                                     std::pair{testing::markov4(), testing::kRho4}}) {
        const std::vector<double> mats{125, 250, 375, 500};
        const auto c = build_curves(model, model.initial_state(), 0.0, mats);
        const auto e = extract_long_rate(mats, c.rates.x, LongRateMethod::reciprocal_extrapolation, 1e-6);
        EXPECT_NEAR(e.value, rho, 1e-6);
        EXPECT_NEAR(e.value, perron_long_rate(model.as<MarkovChain>()).value, 1e-6);
    }
}

TEST(Convert, ByHand) {
    for (auto regime : {Regime::discrete, Regime::continuous}) EXPECT_EQ(zero_from_x(1.0, regime), 0.0);
    EXPECT_NEAR(zero_from_x(21.0 / 22.0, Regime::discrete), 1.0 / 21.0, 1e-15);
    EXPECT_DOUBLE_EQ(x_from_zero(0.55, Regime::continuous), std::exp(-0.55));
    EXPECT_THROW(zero_from_x(0.0, Regime::discrete), std::invalid_argument);
    EXPECT_THROW(zero_from_x(-1.0, Regime::continuous), std::invalid_argument);
}

TEST(Convert, RoundTripsOverLogSweep) {
    for (auto regime : {Regime::discrete, Regime::continuous}) {
        for (double lx = -3.0; lx < 0.0; lx += 0.01) {
            const double x = std::pow(10.0, lx);
            EXPECT_NEAR(x_from_zero(zero_from_x(x, regime), regime), x, 4 * std::numeric_limits<double>::epsilon() * x);
        }
    }
}

TEST(Lemma1, ConstantRateHasNoDiscrepancy) {
    const auto m = ModelSpec::constant(0.03, Regime::discrete);
    const std::vector<double> sched{10, 50, 100, 500};
    const auto rep = lemma1_check(m, m.initial_state(), 0.0, sched);
    EXPECT_LT(rep.tail, 1e-14);
    // rounding-level wobble does not count as growth
    EXPECT_TRUE(rep.shrinking);
}

TEST(Lemma1, MarkovDiscrepancyDecays) {
    const std::vector<double> sched{50, 100, 200, 300, 400, 500};
    const auto rep = lemma1_check(markov2(), {0.0, 0}, 0.0, sched);
    EXPECT_LT(rep.tail, 1e-4);
    EXPECT_TRUE(rep.shrinking);
    const auto c = build_curves(markov2(), {0.0, 0}, 0.0, std::vector<double>{500.0});
    EXPECT_NEAR(c.rates.forward[0], 1.0 / 21.0, 1e-12);
    EXPECT_NEAR(c.rates.zero[0], 1.0 / 21.0, 1e-4);
}

// f(0,I) = 1/(I+1): sum of log(1 + 1/(I+1)) telescopes to log(T+1), so z = (T+1)^(1/T) - 1.
TEST(Lemma1, HarmonicForwardCurve) {
    const std::vector<std::size_t> sched{10, 100, 1000, 10000, 100000};
    const auto rep = lemma1_check([](std::size_t i) { return 1.0 / static_cast<double>(i + 1); }, 0, sched);
    for (std::size_t k = 0; k < sched.size(); ++k) {
        const double T = static_cast<double>(sched[k]);
        const double z = std::pow(T + 1.0, 1.0 / T) - 1.0;
        EXPECT_NEAR(rep.discrepancy[k], std::abs(1.0 / (T + 1.0) - z), 1e-12);
    }
    EXPECT_TRUE(rep.shrinking);
    EXPECT_LT(rep.tail, 2e-4);
}

TEST(Lemma1, RejectsContinuousModels) {
    const std::vector<double> sched{10, 20};
    EXPECT_THROW(lemma1_check(shipped_poisson(), {0.05, 0}, 0.0, sched), std::invalid_argument);
}

}  // namespace
}  // namespace dirlab

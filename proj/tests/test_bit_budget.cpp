#include <gtest/gtest.h>

#include <cmath>

#include "pn/bit_budget.hpp"
#include "pn/image_codec.hpp"

using namespace pn::budget;

TEST(BitBudget, AnnexKConstantMatchesTables) {
    double s = 0;
    for (int v : pn::codec::kLuminanceBase) s += v;
    for (int v : pn::codec::kChrominanceBase) s += 2 * v;
    EXPECT_EQ(s, kAnnexKSum);
    EXPECT_EQ(kAnnexKSum, 14698.0);
    EXPECT_EQ(BitBudgetModel::published().sum, 12487.0);
}

TEST(BitBudget, PublishedFigures) {
    EXPECT_NEAR(bits_lost(50), 13.61, 0.01);
    EXPECT_NEAR(bits_lost(80), 12.29, 0.02);
    EXPECT_NEAR(bits_remaining(25), 1.39, 0.05);
    EXPECT_NEAR(bits_remaining(80), 3.71, 0.02);
    EXPECT_NEAR(bits_remaining(50), 2.39, 0.01);
    EXPECT_EQ(quality_for_bits(1.0), 19);
    EXPECT_EQ(quality_for_bits(1.39), 25);
}

TEST(BitBudget, ClosedFormOracle) {
    // Independent evaluation of log2(12487 * sf / 100) with sf written out per branch.
    EXPECT_NEAR(bits_lost(50), std::log2(12487.0), 1e-12);
    EXPECT_NEAR(bits_lost(80), std::log2(12487.0 * 40 / 100), 1e-12);
    EXPECT_NEAR(bits_lost(25), std::log2(12487.0 * 200 / 100), 1e-12);
    EXPECT_NEAR(bits_lost(10), std::log2(12487.0 * 500 / 100), 1e-12);
}

TEST(BitBudget, LosslessEndpoint) {
    EXPECT_EQ(bits_lost(100), 0.0);
    EXPECT_EQ(bits_remaining(100), 16.0);
    EXPECT_EQ(bits_remaining(100, {12487.0, 24.0}), 24.0);
}

TEST(BitBudget, StrictlyMonotone) {
    for (int q = 1; q < 100; ++q) {
        EXPECT_GT(bits_lost(q), bits_lost(q + 1)) << q;
        EXPECT_LE(bits_remaining(q), bits_remaining(q + 1)) << q;
        // Below q=10 the loss exceeds the baseline and the remainder clamps to 0.
        if (q >= 10) {
            EXPECT_LT(bits_remaining(q), bits_remaining(q + 1)) << q;
        }
    }
    EXPECT_GT(bits_remaining(10), 0.0);
    EXPECT_EQ(bits_remaining(9), 0.0);
}

TEST(BitBudget, ResultsStayInRange) {
    for (double q = 1; q <= 100; q += 0.25) {
        const double r = bits_remaining(q);
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 16.0);
        EXPECT_GE(bits_lost(q), 0.0);
    }
}

TEST(BitBudget, RoundTripOverIntegerQualities) {
    for (int q = 19; q <= 99; ++q) EXPECT_EQ(quality_for_bits(bits_remaining(q)), q) << q;
}

TEST(BitBudget, NearLosslessTargetClampsTo100) {
    EXPECT_EQ(quality_for_bits(15.99), 100);
    EXPECT_GE(bits_remaining(quality_for_bits(15.99)), 15.99);
}

TEST(BitBudget, ContinuousInverseIsExact) {
    for (double q = 10; q <= 99; q += 0.5)
        EXPECT_NEAR(continuous_quality_for_bits(bits_remaining(q)), q, 1e-9) << q;
}

TEST(BitBudget, ModesDifferByLogRatio) {
    const double gap = std::log2(14698.0 / 12487.0);
    EXPECT_NEAR(gap, 0.235, 0.001);
    const auto p = BitBudgetModel::published(), r = BitBudgetModel::recomputed();
    for (int q = 1; q <= 99; ++q) EXPECT_NEAR(bits_lost(q, r) - bits_lost(q, p), gap, 1e-12) << q;
}

TEST(BitBudget, Errors) {
    EXPECT_THROW(bits_lost(0), pn::InvalidQuality);
    EXPECT_THROW(bits_remaining(101), pn::InvalidQuality);
    EXPECT_THROW(bits_lost(std::nan("")), pn::InvalidQuality);
    EXPECT_THROW(quality_for_bits(0.0), pn::Unreachable);
    EXPECT_THROW(quality_for_bits(16.0), pn::Unreachable);
    EXPECT_THROW(quality_for_bits(-1.0), pn::Unreachable);
    EXPECT_THROW(bits_lost(50, {0.0, 16.0}), pn::InvalidInput);
    EXPECT_THROW(bits_lost(50, {12487.0, 20.0}), pn::InvalidInput);
}

TEST(BitBudget, Rgb24Baseline) {
    const BitBudgetModel m{12487.0, 24.0};
    EXPECT_NEAR(bits_remaining(50, m) - bits_remaining(50), 8.0, 1e-12);
}

#pragma once

// Bits-per-pixel arithmetic for JPEG quality levels. The loss at quality q is
// log2(S * sf(q) / 100) where S is the summed quantization-matrix constant and
// sf is the continuous libjpeg scaling law. What remains of the chroma
// subsampled baseline (16 bits/pixel) is the content budget.

#include <algorithm>
#include <cmath>
#include <string>

#include "pn/error.hpp"

namespace pn::budget {

// Constant used to reproduce the published figures.
inline constexpr double kPublishedSum = 12487.0;
// sum(K.1) + 2 * sum(K.2) over the Annex K tables as printed.
inline constexpr double kAnnexKSum = 3688.0 + 2.0 * 5505.0;

struct BitBudgetModel {
    double sum = kPublishedSum;
    double baseline = 16.0; // bits/pixel: 24 for RGB, 16 after 4:2:0

    static BitBudgetModel published() { return {}; }
    static BitBudgetModel recomputed() { return {kAnnexKSum, 16.0}; }

    void validate() const {
        if (!(sum > 0)) throw InvalidInput("bit budget sum constant must be positive");
        if (baseline != 16.0 && baseline != 24.0) throw InvalidInput("bit budget baseline must be 16 or 24");
    }
};

inline void check_quality(double q) {
    if (!(q >= 1.0 && q <= 100.0)) throw InvalidQuality("quality must be in [1,100], got " + std::to_string(q));
}

inline double continuous_scale(double q) { return q < 50 ? 5000.0 / q : 200.0 - 2.0 * q; }

// q=100 has sf=0; the loss is floored at 0 there instead of -inf.
inline double bits_lost(double q, const BitBudgetModel& m = {}) {
    check_quality(q);
    m.validate();
    const double sf = continuous_scale(q);
    if (sf <= 0) return 0.0;
    return std::max(0.0, std::log2(m.sum * sf / 100.0));
}

inline double bits_remaining(double q, const BitBudgetModel& m = {}) {
    return std::clamp(m.baseline - bits_lost(q, m), 0.0, m.baseline);
}

// Real-valued quality at which the continuous law leaves exactly `target`.
inline double continuous_quality_for_bits(double target, const BitBudgetModel& m = {}) {
    m.validate();
    if (!(target > 0 && target < m.baseline))
        throw Unreachable("target bits must lie in (0, " + std::to_string(m.baseline) + "), got " +
                          std::to_string(target));
    const double sf = 100.0 * std::exp2(m.baseline - target) / m.sum;
    return sf <= 100.0 ? (200.0 - sf) / 2.0 : 5000.0 / sf;
}

// Integer quality nearest to the continuous solution, clamped to [1,100].
inline int quality_for_bits(double target, const BitBudgetModel& m = {}) {
    const double q = continuous_quality_for_bits(target, m);
    return static_cast<int>(std::clamp(std::lround(q), 1L, 100L));
}

} // namespace pn::budget

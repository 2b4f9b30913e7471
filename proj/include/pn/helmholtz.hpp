#pragma once

// Sensor model R_actual = R_max - N*H, its inversion, and the accuracy-curve
// machinery used to locate the noise level empirically: the logarithmic
// accuracy model, its least-squares fit, and knee detection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pn/bit_budget.hpp"
#include "pn/error.hpp"

namespace pn::helmholtz {

// -sum p log2 p over normalized counts.
inline double shannon_entropy(std::span<const double> counts) {
    double total = 0;
    for (double c : counts) {
        if (!(c >= 0) || !std::isfinite(c)) throw InvalidInput("histogram counts must be finite and non-negative");
        total += c;
    }
    if (total <= 0) throw InvalidInput("histogram has no positive count");
    double h = 0;
    for (double c : counts)
        if (c > 0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    return h == 0 ? 0.0 : h; // no -0.0
}

struct SensorModel {
    double r_max = 255.0;
    double n = 1.0;
    double jitter = 0.0; // sigma as a fraction of r_max
};

class ContentSource {
public:
    explicit ContentSource(std::vector<double> probs) : p_(std::move(probs)) {
        if (p_.empty()) throw InvalidInput("content source needs at least one symbol");
        double s = 0;
        for (double v : p_) {
            if (!(v >= 0) || !std::isfinite(v)) throw InvalidInput("symbol probabilities must be non-negative");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("symbol probabilities must sum to 1 (sum=" + std::to_string(s) + ")");
    }

    static ContentSource uniform(std::size_t symbols) {
        return ContentSource(std::vector<double>(symbols, 1.0 / static_cast<double>(symbols)));
    }

    // Two-sided geometric weights exp(-|k - centre| / scale), normalized.
    static ContentSource laplacian(std::size_t symbols, double scale) {
        if (symbols < 1 || !(scale > 0)) throw InvalidInput("laplacian source needs symbols >= 1 and scale > 0");
        std::vector<double> w(symbols);
        const double centre = static_cast<double>(symbols - 1) / 2.0;
        double total = 0;
        for (std::size_t k = 0; k < symbols; ++k) total += w[k] = std::exp(-std::abs(static_cast<double>(k) - centre) / scale);
        for (double& v : w) v /= total;
        return ContentSource(std::move(w));
    }

    const std::vector<double>& probabilities() const { return p_; }
    std::size_t size() const { return p_.size(); }
    double surprisal(std::size_t symbol) const { return -std::log2(p_.at(symbol)); }
    double entropy() const { return shannon_entropy(p_); }

private:
    std::vector<double> p_;
};

// "uniform:K", "laplace:K:scale" or "probs:p0,p1,...".
inline ContentSource parse_source(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto number = [&](const std::string& t) {
        try {
            std::size_t used = 0;
            const double v = std::stod(t, &used);
            if (used == t.size()) return v;
        } catch (const std::logic_error&) {
        }
        throw InvalidInput("bad number '" + t + "' in source spec '" + spec + "'");
    };
    if (kind == "uniform") {
        const double k = number(rest);
        if (k < 1 || k != std::floor(k)) throw InvalidInput("uniform source needs an integer symbol count >= 1");
        return ContentSource::uniform(static_cast<std::size_t>(k));
    }
    if (kind == "laplace") {
        const auto c2 = rest.find(':');
        if (c2 == std::string::npos) throw InvalidInput("laplace source spec is laplace:K:scale");
        const double k = number(rest.substr(0, c2));
        if (k < 1 || k != std::floor(k)) throw InvalidInput("laplace source needs an integer symbol count >= 1");
        return ContentSource::laplacian(static_cast<std::size_t>(k), number(rest.substr(c2 + 1)));
    }
    if (kind == "probs") {
        std::vector<double> p;
        std::size_t start = 0;
        while (start <= rest.size()) {
            const auto end = std::min(rest.find(',', start), rest.size());
            p.push_back(number(rest.substr(start, end - start)));
            start = end + 1;
        }
        return ContentSource(std::move(p));
    }
    throw InvalidInput("unknown source kind '" + kind + "' (uniform, laplace, probs)");
}

struct Reading {
    std::size_t symbol;
    double surprisal;
    double value;
};

// r_i = r_max - n * h_i + jitter_i, with h_i the surprisal of the sampled symbol.
inline std::vector<Reading> synthesize_readings(const SensorModel& model, const ContentSource& source,
                                                std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidInput("need at least one reading");
    if (!(model.r_max > 0) || model.n < 0 || model.jitter < 0) throw InvalidInput("invalid sensor model");
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(source.probabilities().begin(), source.probabilities().end());
    std::normal_distribution<double> noise(0.0, model.jitter * model.r_max);
    std::vector<Reading> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t s = pick(rng);
        const double h = source.surprisal(s);
        double r = model.r_max - model.n * h;
        if (model.jitter > 0) r += noise(rng);
        out.push_back({s, h, r});
    }
    return out;
}

// Moment estimator: mean(r_max - r) / H.
inline double estimate_noise_scalar(std::span<const double> readings, double r_max, double entropy_bits) {
    if (readings.empty()) throw InvalidInput("no readings");
    if (!(entropy_bits > 0)) throw Degenerate("noise scalar is undefined for zero content entropy");
    double s = 0;
    for (double r : readings) s += r_max - r;
    return s / static_cast<double>(readings.size()) / entropy_bits;
}

inline double approx_content(double reading, double r_max, double n_approx) {
    if (!(n_approx > 0)) throw InvalidInput("approximated noise must be positive");
    return (r_max - reading) / n_approx;
}

struct CurvePoint {
    double q = 0;        // quantization fraction in [0,1]
    double accuracy = 0;
};

struct AccuracyCurve {
    std::vector<CurvePoint> points;
    double c = 0;
};

// Natural log; the scale constant absorbs any other base.
inline double curve_value(double c, double q) {
    if (!(q < 1.0)) throw InvalidInput("quantization fraction must be < 1");
    return c * std::log(100.0 - 100.0 * q);
}

inline AccuracyCurve theoretical_curve(double c, std::span<const double> grid) {
    AccuracyCurve curve;
    curve.c = c;
    for (double q : grid) curve.points.push_back({q, curve_value(c, q)});
    return curve;
}

// Value used for drawing: the log diverges at Q -> 1, so it is floored at 0.
inline double plotted_curve_value(double c, double q) {
    if (q >= 1.0) return 0.0;
    return std::max(0.0, curve_value(c, q));
}

// Closed-form least squares for acc = c * x with x = ln(100 - 100 Q).
inline double fit_curve(std::span<const CurvePoint> points) {
    if (points.size() < 2) throw Degenerate("curve fit needs at least two points");
    double num = 0, den = 0;
    for (const auto& p : points) {
        if (!(p.q < 1.0)) throw InvalidInput("curve fit requires Q < 1");
        const double x = std::log(100.0 - 100.0 * p.q);
        num += p.accuracy * x;
        den += x * x;
    }
    bool distinct = false;
    for (const auto& p : points)
        if (p.q != points.front().q) distinct = true;
    if (den == 0 || !distinct) throw Degenerate("curve fit is degenerate (need distinct Q values with log term != 0)");
    return num / den;
}

// Trailing 3-point moving average (fewer points at the start of the grid).
inline std::vector<double> smoothed_accuracy(std::span<const CurvePoint> points) {
    std::vector<double> s(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t lo = i >= 2 ? i - 2 : 0;
        double sum = 0;
        for (std::size_t j = lo; j <= i; ++j) sum += points[j].accuracy;
        s[i] = sum / static_cast<double>(i - lo + 1);
    }
    return s;
}

// Largest Q whose smoothed accuracy stays within tau of the plateau, where the
// plateau is the maximum smoothed accuracy.
inline double detect_knee(std::span<const CurvePoint> points, double tau = 0.05) {
    if (points.size() < 4) throw InvalidInput("knee detection needs at least 4 points");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i].q > points[i - 1].q)) throw InvalidInput("knee detection needs points sorted by strictly increasing Q");
    const auto s = smoothed_accuracy(points);
    const double plateau = *std::max_element(s.begin(), s.end());
    const double threshold = (1.0 - tau) * plateau;
    double knee = points.front().q;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (s[i] >= threshold) knee = points[i].q;
    return knee;
}

struct NoiseBits {
    double content_bits = 0;
    double noise_bits = 0;
};

inline NoiseBits noise_bits_estimate(double q_knee, const budget::BitBudgetModel& model = {}) {
    const double content = budget::bits_remaining(q_knee, model);
    return {content, model.baseline - content};
}

} // namespace pn::helmholtz

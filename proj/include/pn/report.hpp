#pragma once

// Deterministic SVG plots of sweep results: accuracy and epochs against the
// normalized quantization Q, and accuracy against parameter count.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pn/error.hpp"
#include "pn/helmholtz.hpp"
#include "pn/records.hpp"

namespace pn::report {

using sweep::SweepRecord;

enum class PlotKind { AccuracyVsQ, EpochsVsQ, AccuracyVsParams };

inline PlotKind parse_plot_kind(const std::string& s) {
    if (s == "accuracy-vs-Q") return PlotKind::AccuracyVsQ;
    if (s == "epochs-vs-Q") return PlotKind::EpochsVsQ;
    if (s == "accuracy-vs-params") return PlotKind::AccuracyVsParams;
    throw ConfigError("unknown plot kind '" + s + "' (accuracy-vs-Q, epochs-vs-Q, accuracy-vs-params)");
}

inline const char* to_string(PlotKind k) {
    switch (k) {
    case PlotKind::AccuracyVsQ: return "accuracy-vs-Q";
    case PlotKind::EpochsVsQ: return "epochs-vs-Q";
    case PlotKind::AccuracyVsParams: return "accuracy-vs-params";
    }
    return "?";
}

struct PlotSpec {
    PlotKind kind = PlotKind::AccuracyVsQ;
    bool overlay_theoretical = true;
    std::filesystem::path input_csv;
    std::filesystem::path output_svg;
    std::string title;
};

inline std::vector<std::string> required_columns(PlotKind k) {
    switch (k) {
    case PlotKind::AccuracyVsQ: return {"quality", "Q", "arch", "test_accuracy", "status"};
    case PlotKind::EpochsVsQ: return {"quality", "Q", "arch", "epochs_to_converge", "status"};
    case PlotKind::AccuracyVsParams: return {"quality", "Q", "arch", "params", "test_accuracy", "status"};
    }
    return {};
}

namespace detail {

inline constexpr double kWidth = 640, kHeight = 420;
inline constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 55;

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[i % 10];
}

inline std::string num(double v) { return sweep::fmt("%.6f", v); }

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else if (c == '"') out += "&quot;";
        else out += c;
    }
    return out;
}

struct Axis {
    double lo = 0, hi = 1;
    bool log = false;

    double map(double v) const {
        if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        return (v - lo) / (hi - lo);
    }
};

struct Canvas {
    Axis x, y;
    std::string body;

    double px(double v) const { return kLeft + x.map(v) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - y.map(v) * (kHeight - kTop - kBottom); }
};

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;
};

inline std::string tick_label(double v) {
    if (std::abs(v) >= 1e4) return sweep::fmt("%.0e", v);
    return sweep::fmt("%g", std::round(v * 1000) / 1000);
}

inline void frame(Canvas& cv, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;
    cv.body += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y1 - y0) +
               "\" fill=\"none\" stroke=\"#000\"/>\n";
    std::vector<double> xt;
    if (cv.x.log) {
        for (double d = std::floor(std::log10(cv.x.lo)); d <= std::ceil(std::log10(cv.x.hi)); ++d) {
            const double v = std::pow(10.0, d);
            if (v >= cv.x.lo && v <= cv.x.hi) xt.push_back(v);
        }
    } else {
        for (int i = 0; i <= 5; ++i) xt.push_back(cv.x.lo + (cv.x.hi - cv.x.lo) * i / 5.0);
    }
    for (double v : xt) {
        const double p = cv.px(v);
        cv.body += "<line x1=\"" + num(p) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(p) + "\" y2=\"" + num(y1 + 5) +
                   "\" stroke=\"#000\"/>\n";
        cv.body += "<text x=\"" + num(p) + "\" y=\"" + num(y1 + 18) + "\" font-size=\"11\" text-anchor=\"middle\">" +
                   tick_label(v) + "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double v = cv.y.lo + (cv.y.hi - cv.y.lo) * i / 5.0;
        const double p = cv.py(v);
        cv.body += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(p) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(p) +
                   "\" stroke=\"#000\"/>\n";
        cv.body += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(p + 4) + "\" font-size=\"11\" text-anchor=\"end\">" +
                   tick_label(v) + "</text>\n";
    }
    cv.body += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 15) +
               "\" font-size=\"13\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
    cv.body += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
               num((y0 + y1) / 2) + ")\">" + escape(ylabel) + "</text>\n";
    cv.body += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">" + escape(title) +
               "</text>\n";
}

inline void polyline(Canvas& cv, const std::vector<std::pair<double, double>>& pts, const char* stroke, bool dashed,
                     const std::string& cls) {
    if (pts.empty()) return;
    std::string p;
    for (const auto& [x, y] : pts) p += (p.empty() ? "" : " ") + num(cv.px(x)) + "," + num(cv.py(y));
    cv.body += "<polyline class=\"" + cls + "\" points=\"" + p + "\" fill=\"none\" stroke=\"" + stroke + "\"" +
               (dashed ? " stroke-dasharray=\"6 4\" stroke-opacity=\"0.6\" stroke-width=\"3\"" : " stroke-width=\"1.5\"") +
               "/>\n";
}

inline void markers(Canvas& cv, const std::vector<std::pair<double, double>>& pts, const char* fill) {
    for (const auto& [x, y] : pts)
        cv.body += "<circle class=\"data\" cx=\"" + num(cv.px(x)) + "\" cy=\"" + num(cv.py(y)) + "\" r=\"3.5\" fill=\"" +
                   fill + "\"/>\n";
}

inline void legend(Canvas& cv, const std::vector<std::string>& labels) {
    const double x = kWidth - kRight + 15;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = kTop + 10 + 18.0 * i;
        cv.body += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 8) + "\" width=\"12\" height=\"12\" fill=\"" + color(i) +
                   "\"/>\n";
        cv.body += "<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 2) + "\" font-size=\"12\">" + escape(labels[i]) +
                   "</text>\n";
    }
}

inline std::string document(const Canvas& cv) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" + cv.body + "</svg>\n";
}

// Q values where the theoretical overlay is evaluated: every data Q plus a
// uniform grid, so the curve passes through the data abscissae exactly.
inline std::vector<double> overlay_grid(const std::vector<double>& data_q, double hi) {
    std::set<double> qs(data_q.begin(), data_q.end());
    for (int i = 0; i <= 100; ++i) qs.insert(hi * i / 100.0);
    return {qs.begin(), qs.end()};
}

} // namespace detail

// Renders records to an SVG document. `fitted_c` maps arch -> curve constant
// for the dashed overlay (accuracy-vs-Q only).
inline std::string render_svg(PlotKind kind, const std::vector<SweepRecord>& records, const std::string& title,
                              const std::map<std::string, double>& fitted_c = {}) {
    using namespace detail;
    const auto agg = sweep::aggregate(records);
    Canvas cv;
    std::vector<Series> series;
    std::string xlabel, ylabel;

    if (kind == PlotKind::AccuracyVsParams) {
        std::map<std::string, std::size_t> params;
        for (const auto& r : records)
            if (r.ok()) params[r.arch] = r.params;
        std::map<double, Series> by_q;
        for (const auto& [arch, pts] : agg)
            for (const auto& p : pts) {
                auto& s = by_q[p.Q];
                s.label = "q=" + tick_label(p.quality) + " (Q=" + tick_label(p.Q) + ")";
                s.pts.emplace_back(static_cast<double>(std::max<std::size_t>(params[arch], 1)), p.accuracy);
            }
        for (auto& [q, s] : by_q) {
            std::sort(s.pts.begin(), s.pts.end());
            series.push_back(std::move(s));
        }
        double lo = 1e300, hi = 0;
        for (const auto& s : series)
            for (const auto& p : s.pts) {
                lo = std::min(lo, p.first);
                hi = std::max(hi, p.first);
            }
        if (series.empty()) lo = 1, hi = 10;
        cv.x = {std::pow(10.0, std::floor(std::log10(lo))), std::pow(10.0, std::ceil(std::log10(hi) + 1e-12)), true};
        if (cv.x.hi <= cv.x.lo) cv.x.hi = cv.x.lo * 10;
        cv.y = {0, 1, false};
        xlabel = "parameters";
        ylabel = "test accuracy";
    } else {
        const bool epochs = kind == PlotKind::EpochsVsQ;
        double ymax = 1;
        double qmax = 0;
        for (const auto& [arch, pts] : agg) {
            Series s;
            s.label = arch;
            for (const auto& p : pts) {
                const double y = epochs ? p.epochs : p.accuracy;
                s.pts.emplace_back(p.Q, y);
                ymax = std::max(ymax, y);
                qmax = std::max(qmax, p.Q);
            }
            series.push_back(std::move(s));
        }
        if (!epochs)
            for (const auto& [arch, c] : fitted_c)
                if (agg.count(arch))
                    for (double q : overlay_grid({}, qmax)) ymax = std::max(ymax, helmholtz::plotted_curve_value(c, q));
        if (epochs) ymax = std::ceil(ymax);
        cv.x = {0, 1, false};
        cv.y = {0, ymax, false};
        xlabel = "Q (quantization)";
        ylabel = epochs ? "epochs to converge" : "test accuracy";
    }

    frame(cv, title, xlabel, ylabel);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        if (kind == PlotKind::AccuracyVsQ) {
            const auto it = fitted_c.find(s.label);
            if (it != fitted_c.end()) {
                std::vector<double> dq;
                double qmax = 0;
                for (const auto& p : s.pts) {
                    dq.push_back(p.first);
                    qmax = std::max(qmax, p.first);
                }
                std::vector<std::pair<double, double>> ov;
                for (double q : overlay_grid(dq, qmax)) ov.emplace_back(q, helmholtz::plotted_curve_value(it->second, q));
                polyline(cv, ov, color(i), true, "theory");
            }
        }
        polyline(cv, s.pts, color(i), false, "series");
        markers(cv, s.pts, color(i));
        labels.push_back(s.label);
    }
    legend(cv, labels);
    return document(cv);
}

// Reads the sweep CSV named by `spec`, fits the curve constant per arch when
// an overlay is requested, and writes the SVG.
inline void render_plot(const PlotSpec& spec) {
    const auto table = sweep::read_csv(spec.input_csv);
    const auto records = sweep::records_from_table(table, required_columns(spec.kind));
    std::map<std::string, double> cs;
    if (spec.overlay_theoretical && spec.kind == PlotKind::AccuracyVsQ) {
        const auto domain = sweep::infer_domain(records);
        for (const auto& [arch, pts] : sweep::aggregate(records)) {
            try {
                cs[arch] = sweep::summarize_arch(arch, pts, domain, 0.05).c;
            } catch (const Error&) {
                // too few points for a fit: plot without overlay
            }
        }
    }
    const std::string title = spec.title.empty() ? std::string(to_string(spec.kind)) : spec.title;
    const std::string svg = render_svg(spec.kind, records, title, cs);
    std::ofstream out(spec.output_svg, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + spec.output_svg.string());
    out << svg;
}

} // namespace pn::report

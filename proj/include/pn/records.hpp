#pragma once

// Sweep records, their CSV form, and the per-architecture summary (fitted
// curve constant, knee, bit split, epoch statistics).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pn/bit_budget.hpp"
#include "pn/error.hpp"
#include "pn/helmholtz.hpp"
#include "pn/learn/zoo.hpp"

namespace pn::sweep {

enum class Domain { Image, Audio };

inline const char* to_string(Domain d) { return d == Domain::Image ? "image" : "audio"; }

inline double normalized_q(Domain d, double quality) { return d == Domain::Image ? (100.0 - quality) / 100.0 : quality; }

struct SweepRecord {
    double quality = 0;
    double Q = 0;
    double bits_per_pixel = 0;
    std::string arch;
    std::size_t params = 0;
    std::uint64_t seed = 0;
    std::optional<double> test_accuracy;
    std::optional<int> epochs_to_converge;
    double wall_seconds = 0;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
    bool operator==(const SweepRecord&) const = default;
};

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {"quality", "Q",      "bits_per_pixel",     "arch",         "params",
                                                  "seed",    "test_accuracy", "epochs_to_converge", "wall_seconds", "status"};
    return cols;
}

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// Commas and line breaks would break the flat CSV.
inline std::string sanitize_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
    return s;
}

inline std::string csv_header() {
    std::string h;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) h += (i ? "," : "") + csv_columns()[i];
    return h;
}

inline std::string csv_row(const SweepRecord& r) {
    std::string s = fmt("%.10g", r.quality) + "," + fmt("%.10g", r.Q) + "," + fmt("%.6f", r.bits_per_pixel) + "," +
                    sanitize_field(r.arch) + "," + std::to_string(r.params) + "," + std::to_string(r.seed) + ",";
    s += r.test_accuracy ? fmt("%.6f", *r.test_accuracy) : "";
    s += ",";
    s += r.epochs_to_converge ? std::to_string(*r.epochs_to_converge) : "";
    s += "," + fmt("%.3f", r.wall_seconds) + "," + sanitize_field(r.status);
    return s;
}

inline std::string records_csv(const std::vector<SweepRecord>& records) {
    std::string out = csv_header() + "\n";
    for (const auto& r : records) out += csv_row(r) + "\n";
    return out;
}

// ------------------------------------------------------------ CSV reading

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& name = "csv") {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != t.header.size())
            throw InvalidInput(name + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                               " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (first) throw InvalidInput(name + ": empty CSV");
    return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path.string());
}

inline std::vector<SweepRecord> records_from_table(const CsvTable& t, const std::vector<std::string>& required) {
    for (const auto& c : required)
        if (t.column(c) < 0) throw InvalidInput("CSV is missing required column '" + c + "'");
    auto num = [](const std::string& s, const std::string& col) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            throw InvalidInput("column '" + col + "': '" + s + "' is not a number");
        }
    };
    std::vector<SweepRecord> out;
    for (const auto& row : t.rows) {
        SweepRecord r;
        auto get = [&](const std::string& col) -> const std::string* {
            const int i = t.column(col);
            return i < 0 ? nullptr : &row[i];
        };
        if (auto v = get("quality")) r.quality = num(*v, "quality");
        if (auto v = get("Q")) r.Q = num(*v, "Q");
        if (auto v = get("bits_per_pixel"); v && !v->empty()) r.bits_per_pixel = num(*v, "bits_per_pixel");
        if (auto v = get("arch")) r.arch = *v;
        if (auto v = get("params"); v && !v->empty()) r.params = static_cast<std::size_t>(num(*v, "params"));
        if (auto v = get("seed"); v && !v->empty()) r.seed = static_cast<std::uint64_t>(num(*v, "seed"));
        if (auto v = get("test_accuracy"); v && !v->empty()) r.test_accuracy = num(*v, "test_accuracy");
        if (auto v = get("epochs_to_converge"); v && !v->empty())
            r.epochs_to_converge = static_cast<int>(num(*v, "epochs_to_converge"));
        if (auto v = get("wall_seconds"); v && !v->empty()) r.wall_seconds = num(*v, "wall_seconds");
        if (auto v = get("status")) r.status = *v;
        out.push_back(std::move(r));
    }
    return out;
}

// Audio rows store Q directly as their quality; image rows do not.
inline Domain infer_domain(const std::vector<SweepRecord>& records) {
    for (const auto& r : records)
        if (r.quality != r.Q) return Domain::Image;
    return Domain::Audio;
}

// ----------------------------------------------------------------- summary

struct SummaryPoint {
    double quality = 0;
    double Q = 0;
    double accuracy = 0; // mean over successful seeds
    double epochs = 0;
    int cells = 0;
};

struct ArchSummary {
    std::string arch;
    std::size_t params = 0;
    std::vector<SummaryPoint> points; // increasing Q
    double c = 0;
    double q_knee = 0;
    double quality_knee = 0;
    std::optional<helmholtz::NoiseBits> bits; // image sweeps only
    double epochs_at_knee = 0;
    double epochs_lossless = 0;
    bool epochs_trend_holds = false;
};

struct SummaryReport {
    Domain domain = Domain::Image;
    double tau = 0.05;
    std::vector<ArchSummary> archs;
};

// Mean accuracy and epochs per (arch, quality) over the successful cells,
// ordered by increasing Q.
inline std::map<std::string, std::vector<SummaryPoint>> aggregate(const std::vector<SweepRecord>& records) {
    std::map<std::string, std::map<double, SummaryPoint>> acc;
    for (const auto& r : records) {
        if (!r.ok() || !r.test_accuracy) continue;
        SummaryPoint& p = acc[r.arch][r.Q];
        p.quality = r.quality;
        p.Q = r.Q;
        p.accuracy += *r.test_accuracy;
        p.epochs += r.epochs_to_converge.value_or(0);
        ++p.cells;
    }
    std::map<std::string, std::vector<SummaryPoint>> out;
    for (auto& [arch, by_q] : acc)
        for (auto& [q, p] : by_q) {
            p.accuracy /= p.cells;
            p.epochs /= p.cells;
            out[arch].push_back(p);
        }
    return out;
}

inline ArchSummary summarize_arch(const std::string& arch, std::vector<SummaryPoint> points, Domain domain, double tau) {
    if (points.size() < 4)
        throw InvalidInput("summary for '" + arch + "' needs at least 4 quality points, got " + std::to_string(points.size()));
    ArchSummary s;
    s.arch = arch;
    s.points = std::move(points);
    std::vector<helmholtz::CurvePoint> curve;
    for (const auto& p : s.points) curve.push_back({p.Q, p.accuracy});
    s.q_knee = helmholtz::detect_knee(curve, tau);

    // Fit on the plateau region; fall back to every point with Q < 1.
    std::vector<helmholtz::CurvePoint> fit_pts, usable;
    for (const auto& p : curve)
        if (p.q < 1.0) {
            usable.push_back(p);
            if (p.q <= s.q_knee) fit_pts.push_back(p);
        }
    s.c = helmholtz::fit_curve(fit_pts.size() >= 2 ? fit_pts : usable);

    s.quality_knee = domain == Domain::Image ? 100.0 - 100.0 * s.q_knee : s.q_knee;
    if (domain == Domain::Image) s.bits = helmholtz::noise_bits_estimate(std::round(s.quality_knee));
    for (const auto& p : s.points)
        if (p.Q == s.q_knee) s.epochs_at_knee = p.epochs;
    s.epochs_lossless = s.points.front().epochs;
    s.epochs_trend_holds = s.epochs_at_knee <= s.epochs_lossless;
    return s;
}

inline SummaryReport summarize(const std::vector<SweepRecord>& records, Domain domain, double tau = 0.05) {
    SummaryReport rep;
    rep.domain = domain;
    rep.tau = tau;
    const auto agg = aggregate(records);
    if (agg.empty()) throw InvalidInput("no successful cells to summarize");
    std::map<std::string, std::size_t> params;
    for (const auto& r : records)
        if (r.ok()) params[r.arch] = r.params;
    for (const auto& [arch, pts] : agg) {
        rep.archs.push_back(summarize_arch(arch, pts, domain, tau));
        rep.archs.back().params = params[arch];
    }
    return rep;
}

inline nlohmann::ordered_json to_json(const SummaryReport& rep) {
    nlohmann::ordered_json j;
    j["domain"] = to_string(rep.domain);
    j["tau"] = rep.tau;
    j["archs"] = nlohmann::ordered_json::array();
    for (const auto& a : rep.archs) {
        nlohmann::ordered_json e;
        e["arch"] = a.arch;
        e["params"] = a.params;
        if (auto pub = learn::zoo::published_count(a.arch)) e["published_params"] = *pub;
        e["c"] = a.c;
        e["q_knee"] = a.q_knee;
        e["quality_knee"] = a.quality_knee;
        if (a.bits) {
            e["content_bits"] = a.bits->content_bits;
            e["noise_bits"] = a.bits->noise_bits;
        }
        e["epochs_at_knee"] = a.epochs_at_knee;
        e["epochs_lossless"] = a.epochs_lossless;
        e["epochs_trend_holds"] = a.epochs_trend_holds;
        e["points"] = nlohmann::ordered_json::array();
        for (const auto& p : a.points)
            e["points"].push_back({{"quality", p.quality}, {"Q", p.Q}, {"accuracy", p.accuracy}, {"epochs", p.epochs},
                                   {"cells", p.cells}});
        j["archs"].push_back(std::move(e));
    }
    return j;
}

inline std::string summary_csv(const SummaryReport& rep) {
    std::string out = "arch,quality,Q,mean_accuracy,mean_epochs,cells\n";
    for (const auto& a : rep.archs)
        for (const auto& p : a.points)
            out += sanitize_field(a.arch) + "," + fmt("%.10g", p.quality) + "," + fmt("%.10g", p.Q) + "," +
                   fmt("%.6f", p.accuracy) + "," + fmt("%.4f", p.epochs) + "," + std::to_string(p.cells) + "\n";
    return out;
}

} // namespace pn::sweep

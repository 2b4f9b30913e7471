#pragma once

// Declarative model descriptions. A spec is an ordered list of layer
// descriptors plus the class count; shapes are inferred from an input shape.

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "pn/error.hpp"

namespace pn::learn {

enum class LayerKind : std::uint32_t {
    Conv = 1,
    Dense = 2,
    MaxPool = 3,
    GlobalAvgPool = 4,
    BatchNorm = 5,
    Dropout = 6,
    ReLU = 7,
    ELU = 8,
    Flatten = 9,
    Softmax = 10,
};

struct LayerDesc {
    LayerKind kind = LayerKind::ReLU;
    int units = 0;     // output channels (Conv) or units (Dense)
    int kernel = 3;    // Conv only, square
    double rate = 0.0; // Dropout only

    bool operator==(const LayerDesc&) const = default;
};

inline LayerDesc conv(int out, int k = 3) { return {LayerKind::Conv, out, k, 0.0}; }
inline LayerDesc dense(int units) { return {LayerKind::Dense, units, 0, 0.0}; }
inline LayerDesc maxpool() { return {LayerKind::MaxPool, 0, 0, 0.0}; }
inline LayerDesc global_avg_pool() { return {LayerKind::GlobalAvgPool, 0, 0, 0.0}; }
inline LayerDesc batch_norm() { return {LayerKind::BatchNorm, 0, 0, 0.0}; }
inline LayerDesc dropout(double rate) { return {LayerKind::Dropout, 0, 0, rate}; }
inline LayerDesc relu() { return {LayerKind::ReLU, 0, 0, 0.0}; }
inline LayerDesc elu() { return {LayerKind::ELU, 0, 0, 0.0}; }
inline LayerDesc flatten() { return {LayerKind::Flatten, 0, 0, 0.0}; }
inline LayerDesc softmax() { return {LayerKind::Softmax, 0, 0, 0.0}; }

struct ModelSpec {
    std::string id;
    std::vector<LayerDesc> layers;
    int classes = 10;
};

// Activation shape of one sample. Flat shapes have h = w = 1 and flat = true.
struct Shape {
    int c = 0, h = 1, w = 1;
    bool flat = false;

    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
    if (s.flat) return "(" + std::to_string(s.c) + ")";
    return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

inline std::string to_string(const LayerDesc& d) {
    switch (d.kind) {
    case LayerKind::Conv: return "conv:" + std::to_string(d.units) + ":" + std::to_string(d.kernel);
    case LayerKind::Dense: return "fc:" + std::to_string(d.units);
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::GlobalAvgPool: return "gap";
    case LayerKind::BatchNorm: return "bn";
    case LayerKind::Dropout: {
        std::ostringstream s;
        s << "dropout:" << d.rate;
        return s.str();
    }
    case LayerKind::ReLU: return "relu";
    case LayerKind::ELU: return "elu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

inline std::string to_string(const ModelSpec& spec) {
    std::string out;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) out += (i ? "," : "") + to_string(spec.layers[i]);
    return out;
}

// Parses "conv:16:3,relu,maxpool,flatten,fc:10,softmax". The class count is
// taken from the last Dense/Conv width.
inline ModelSpec parse_layers(const std::string& text, std::string id = "custom") {
    ModelSpec spec;
    spec.id = std::move(id);
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
        while (!tok.empty() && tok.back() == ' ') tok.pop_back();
        if (tok.empty()) continue;
        std::vector<std::string> parts;
        std::stringstream ts(tok);
        std::string p;
        while (std::getline(ts, p, ':')) parts.push_back(p);
        const std::string& name = parts[0];
        auto arg = [&](std::size_t i) -> const std::string& {
            if (i >= parts.size()) throw ConfigError("layer '" + tok + "' is missing an argument");
            return parts[i];
        };
        try {
            if (name == "conv") spec.layers.push_back(conv(std::stoi(arg(1)), parts.size() > 2 ? std::stoi(parts[2]) : 3));
            else if (name == "fc" || name == "dense") spec.layers.push_back(dense(std::stoi(arg(1))));
            else if (name == "maxpool") spec.layers.push_back(maxpool());
            else if (name == "gap") spec.layers.push_back(global_avg_pool());
            else if (name == "bn" || name == "batchnorm") spec.layers.push_back(batch_norm());
            else if (name == "dropout") spec.layers.push_back(dropout(std::stod(arg(1))));
            else if (name == "relu") spec.layers.push_back(relu());
            else if (name == "elu") spec.layers.push_back(elu());
            else if (name == "flatten") spec.layers.push_back(flatten());
            else if (name == "softmax") spec.layers.push_back(softmax());
            else throw ConfigError("unknown layer '" + name + "'");
        } catch (const std::logic_error&) {
            throw ConfigError("bad numeric argument in layer '" + tok + "'");
        }
    }
    for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it)
        if (it->kind == LayerKind::Dense || it->kind == LayerKind::Conv) {
            spec.classes = it->units;
            break;
        }
    return spec;
}

inline Shape infer_output(const LayerDesc& d, const Shape& in) {
    auto need_spatial = [&](const char* what) {
        if (in.flat) throw ShapeMismatch(std::string(what) + " needs a spatial input, got " + to_string(in));
    };
    switch (d.kind) {
    case LayerKind::Conv:
        need_spatial("Conv");
        if (d.units < 1 || d.kernel < 1 || d.kernel % 2 == 0) throw ShapeMismatch("Conv needs units >= 1 and an odd kernel");
        return {d.units, in.h, in.w, false};
    case LayerKind::Dense:
        if (!in.flat) throw ShapeMismatch("Dense needs a flat input (insert flatten or gap), got " + to_string(in));
        if (d.units < 1) throw ShapeMismatch("Dense needs units >= 1");
        return {d.units, 1, 1, true};
    case LayerKind::MaxPool:
        need_spatial("MaxPool");
        return {in.c, (in.h + 1) / 2, (in.w + 1) / 2, false};
    case LayerKind::GlobalAvgPool:
        need_spatial("GlobalAvgPool");
        return {in.c, 1, 1, true};
    case LayerKind::Flatten: return {static_cast<int>(in.size()), 1, 1, true};
    case LayerKind::Dropout:
        if (!(d.rate >= 0 && d.rate < 1)) throw ShapeMismatch("Dropout rate must be in [0,1)");
        return in;
    case LayerKind::BatchNorm:
    case LayerKind::ReLU:
    case LayerKind::ELU:
    case LayerKind::Softmax: return in;
    }
    throw ShapeMismatch("unknown layer kind");
}

// Shapes after every layer; element 0 is the input.
inline std::vector<Shape> infer_shapes(const ModelSpec& spec, const Shape& input) {
    if (input.size() == 0) throw ShapeMismatch("empty input shape");
    std::vector<Shape> shapes{input};
    for (const auto& d : spec.layers) shapes.push_back(infer_output(d, shapes.back()));
    const Shape& out = shapes.back();
    if (!out.flat) throw ShapeMismatch("model output must be flat, got " + to_string(out));
    if (out.c != spec.classes)
        throw ShapeMismatch("final width " + std::to_string(out.c) + " != class count " + std::to_string(spec.classes));
    return shapes;
}

inline std::size_t layer_params(const LayerDesc& d, const Shape& in) {
    switch (d.kind) {
    case LayerKind::Conv: return static_cast<std::size_t>(d.kernel) * d.kernel * in.c * d.units + d.units;
    case LayerKind::Dense: return in.size() * d.units + d.units;
    case LayerKind::BatchNorm: return 2 * static_cast<std::size_t>(in.c);
    default: return 0;
    }
}

inline std::size_t count_params(const ModelSpec& spec, const Shape& input) {
    const auto shapes = infer_shapes(spec, input);
    std::size_t total = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) total += layer_params(spec.layers[i], shapes[i]);
    return total;
}

} // namespace pn::learn

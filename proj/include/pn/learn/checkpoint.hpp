#pragma once

// Checkpoint file, little-endian throughout:
//   "PNCK" u32 version
//   u32 id length, id bytes, u32 classes
//   u32 c, u32 h, u32 w, u32 flat
//   u32 layer count, then per layer: u32 kind, u32 units, u32 kernel, f32 rate,
//                                    u32 weight count, u32 buffer count
//   f32 weights and buffers, layer by layer

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pn/error.hpp"
#include "pn/learn/model.hpp"

namespace pn::learn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void raw(const std::string& s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

    std::vector<unsigned char> bytes;
};

class ByteReader {
public:
    ByteReader(const std::vector<unsigned char>& b, std::string name) : b_(b), name_(std::move(name)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string raw(std::size_t n) {
        need(n);
        std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw TruncatedFile(name_ + ": checkpoint truncated at byte " + std::to_string(pos_));
    }

    const std::vector<unsigned char>& b_;
    std::string name_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<unsigned char> encode_checkpoint(Model& model) {
    detail::ByteWriter w;
    w.raw("PNCK");
    w.u32(kCheckpointVersion);
    const ModelSpec& spec = model.spec();
    w.u32(static_cast<std::uint32_t>(spec.id.size()));
    w.raw(spec.id);
    w.u32(static_cast<std::uint32_t>(spec.classes));
    const Shape& in = model.input_shape();
    w.u32(in.c);
    w.u32(in.h);
    w.u32(in.w);
    w.u32(in.flat ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(model.layer_count()));
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        Layer& l = model.layer(i);
        const LayerDesc& d = l.desc();
        std::size_t nw = 0, nb = 0;
        for (auto& p : l.params()) nw += p.value.size();
        for (auto& b : l.buffers()) nb += b.size();
        w.u32(static_cast<std::uint32_t>(d.kind));
        w.u32(static_cast<std::uint32_t>(d.units));
        w.u32(static_cast<std::uint32_t>(d.kernel));
        w.f32(d.rate);
        w.u32(static_cast<std::uint32_t>(nw));
        w.u32(static_cast<std::uint32_t>(nb));
    }
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        Layer& l = model.layer(i);
        for (auto& p : l.params())
            for (double v : p.value) w.f32(v);
        for (auto& b : l.buffers())
            for (double v : b) w.f32(v);
    }
    return std::move(w.bytes);
}

inline Model decode_checkpoint(const std::vector<unsigned char>& bytes, const std::string& name = "checkpoint") {
    detail::ByteReader r(bytes, name);
    if (r.raw(4) != "PNCK") throw UnsupportedFormat(name + ": not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw UnsupportedFormat(name + ": unsupported checkpoint version " + std::to_string(version));
    ModelSpec spec;
    const std::uint32_t id_len = r.u32();
    if (id_len > 4096) throw UnsupportedFormat(name + ": implausible id length");
    spec.id = r.raw(id_len);
    spec.classes = static_cast<int>(r.u32());
    Shape in;
    in.c = static_cast<int>(r.u32());
    in.h = static_cast<int>(r.u32());
    in.w = static_cast<int>(r.u32());
    in.flat = r.u32() != 0;
    const std::uint32_t n = r.u32();
    if (n > 10000) throw UnsupportedFormat(name + ": implausible layer count");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
    for (std::uint32_t i = 0; i < n; ++i) {
        LayerDesc d;
        const std::uint32_t kind = r.u32();
        if (kind < 1 || kind > 10) throw UnsupportedFormat(name + ": unknown layer kind " + std::to_string(kind));
        d.kind = static_cast<LayerKind>(kind);
        d.units = static_cast<int>(r.u32());
        d.kernel = static_cast<int>(r.u32());
        d.rate = r.f32();
        spec.layers.push_back(d);
        const std::uint32_t nw = r.u32(), nb = r.u32();
        counts.emplace_back(nw, nb);
    }
    Model model(spec, in, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        Layer& l = model.layer(i);
        std::size_t nw = 0, nb = 0;
        for (auto& p : l.params()) nw += p.value.size();
        for (auto& b : l.buffers()) nb += b.size();
        if (nw != counts[i].first || nb != counts[i].second)
            throw ShapeMismatch(name + ": layer " + std::to_string(i) + " weight count does not match its descriptor");
        for (auto& p : l.params())
            for (double& v : p.value) v = r.f32();
        for (auto& b : l.buffers())
            for (double& v : b) v = r.f32();
    }
    if (!r.done()) throw UnsupportedFormat(name + ": trailing bytes after checkpoint");
    return model;
}

inline void save_checkpoint(const std::filesystem::path& path, Model& model) {
    const auto bytes = encode_checkpoint(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes, path.string());
}

} // namespace pn::learn

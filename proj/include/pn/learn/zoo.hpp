#pragma once

// Architecture zoo. image-A/C/F and audio-A/E/F follow the published layer
// tables; the B/D/E image variants and the remaining audio variants are built
// from their textual descriptions. desk-* are small models for CPU-scale runs.

#include <optional>
#include <string>
#include <vector>

#include "pn/learn/spec.hpp"

namespace pn::learn::zoo {

inline constexpr int kImageClasses = 10;
inline constexpr int kAudioClasses = 12;

struct PublishedCount {
    std::string id;
    std::size_t params;
};

// Totals printed next to the tables; reported, never asserted.
inline const std::vector<PublishedCount>& published_counts() {
    static const std::vector<PublishedCount> v = {
        {"image-A", 701386}, {"image-C", 1144138}, {"image-F", 1686090},
        {"audio-A", 101412}, {"audio-E", 824868},  {"audio-F", 3715460},
    };
    return v;
}

inline std::optional<std::size_t> published_count(const std::string& id) {
    for (const auto& p : published_counts())
        if (p.id == id) return p.params;
    return std::nullopt;
}

namespace detail {

using Layers = std::vector<LayerDesc>;

inline void conv_relu(Layers& l, int c) {
    l.push_back(conv(c));
    l.push_back(relu());
}

inline void conv_drop(Layers& l, int c) {
    l.push_back(conv(c));
    l.push_back(relu());
    l.push_back(dropout(0.5));
}

// Conv([32,64]) + ReLU, Conv(128) + Dropout, Conv([128,128]) + ReLU, Conv(128) + Dropout
inline Layers image_trunk() {
    Layers l;
    conv_relu(l, 32);
    conv_relu(l, 64);
    conv_drop(l, 128);
    conv_relu(l, 128);
    conv_relu(l, 128);
    conv_drop(l, 128);
    return l;
}

inline void all_conv_head(Layers& l, int classes) {
    l.push_back(conv(classes));
    l.push_back(global_avg_pool());
    l.push_back(softmax());
}

inline void fc_drop(Layers& l, int units, double rate) {
    l.push_back(dense(units));
    l.push_back(relu());
    l.push_back(dropout(rate));
}

inline void audio_stem(Layers& l) {
    l.push_back(conv(32));
    l.push_back(batch_norm());
    l.push_back(relu());
}

inline void conv_loop(Layers& l, int times) {
    for (int i = 0; i < times; ++i) {
        l.push_back(conv(32));
        l.push_back(elu());
        l.push_back(maxpool());
        l.push_back(dropout(0.5));
    }
}

inline void fc_loop(Layers& l, int units) {
    l.push_back(dense(units));
    l.push_back(elu());
    l.push_back(dropout(0.6));
}

} // namespace detail

inline std::vector<std::string> image_ids() {
    return {"image-A", "image-B", "image-C", "image-D", "image-E", "image-F"};
}
inline std::vector<std::string> audio_ids() {
    return {"audio-A", "audio-B", "audio-C", "audio-D", "audio-E", "audio-F"};
}
inline std::vector<std::string> desk_ids() { return {"desk-small", "desk-large", "desk-linear"}; }

inline bool is_audio(const std::string& id) { return id.rfind("audio-", 0) == 0; }

// Returns std::nullopt for unknown ids. classes <= 0 selects the zoo default.
inline std::optional<ModelSpec> find(const std::string& id, int classes = 0) {
    using namespace detail;
    ModelSpec s;
    s.id = id;
    Layers l;
    if (id.rfind("image-", 0) == 0 || id.rfind("desk-", 0) == 0) {
        s.classes = classes > 0 ? classes : kImageClasses;
        const char v = id.back();
        if (id == "image-A") {
            l = image_trunk();
            conv_relu(l, 128);
            conv_relu(l, 128);
            all_conv_head(l, s.classes);
        } else if (id == "image-B" || id == "image-E") {
            l = image_trunk();
            conv_relu(l, 128);
            conv_relu(l, 128);
            l.push_back(global_avg_pool());
            const int units = v == 'B' ? 128 : 256;
            fc_drop(l, units, 0.5);
            fc_drop(l, units, 0.5);
            l.push_back(dense(s.classes));
            l.push_back(softmax());
        } else if (id == "image-C" || id == "image-D") {
            l = image_trunk();
            conv_relu(l, 128);
            conv_relu(l, 128);
            conv_drop(l, 128);
            conv_relu(l, 128);
            conv_relu(l, 128);
            if (v == 'C') {
                all_conv_head(l, s.classes);
            } else {
                l.push_back(global_avg_pool());
                fc_drop(l, 128, 0.5);
                fc_drop(l, 128, 0.5);
                l.push_back(dense(s.classes));
                l.push_back(softmax());
            }
        } else if (id == "image-F") {
            l = image_trunk();
            l.push_back(flatten());
            fc_drop(l, 128, 0.5);
            fc_drop(l, 256, 0.5);
            fc_drop(l, 256, 0.5);
            l.push_back(dense(s.classes));
            l.push_back(softmax());
        } else if (id == "desk-small") {
            conv_relu(l, 16);
            l.push_back(maxpool());
            conv_relu(l, 32);
            l.push_back(maxpool());
            conv_relu(l, 32);
            l.push_back(global_avg_pool());
            l.push_back(dense(s.classes));
            l.push_back(softmax());
        } else if (id == "desk-large") {
            conv_relu(l, 32);
            conv_relu(l, 32);
            l.push_back(maxpool());
            conv_relu(l, 64);
            conv_relu(l, 64);
            l.push_back(maxpool());
            l.push_back(flatten());
            fc_drop(l, 128, 0.5);
            l.push_back(dense(s.classes));
            l.push_back(softmax());
        } else if (id == "desk-linear") {
            l.push_back(flatten());
            l.push_back(dense(s.classes));
            l.push_back(softmax());
        } else {
            return std::nullopt;
        }
    } else if (is_audio(id)) {
        s.classes = classes > 0 ? classes : kAudioClasses;
        audio_stem(l);
        const char v = id.back();
        if (id == "audio-A") {
            conv_loop(l, 3);
            l.push_back(flatten());
        } else if (id == "audio-B") {
            conv_loop(l, 4);
            l.push_back(flatten());
            fc_loop(l, 128);
        } else if (id == "audio-C") {
            conv_loop(l, 3);
            l.push_back(flatten());
            fc_loop(l, 64);
            fc_loop(l, 128);
        } else if (id == "audio-D" || id == "audio-F") {
            conv_loop(l, v == 'D' ? 3 : 2);
            l.push_back(flatten());
            fc_loop(l, 128);
        } else if (id == "audio-E") {
            conv_loop(l, 3);
            l.push_back(flatten());
            fc_loop(l, 128);
            fc_loop(l, 128);
        } else {
            return std::nullopt;
        }
        l.push_back(dense(s.classes));
        l.push_back(softmax());
    } else {
        return std::nullopt;
    }
    s.layers = std::move(l);
    return s;
}

inline ModelSpec get(const std::string& id, int classes = 0) {
    auto s = find(id, classes);
    if (!s) throw ConfigError("unknown architecture '" + id + "'");
    return *s;
}

} // namespace pn::learn::zoo

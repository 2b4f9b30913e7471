#pragma once

// Dataset ingestion: CIFAR-10 binary batches, WAV directories with a CSV
// manifest, and a synthetic set whose labels live in the finest DCT band.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pn/audio_codec.hpp"
#include "pn/error.hpp"
#include "pn/image_codec.hpp"
#include "pn/learn/train.hpp"

namespace pn::data {

namespace fs = std::filesystem;

// Raw samples before any lossy transform.
template <class T>
struct Corpus {
    std::vector<T> train_x, test_x;
    std::vector<int> train_y, test_y;
    std::vector<std::string> class_names;

    int classes() const { return static_cast<int>(class_names.size()); }
};

using ImageCorpus = Corpus<codec::ImageRGB>;
using AudioCorpus = Corpus<audio::PcmSignal>;

enum class DatasetKind { Cifar10, Audio, SyntheticHF };

struct DatasetRef {
    DatasetKind kind = DatasetKind::Cifar10;
    fs::path root;
    // CIFAR-10 only: labels to keep (empty = all), per-class caps.
    std::vector<int> classes;
    int train_per_class = 5000;
    int test_per_class = 1000;
    // Audio only.
    fs::path manifest; // default: root / "manifest.csv"
    double train_fraction = 0.75;
    int frames = 128;
    // Synthetic only.
    int train_count = 400;
    int test_count = 200;
    std::uint64_t seed = 0;

    void validate() const {
        if (train_per_class < 1 || test_per_class < 1) throw ConfigError("per-class caps must be >= 1");
        if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("train fraction must be in (0,1)");
        if (frames < 1) throw ConfigError("frame count must be >= 1");
        if (train_count < 1 || test_count < 1) throw ConfigError("synthetic counts must be >= 1");
        for (int c : classes)
            if (c < 0 || c > 9) throw ConfigError("CIFAR-10 class " + std::to_string(c) + " out of range");
    }
};

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- CIFAR-10

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarRecord = 1 + 3 * kCifarSide * kCifarSide;

inline const std::vector<std::string>& cifar10_class_names() {
    static const std::vector<std::string> names = {"airplane", "automobile", "bird",  "cat",  "deer",
                                                   "dog",      "frog",       "horse", "ship", "truck"};
    return names;
}

struct LabeledImage {
    int label = 0;
    codec::ImageRGB image;
};

// Records are 1 label byte followed by the R, G and B planes, row-major.
inline std::vector<LabeledImage> parse_cifar10(const std::vector<unsigned char>& bytes, const std::string& name) {
    if (bytes.size() % kCifarRecord != 0)
        throw TruncatedFile(name + ": length " + std::to_string(bytes.size()) + " is not a multiple of " +
                            std::to_string(kCifarRecord));
    const std::size_t plane = kCifarSide * kCifarSide;
    std::vector<LabeledImage> out(bytes.size() / kCifarRecord);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const unsigned char* rec = bytes.data() + r * kCifarRecord;
        if (rec[0] > 9)
            throw InvalidInput(name + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]) + " > 9");
        out[r].label = rec[0];
        codec::ImageRGB& img = out[r].image;
        img = codec::ImageRGB(kCifarSide, kCifarSide);
        for (std::size_t i = 0; i < plane; ++i)
            for (int c = 0; c < 3; ++c) img.pixels[i * 3 + c] = rec[1 + c * plane + i];
    }
    return out;
}

inline std::vector<LabeledImage> read_cifar10_file(const fs::path& path) {
    return parse_cifar10(read_bytes(path), path.string());
}

inline std::vector<unsigned char> encode_cifar10(const std::vector<LabeledImage>& records) {
    const std::size_t plane = kCifarSide * kCifarSide;
    std::vector<unsigned char> out;
    out.reserve(records.size() * kCifarRecord);
    for (const auto& r : records) {
        if (r.label < 0 || r.label > 9) throw InvalidInput("CIFAR-10 label out of range");
        if (r.image.width != static_cast<int>(kCifarSide) || r.image.height != static_cast<int>(kCifarSide))
            throw InvalidInput("CIFAR-10 images are 32x32");
        out.push_back(static_cast<unsigned char>(r.label));
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < plane; ++i) out.push_back(r.image.pixels[i * 3 + c]);
    }
    return out;
}

inline void write_cifar10_file(const fs::path& path, const std::vector<LabeledImage>& records) {
    const auto bytes = encode_cifar10(records);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace detail {

// Seeded per-class pick of at most `cap` indices, returned in file order.
inline std::vector<std::size_t> pick_per_class(const std::vector<LabeledImage>& all, const std::vector<int>& keep,
                                               int cap, std::uint64_t seed) {
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < all.size(); ++i)
            if (all[i].label == keep[k]) idx.push_back(i);
        std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(keep[k]));
        std::shuffle(idx.begin(), idx.end(), rng);
        if (idx.size() > static_cast<std::size_t>(cap)) idx.resize(cap);
        chosen.insert(chosen.end(), idx.begin(), idx.end());
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

} // namespace detail

// Reads data_batch_{1..5}.bin and test_batch.bin under ref.root. Missing
// training batches are skipped as long as at least one is present.
inline ImageCorpus load_cifar10(const DatasetRef& ref) {
    ref.validate();
    std::vector<LabeledImage> train, test;
    int found = 0;
    for (int b = 1; b <= 5; ++b) {
        const fs::path p = ref.root / ("data_batch_" + std::to_string(b) + ".bin");
        if (!fs::exists(p)) continue;
        ++found;
        auto recs = read_cifar10_file(p);
        train.insert(train.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    if (found == 0) throw InvalidInput("no CIFAR-10 training batches (data_batch_N.bin) under " + ref.root.string());
    const fs::path tp = ref.root / "test_batch.bin";
    if (!fs::exists(tp)) throw InvalidInput("missing CIFAR-10 test batch " + tp.string());
    test = read_cifar10_file(tp);

    std::vector<int> keep = ref.classes;
    if (keep.empty()) {
        keep.resize(10);
        std::iota(keep.begin(), keep.end(), 0);
    }
    std::map<int, int> remap;
    ImageCorpus c;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        if (!remap.emplace(keep[k], static_cast<int>(k)).second) throw ConfigError("duplicate class in subset");
        c.class_names.push_back(cifar10_class_names()[keep[k]]);
    }
    for (std::size_t i : detail::pick_per_class(train, keep, ref.train_per_class, ref.seed)) {
        c.train_x.push_back(std::move(train[i].image));
        c.train_y.push_back(remap.at(train[i].label));
    }
    for (std::size_t i : detail::pick_per_class(test, keep, ref.test_per_class, ref.seed + 1)) {
        c.test_x.push_back(std::move(test[i].image));
        c.test_y.push_back(remap.at(test[i].label));
    }
    return c;
}

// ------------------------------------------------------------------- audio

struct ManifestEntry {
    fs::path path;
    std::string label;
};

// CSV with "path,label" rows; a header row with exactly those names is
// skipped. Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw InvalidInput("cannot open manifest " + manifest.string());
    std::vector<ManifestEntry> out;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw InvalidInput(manifest.string() + ":" + std::to_string(lineno) + ": expected 'path,label'");
        std::string path = line.substr(0, comma), label = line.substr(comma + 1);
        if (lineno == 1 && path == "path" && label == "label") continue;
        if (path.empty() || label.empty())
            throw InvalidInput(manifest.string() + ":" + std::to_string(lineno) + ": empty path or label");
        fs::path p = fs::path(path).is_absolute() ? fs::path(path) : manifest.parent_path() / path;
        p = p.lexically_normal();
        if (!seen.insert(p.string()).second) throw InvalidInput("duplicate path in manifest: " + p.string());
        if (!fs::exists(p)) throw InvalidInput("file listed in manifest does not exist: " + p.string());
        out.push_back({p, label});
    }
    if (out.empty()) throw InvalidInput("manifest " + manifest.string() + " lists no files");
    return out;
}

// Seeded shuffle, then the first round(n * train_fraction) go to training.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                                   std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 0.5));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

// Class indices follow the sorted label names.
inline AudioCorpus load_audio_dataset(const DatasetRef& ref) {
    ref.validate();
    const fs::path manifest = ref.manifest.empty() ? ref.root / "manifest.csv" : ref.manifest;
    const auto entries = read_manifest(manifest);
    std::set<std::string> labels;
    for (const auto& e : entries) labels.insert(e.label);
    AudioCorpus c;
    c.class_names.assign(labels.begin(), labels.end());
    auto class_of = [&](const std::string& l) {
        return static_cast<int>(std::find(c.class_names.begin(), c.class_names.end(), l) - c.class_names.begin());
    };
    const auto [train, test] = split_indices(entries.size(), ref.train_fraction, ref.seed);
    for (std::size_t i : train) {
        c.train_x.push_back(audio::read_wav(entries[i].path));
        c.train_y.push_back(class_of(entries[i].label));
    }
    for (std::size_t i : test) {
        c.test_x.push_back(audio::read_wav(entries[i].path));
        c.test_y.push_back(class_of(entries[i].label));
    }
    return c;
}

// -------------------------------------------------- synthetic high-frequency

// Two classes of 32x32 gray images with a smooth random background. Class 1
// adds +-amplitude (random sign per block) to the (7,7) DCT coefficient of
// every 8x8 block, so the label is only visible in the finest band.
struct HFConfig {
    int train_count = 400;
    int test_count = 200;
    double amplitude = 60.0;
    std::uint64_t seed = 0;
};

inline codec::ImageRGB hf_image(int label, double amplitude, std::mt19937_64& rng) {
    constexpr int side = 32;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double base = 128.0 + 40.0 * u(rng);
    const double gx = 30.0 * u(rng), gy = 30.0 * u(rng), gxy = 20.0 * u(rng);
    std::vector<double> px(side * side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double fx = (x + 0.5) / side - 0.5, fy = (y + 0.5) / side - 0.5;
            px[y * side + x] = base + gx * std::sin(std::numbers::pi * fx) + gy * std::sin(std::numbers::pi * fy) + gxy * fx * fy * 4.0;
        }
    if (label == 1) {
        const auto& basis = codec::detail::dct_basis();
        for (int by = 0; by < side / 8; ++by)
            for (int bx = 0; bx < side / 8; ++bx) {
                const double a = (u(rng) < 0 ? -1.0 : 1.0) * amplitude;
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) px[(by * 8 + y) * side + bx * 8 + x] += a * basis[7][y] * basis[7][x];
            }
    }
    codec::ImageRGB img(side, side);
    for (int i = 0; i < side * side; ++i)
        for (int c = 0; c < 3; ++c) img.pixels[i * 3 + c] = codec::to_u8(px[i]);
    return img;
}

inline ImageCorpus make_hf_corpus(const HFConfig& cfg) {
    ImageCorpus c;
    c.class_names = {"smooth", "textured"};
    std::mt19937_64 rng(cfg.seed);
    for (int i = 0; i < cfg.train_count; ++i) {
        c.train_y.push_back(i % 2);
        c.train_x.push_back(hf_image(i % 2, cfg.amplitude, rng));
    }
    for (int i = 0; i < cfg.test_count; ++i) {
        c.test_y.push_back(i % 2);
        c.test_x.push_back(hf_image(i % 2, cfg.amplitude, rng));
    }
    return c;
}

// ------------------------------------------------------- tensor conversion

// (N, 3, H, W) with pixels mapped to [-1, 1].
inline learn::Tensor image_tensor(const std::vector<codec::ImageRGB>& images) {
    if (images.empty()) throw InvalidInput("empty image set");
    const int H = images[0].height, W = images[0].width;
    learn::Tensor t({static_cast<int>(images.size()), 3, H, W});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const auto& img = images[n];
        if (img.width != W || img.height != H) throw ShapeMismatch("images in a set must share one size");
        double* dst = t.sample(static_cast<int>(n));
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x)
                    dst[(static_cast<std::size_t>(c) * H + y) * W + x] = img.at(x, y, c) / 127.5 - 1.0;
    }
    return t;
}

// (N, 1, bands, frames); dB values in [floor, 0] mapped to [-1, 1]. Clips
// are cropped or right-padded with the floor value to `frames` columns.
inline learn::Tensor mel_tensor(const std::vector<audio::MelSpectrogram>& mels, int frames, double floor_db = -80.0) {
    if (mels.empty()) throw InvalidInput("empty spectrogram set");
    const int bands = mels[0].bands;
    learn::Tensor t({static_cast<int>(mels.size()), 1, bands, frames});
    for (std::size_t n = 0; n < mels.size(); ++n) {
        const auto& m = mels[n];
        if (m.bands != bands) throw ShapeMismatch("spectrograms must share a band count");
        double* dst = t.sample(static_cast<int>(n));
        for (int b = 0; b < bands; ++b)
            for (int f = 0; f < frames; ++f) {
                const double v = f < m.frames ? m.at(b, f) : floor_db;
                dst[static_cast<std::size_t>(b) * frames + f] = 1.0 - 2.0 * v / floor_db;
            }
    }
    return t;
}

// Transcodes every image at quality q (100 = untouched when q is 0).
inline learn::Dataset image_dataset(const ImageCorpus& c, int q) {
    auto transform = [&](const std::vector<codec::ImageRGB>& xs) {
        std::vector<codec::ImageRGB> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(q == 0 ? x : codec::transcode_image(x, q).image);
        return image_tensor(out);
    };
    learn::Dataset d;
    d.train = {transform(c.train_x), c.train_y};
    d.test = {transform(c.test_x), c.test_y};
    d.classes = c.classes();
    return d;
}

inline learn::Dataset audio_dataset(const AudioCorpus& c, double Q, int frames, const audio::MelConfig& mel = {}) {
    const audio::AudioQuality quality(Q);
    auto transform = [&](const std::vector<audio::PcmSignal>& xs) {
        std::vector<audio::MelSpectrogram> out;
        out.reserve(xs.size());
        for (const auto& x : xs) out.push_back(audio::mel_spectrogram(audio::perceptual_quantize_audio(x, quality), mel));
        return mel_tensor(out, frames, mel.floor_db);
    };
    learn::Dataset d;
    d.train = {transform(c.train_x), c.train_y};
    d.test = {transform(c.test_x), c.test_y};
    d.classes = c.classes();
    return d;
}

} // namespace pn::data

#pragma once

// Audio side: PCM16 mono WAV I/O, sine-window MDCT with 50% overlap, a
// frequency-weighted MDCT quantizer driven by a normalized quality Q, an
// adapter for an external MP3 encoder, and 96-band log-mel spectrograms.

#include <fftw3.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pn/error.hpp"

namespace pn::audio {

struct PcmSignal {
    std::vector<std::int16_t> samples;
    int rate = 44100;

    bool operator==(const PcmSignal&) const = default;
};

// ---------------------------------------------------------------- WAV I/O

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

} // namespace detail

inline PcmSignal parse_wav(std::span<const unsigned char> bytes, const std::string& name = "<memory>") {
    using detail::le16;
    using detail::le32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw UnsupportedFormat(name + ": not a RIFF/WAVE file");

    std::optional<int> rate;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16 || body + size > bytes.size()) throw TruncatedFile(name + ": fmt chunk truncated");
            const unsigned char* f = bytes.data() + body;
            std::uint16_t tag = le16(f);
            const std::uint16_t channels = le16(f + 2);
            const std::uint32_t sr = le32(f + 4);
            const std::uint16_t bits = le16(f + 14);
            if (tag == 0xFFFE && size >= 26) tag = le16(f + 24); // WAVE_FORMAT_EXTENSIBLE subformat
            if (tag == 3) throw UnsupportedFormat(name + ": floating-point WAV is not supported (need PCM16)");
            if (tag != 1) throw UnsupportedFormat(name + ": compressed WAV (format tag " + std::to_string(tag) + ") is not supported");
            if (channels != 1) throw UnsupportedFormat(name + ": " + std::to_string(channels) + "-channel WAV is not supported (need mono)");
            if (bits != 16) throw UnsupportedFormat(name + ": " + std::to_string(bits) + "-bit WAV is not supported (need 16-bit)");
            if (sr == 0) throw UnsupportedFormat(name + ": sample rate is zero");
            rate = static_cast<int>(sr);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw UnsupportedFormat(name + ": data chunk precedes fmt chunk");
            if (body + size > bytes.size()) throw TruncatedFile(name + ": data chunk truncated");
            if (size % 2 != 0) throw TruncatedFile(name + ": odd data chunk length for 16-bit samples");
            PcmSignal sig;
            sig.rate = *rate;
            sig.samples.resize(size / 2);
            for (std::size_t i = 0; i < sig.samples.size(); ++i)
                sig.samples[i] = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
            if (sig.samples.empty()) throw UnsupportedFormat(name + ": no samples");
            return sig;
        }
        pos = body + size + (size & 1);
    }
    throw TruncatedFile(name + ": missing " + std::string(have_fmt ? "data" : "fmt") + " chunk");
}

inline PcmSignal read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_wav(bytes, path.string());
}

inline std::vector<unsigned char> encode_wav(const PcmSignal& sig) {
    using detail::put16;
    using detail::put32;
    std::vector<unsigned char> b;
    const auto data_bytes = static_cast<std::uint32_t>(sig.samples.size() * 2);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    put32(b, 36 + data_bytes);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(b, 16);
    put16(b, 1);
    put16(b, 1);
    put32(b, static_cast<std::uint32_t>(sig.rate));
    put32(b, static_cast<std::uint32_t>(sig.rate) * 2);
    put16(b, 2);
    put16(b, 16);
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    put32(b, data_bytes);
    for (std::int16_t s : sig.samples) put16(b, static_cast<std::uint16_t>(s));
    return b;
}

inline void write_wav(const std::filesystem::path& path, const PcmSignal& sig) {
    const auto bytes = encode_wav(sig);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline PcmSignal sine_signal(double freq, int rate, std::size_t count, double amplitude = 32767.0) {
    PcmSignal s;
    s.rate = rate;
    s.samples.resize(count);
    for (std::size_t n = 0; n < count; ++n)
        s.samples[n] = static_cast<std::int16_t>(
            std::lround(amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(n) / rate)));
    return s;
}

inline std::vector<double> to_double(const PcmSignal& s) { return {s.samples.begin(), s.samples.end()}; }

inline PcmSignal from_double(std::span<const double> x, int rate) {
    PcmSignal s;
    s.rate = rate;
    s.samples.reserve(x.size());
    for (double v : x) s.samples.push_back(static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L)));
    return s;
}

inline double snr_db(std::span<const double> reference, std::span<const double> test) {
    if (reference.size() != test.size()) throw InvalidInput("snr: length mismatch");
    double sig = 0, err = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        sig += reference[i] * reference[i];
        const double d = reference[i] - test[i];
        err += d * d;
    }
    if (err == 0) return std::numeric_limits<double>::infinity();
    if (sig == 0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / err);
}

inline double snr_db(const PcmSignal& reference, const PcmSignal& test) {
    const auto a = to_double(reference), b = to_double(test);
    return snr_db(a, b);
}

// ------------------------------------------------------------------- MDCT

namespace detail {

// FFTW's planner is not reentrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// N-point DCT-IV: X[k] = sum u[n] cos(pi/N (n+1/2)(k+1/2)).
class DctIV {
public:
    explicit DctIV(int n) : n_(n), buf_(static_cast<double*>(fftw_malloc(sizeof(double) * n))) {
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_r2r_1d(n, buf_, buf_, FFTW_REDFT11, FFTW_ESTIMATE);
    }
    ~DctIV() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buf_);
    }
    DctIV(const DctIV&) = delete;
    DctIV& operator=(const DctIV&) = delete;

    void operator()(std::span<double> data) {
        std::copy(data.begin(), data.end(), buf_);
        fftw_execute(plan_);
        for (int i = 0; i < n_; ++i) data[i] = 0.5 * buf_[i]; // REDFT11 carries a factor 2
    }

private:
    int n_;
    double* buf_;
    fftw_plan plan_;
};

} // namespace detail

struct MdctFrames {
    int window = 1024;
    std::size_t length = 0;                  // original signal length
    std::vector<std::vector<double>> frames; // window/2 coefficients each
};

inline std::vector<double> sine_window(int window) {
    std::vector<double> w(window);
    for (int n = 0; n < window; ++n) w[n] = std::sin(std::numbers::pi * (n + 0.5) / window);
    return w;
}

// The signal is padded with window/2 zeros in front and zero-filled at the end
// to a whole number of hops, so every original sample sees two frames.
inline MdctFrames mdct_forward(std::span<const double> signal, int window = 1024) {
    if (window < 4 || window % 4 != 0) throw InvalidInput("MDCT window must be a positive multiple of 4");
    const int n = window / 2;
    const std::size_t hops = (signal.size() + n - 1) / n + 1;
    std::vector<double> padded((hops + 1) * n, 0.0);
    std::copy(signal.begin(), signal.end(), padded.begin() + n);

    const auto w = sine_window(window);
    detail::DctIV dct(n);
    MdctFrames out;
    out.window = window;
    out.length = signal.size();
    out.frames.reserve(hops);
    const int h = n / 2;
    std::vector<double> z(window), u(n);
    for (std::size_t t = 0; t < hops; ++t) {
        for (int i = 0; i < window; ++i) z[i] = w[i] * padded[t * n + i];
        // fold (a,b,c,d) -> (-c_r - d, a - b_r)
        const double* a = z.data();
        const double* b = z.data() + h;
        const double* c = z.data() + 2 * h;
        const double* d = z.data() + 3 * h;
        for (int i = 0; i < h; ++i) {
            u[i] = -c[h - 1 - i] - d[i];
            u[h + i] = a[i] - b[h - 1 - i];
        }
        dct(u);
        out.frames.push_back(u);
    }
    return out;
}

inline std::vector<double> mdct_inverse(const MdctFrames& frames) {
    const int window = frames.window;
    const int n = window / 2, h = n / 2;
    const auto w = sine_window(window);
    detail::DctIV dct(n);
    std::vector<double> padded((frames.frames.size() + 1) * n, 0.0);
    std::vector<double> v(n), y(window);
    const double scale = 2.0 / n;
    for (std::size_t t = 0; t < frames.frames.size(); ++t) {
        if (frames.frames[t].size() != static_cast<std::size_t>(n)) throw InvalidInput("MDCT frame has wrong size");
        std::copy(frames.frames[t].begin(), frames.frames[t].end(), v.begin());
        dct(v);
        // unfold (v1, v2) -> (v2, -v2_r, -v1_r, -v1)
        for (int i = 0; i < h; ++i) {
            y[i] = v[h + i];
            y[h + i] = -v[n - 1 - i];
            y[2 * h + i] = -v[h - 1 - i];
            y[3 * h + i] = -v[i];
        }
        for (int i = 0; i < window; ++i) padded[t * n + i] += scale * w[i] * y[i];
    }
    return {padded.begin() + n, padded.begin() + n + static_cast<std::ptrdiff_t>(frames.length)};
}

// ----------------------------------------------------- perceptual quantizer

struct AudioQuality {
    double q = 0.0; // 0 transparent, 1 lowest quality

    explicit AudioQuality(double value) : q(value) {
        if (!(value >= 0.0 && value <= 1.0)) throw InvalidQuality("audio quality Q must be in [0,1]");
    }
};

// step(band) = base * (1 + freq_ramp (band/bands)^2) * (1 + q_gain Q), where
// base = base_fraction * RMS of the frame's coefficients.
struct QuantizerConfig {
    int window = 1024;
    int bands = 32;
    double base_fraction = 4e-4;
    double freq_ramp = 9.0;
    double q_gain = 31.0;
};

inline double step_size(const QuantizerConfig& cfg, double base, int band, double q) {
    const double x = static_cast<double>(band) / cfg.bands;
    return base * (1.0 + cfg.freq_ramp * x * x) * (1.0 + cfg.q_gain * q);
}

inline PcmSignal perceptual_quantize_audio(const PcmSignal& signal, AudioQuality quality, const QuantizerConfig& cfg = {}) {
    if (signal.samples.empty()) throw InvalidInput("empty signal");
    const auto x = to_double(signal);
    MdctFrames frames = mdct_forward(x, cfg.window);
    const int n = cfg.window / 2;
    const int bins_per_band = std::max(1, n / cfg.bands);
    for (auto& f : frames.frames) {
        double energy = 0;
        for (double c : f) energy += c * c;
        if (energy == 0) continue;
        const double base = cfg.base_fraction * std::sqrt(energy / n);
        for (int k = 0; k < n; ++k) {
            const double step = step_size(cfg, base, std::min(k / bins_per_band, cfg.bands - 1), quality.q);
            f[k] = std::round(f[k] / step) * step;
        }
    }
    return from_double(mdct_inverse(frames), signal.rate);
}

// ------------------------------------------------------ external encoder

struct ExternalEncoder {
    std::string encoder = "lame";
    std::string decoder = "lame";
    std::vector<int> bitrate_ladder = {32, 40, 48, 56, 64, 80, 96, 112, 128, 160, 192, 224, 256, 320};
};

// Linear map of a bitrate onto Q: the top of the ladder is Q=0.
inline double bitrate_to_quality(double kbps, double rate_min, double rate_max) {
    if (!(rate_max > rate_min)) throw InvalidInput("bitrate ladder must have max > min");
    return std::clamp(1.0 - (kbps - rate_min) / (rate_max - rate_min), 0.0, 1.0);
}

inline double bitrate_to_quality(double kbps, const ExternalEncoder& enc) {
    const auto [lo, hi] = std::minmax_element(enc.bitrate_ladder.begin(), enc.bitrate_ladder.end());
    return bitrate_to_quality(kbps, *lo, *hi);
}

namespace detail {

inline std::optional<std::filesystem::path> find_executable(const std::string& name) {
    namespace fs = std::filesystem;
    auto runnable = [](const fs::path& p) { return ::access(p.c_str(), X_OK) == 0 && fs::is_regular_file(p); };
    if (name.find('/') != std::string::npos) {
        if (runnable(name)) return fs::path(name);
        return std::nullopt;
    }
    const char* path_env = std::getenv("PATH");
    if (!path_env) return std::nullopt;
    std::string paths(path_env);
    std::size_t start = 0;
    while (start <= paths.size()) {
        const std::size_t end = std::min(paths.find(':', start), paths.size());
        const fs::path candidate = fs::path(paths.substr(start, end - start)) / name;
        if (end > start && runnable(candidate)) return candidate;
        start = end + 1;
    }
    return std::nullopt;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

} // namespace detail

inline bool external_encoder_available(const ExternalEncoder& enc) {
    return detail::find_executable(enc.encoder) && detail::find_executable(enc.decoder);
}

// Encode at a constant bitrate and decode back. Codec delay is trimmed by the
// decoder; the result is cut or zero-padded to the input length.
inline PcmSignal external_encode(const PcmSignal& signal, int kbps, const ExternalEncoder& enc = {}) {
    namespace fs = std::filesystem;
    const auto encoder = detail::find_executable(enc.encoder);
    const auto decoder = detail::find_executable(enc.decoder);
    if (!encoder) throw FeatureUnavailable("external encoder '" + enc.encoder + "' not found");
    if (!decoder) throw FeatureUnavailable("external decoder '" + enc.decoder + "' not found");
    if (kbps <= 0) throw InvalidInput("bitrate must be positive");

    std::string tmpl = (fs::temp_directory_path() / "pn-encode-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw Error("cannot create temporary directory");
    const fs::path dir(tmpl);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{dir};

    write_wav(dir / "in.wav", signal);
    const std::string enc_cmd = detail::shell_quote(encoder->string()) + " --quiet --cbr -b " + std::to_string(kbps) + " " +
                                detail::shell_quote((dir / "in.wav").string()) + " " +
                                detail::shell_quote((dir / "out.mp3").string()) + " >/dev/null 2>&1";
    if (std::system(enc_cmd.c_str()) != 0) throw Error("external encoder failed: " + enc_cmd);
    const std::string dec_cmd = detail::shell_quote(decoder->string()) + " --quiet --decode " +
                                detail::shell_quote((dir / "out.mp3").string()) + " " +
                                detail::shell_quote((dir / "out.wav").string()) + " >/dev/null 2>&1";
    if (std::system(dec_cmd.c_str()) != 0) throw Error("external decoder failed: " + dec_cmd);

    PcmSignal out = read_wav(dir / "out.wav");
    out.samples.resize(signal.samples.size(), 0);
    out.rate = signal.rate;
    return out;
}

// -------------------------------------------------------- mel spectrogram

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelConfig {
    int n_mels = 96;
    int frame = 1024;
    int hop = 512;
    double floor_db = -80.0;
};

struct MelSpectrogram {
    int bands = 0;
    int frames = 0;
    std::vector<float> values; // [band][frame], dB relative to the clip maximum

    float at(int band, int frame) const { return values[static_cast<std::size_t>(band) * frames + frame]; }
};

// Triangle corner frequencies: n_mels + 2 points equally spaced in mel.
inline std::vector<double> mel_points_hz(int n_mels, double rate) {
    const double top = hz_to_mel(rate / 2.0);
    std::vector<double> pts(n_mels + 2);
    for (int i = 0; i < n_mels + 2; ++i) pts[i] = mel_to_hz(top * i / (n_mels + 1));
    return pts;
}

inline std::vector<double> mel_center_frequencies(int n_mels, double rate) {
    const auto pts = mel_points_hz(n_mels, rate);
    return {pts.begin() + 1, pts.end() - 1};
}

// Row-major [n_mels][frame/2 + 1] triangular weights at the FFT bin frequencies.
inline std::vector<double> mel_filterbank(int n_mels, int frame, double rate) {
    const int bins = frame / 2 + 1;
    const auto pts = mel_points_hz(n_mels, rate);
    std::vector<double> fb(static_cast<std::size_t>(n_mels) * bins, 0.0);
    for (int m = 0; m < n_mels; ++m) {
        const double lo = pts[m], mid = pts[m + 1], hi = pts[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = k * rate / frame;
            double wgt = 0;
            if (f > lo && f <= mid) wgt = (f - lo) / (mid - lo);
            else if (f > mid && f < hi) wgt = (hi - f) / (hi - mid);
            fb[static_cast<std::size_t>(m) * bins + k] = wgt;
        }
    }
    return fb;
}

inline MelSpectrogram mel_spectrogram(const PcmSignal& signal, const MelConfig& cfg = {}) {
    if (cfg.n_mels < 1 || cfg.frame < 2 || cfg.hop < 1) throw InvalidInput("invalid mel configuration");
    if (signal.samples.size() < static_cast<std::size_t>(cfg.frame))
        throw InvalidInput("signal shorter than one analysis frame (" + std::to_string(signal.samples.size()) + " < " +
                           std::to_string(cfg.frame) + ")");
    const int frames = 1 + static_cast<int>((signal.samples.size() - cfg.frame) / cfg.hop);
    const int bins = cfg.frame / 2 + 1;
    const auto fb = mel_filterbank(cfg.n_mels, cfg.frame, signal.rate);

    std::vector<double> hann(cfg.frame);
    for (int i = 0; i < cfg.frame; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.frame);

    double* in = static_cast<double*>(fftw_malloc(sizeof(double) * cfg.frame));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(cfg.frame, in, out, FFTW_ESTIMATE);
    }

    std::vector<double> mel(static_cast<std::size_t>(cfg.n_mels) * frames, 0.0);
    std::vector<double> power(bins);
    for (int t = 0; t < frames; ++t) {
        for (int i = 0; i < cfg.frame; ++i) in[i] = hann[i] * signal.samples[static_cast<std::size_t>(t) * cfg.hop + i];
        fftw_execute(plan);
        for (int k = 0; k < bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        for (int m = 0; m < cfg.n_mels; ++m) {
            double s = 0;
            const double* row = fb.data() + static_cast<std::size_t>(m) * bins;
            for (int k = 0; k < bins; ++k) s += row[k] * power[k];
            mel[static_cast<std::size_t>(m) * frames + t] = s;
        }
    }
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);

    MelSpectrogram spec;
    spec.bands = cfg.n_mels;
    spec.frames = frames;
    spec.values.assign(mel.size(), static_cast<float>(cfg.floor_db));
    const double peak = *std::max_element(mel.begin(), mel.end());
    if (peak <= 0) return spec;
    const double ref_db = 10.0 * std::log10(peak);
    for (std::size_t i = 0; i < mel.size(); ++i) {
        if (mel[i] <= 0) continue;
        spec.values[i] = static_cast<float>(std::max(cfg.floor_db, 10.0 * std::log10(mel[i]) - ref_db));
    }
    return spec;
}

// Tensor file: uint32 rank, uint32 dims..., float32 values, all little-endian.
inline void write_tensor_file(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                              std::span<const float> values) {
    std::vector<unsigned char> b;
    detail::put32(b, static_cast<std::uint32_t>(dims.size()));
    std::size_t count = 1;
    for (auto d : dims) {
        detail::put32(b, d);
        count *= d;
    }
    if (count != values.size()) throw InvalidInput("tensor dims do not match value count");
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put32(b, bits);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

struct TensorFile {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

inline TensorFile read_tensor_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open " + path.string());
    std::vector<unsigned char> b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (b.size() < 4) throw TruncatedFile(path.string() + ": missing rank");
    TensorFile t;
    const std::uint32_t rank = detail::le32(b.data());
    if (rank > 8 || b.size() < 4 + 4 * std::size_t(rank)) throw TruncatedFile(path.string() + ": bad header");
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        t.dims.push_back(detail::le32(b.data() + 4 + 4 * i));
        count *= t.dims.back();
    }
    const std::size_t off = 4 + 4 * std::size_t(rank);
    if (b.size() != off + 4 * count) throw TruncatedFile(path.string() + ": payload size does not match dims");
    t.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = detail::le32(b.data() + off + 4 * i);
        std::memcpy(&t.values[i], &bits, 4);
    }
    return t;
}

inline void write_mel_file(const std::filesystem::path& path, const MelSpectrogram& m) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(m.bands), static_cast<std::uint32_t>(m.frames)};
    write_tensor_file(path, dims, m.values);
}

} // namespace pn::audio

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pn/learn/spec.hpp"
#include "pn/learn/tensor.hpp"

namespace pn::learn {

enum class Mode {
    Train,     // dropout active, batch-norm uses batch statistics
    Inference, // dropout off, batch-norm uses running statistics
};

struct ParamView {
    std::span<double> value;
    std::span<double> grad;
};

class Layer {
public:
    Layer(const LayerDesc& desc, const Shape& in, const Shape& out) : desc_(desc), in_(in), out_(out) {}
    virtual ~Layer() = default;

    virtual void forward(const Tensor& x, Tensor& y, Mode mode, std::mt19937_64& rng) = 0;
    // Accumulates parameter gradients; writes dx when it is non-null.
    virtual void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor* dx) = 0;

    virtual std::vector<ParamView> params() { return {}; }
    // Non-trainable state that must survive a checkpoint.
    virtual std::vector<std::span<double>> buffers() { return {}; }
    // Discrete choices made during the last forward (ReLU gates, pool winners).
    virtual void append_pattern(const Tensor& /*x*/, std::vector<std::uint32_t>& /*sig*/) const {}

    const LayerDesc& desc() const { return desc_; }
    const Shape& in_shape() const { return in_; }
    const Shape& out_shape() const { return out_; }

protected:
    std::vector<int> out_dims(int batch) const {
        if (out_.flat) return {batch, out_.c};
        return {batch, out_.c, out_.h, out_.w};
    }

    LayerDesc desc_;
    Shape in_, out_;
};

namespace detail {

inline void fan_in_uniform(std::span<double> w, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w) v = dist(rng);
}

} // namespace detail

// 'same' zero padding, stride 1.
class ConvLayer final : public Layer {
public:
    ConvLayer(const LayerDesc& d, const Shape& in, const Shape& out, std::mt19937_64& rng)
        : Layer(d, in, out), k_(d.kernel), patch_(in.c * d.kernel * d.kernel),
          w_(static_cast<std::size_t>(d.units) * patch_), b_(d.units, 0.0), gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {
        detail::fan_in_uniform(w_, static_cast<std::size_t>(patch_), rng);
    }

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        const int n = x.batch(), p = in_.h * in_.w;
        y.resize(out_dims(n));
        cols_.resize(static_cast<std::size_t>(patch_) * p);
        for (int s = 0; s < n; ++s) {
            im2col(x.sample(s));
            double* out = y.sample(s);
            for (int o = 0; o < desc_.units; ++o) std::fill(out + static_cast<std::size_t>(o) * p, out + static_cast<std::size_t>(o + 1) * p, b_[o]);
            gemm_nn(desc_.units, p, patch_, w_.data(), cols_.data(), out);
        }
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        const int n = x.batch(), p = in_.h * in_.w;
        cols_.resize(static_cast<std::size_t>(patch_) * p);
        dcols_.resize(cols_.size());
        if (dx) dx->resize(x.shape);
        for (int s = 0; s < n; ++s) {
            const double* g = dy.sample(s);
            for (int o = 0; o < desc_.units; ++o) {
                double acc = 0;
                for (int i = 0; i < p; ++i) acc += g[static_cast<std::size_t>(o) * p + i];
                gb_[o] += acc;
            }
            im2col(x.sample(s));
            gemm_nt(desc_.units, patch_, p, g, cols_.data(), gw_.data());
            if (dx) {
                std::fill(dcols_.begin(), dcols_.end(), 0.0);
                gemm_tn(patch_, p, desc_.units, w_.data(), g, dcols_.data());
                col2im(dx->sample(s));
            }
        }
    }

    std::vector<ParamView> params() override { return {{w_, gw_}, {b_, gb_}}; }

private:
    // cols[(c*k + ky)*k + kx][y*W + x] = input[c][y + ky - pad][x + kx - pad]
    void im2col(const double* in) {
        const int H = in_.h, W = in_.w, pad = k_ / 2;
        std::size_t row = 0;
        for (int c = 0; c < in_.c; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    double* dst = cols_.data() + row * H * W;
                    for (int y = 0; y < H; ++y) {
                        const int sy = y + ky - pad;
                        for (int x = 0; x < W; ++x) {
                            const int sx = x + kx - pad;
                            dst[y * W + x] = (sy < 0 || sy >= H || sx < 0 || sx >= W)
                                                 ? 0.0
                                                 : in[(static_cast<std::size_t>(c) * H + sy) * W + sx];
                        }
                    }
                }
    }

    void col2im(double* out) const {
        const int H = in_.h, W = in_.w, pad = k_ / 2;
        std::size_t row = 0;
        for (int c = 0; c < in_.c; ++c)
            for (int ky = 0; ky < k_; ++ky)
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    const double* src = dcols_.data() + row * H * W;
                    for (int y = 0; y < H; ++y) {
                        const int sy = y + ky - pad;
                        if (sy < 0 || sy >= H) continue;
                        for (int x = 0; x < W; ++x) {
                            const int sx = x + kx - pad;
                            if (sx < 0 || sx >= W) continue;
                            out[(static_cast<std::size_t>(c) * H + sy) * W + sx] += src[y * W + x];
                        }
                    }
                }
    }

    int k_, patch_;
    std::vector<double> w_, b_, gw_, gb_;
    std::vector<double> cols_, dcols_;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(const LayerDesc& d, const Shape& in, const Shape& out, std::mt19937_64& rng)
        : Layer(d, in, out), in_size_(static_cast<int>(in.size())), w_(static_cast<std::size_t>(d.units) * in_size_),
          b_(d.units, 0.0), gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {
        detail::fan_in_uniform(w_, static_cast<std::size_t>(in_size_), rng);
    }

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        const int n = x.batch();
        y.resize(out_dims(n));
        for (int s = 0; s < n; ++s) std::copy(b_.begin(), b_.end(), y.sample(s));
        gemm_nt(n, desc_.units, in_size_, x.data.data(), w_.data(), y.data.data());
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        const int n = x.batch();
        for (int s = 0; s < n; ++s)
            for (int o = 0; o < desc_.units; ++o) gb_[o] += dy.sample(s)[o];
        gemm_tn(desc_.units, in_size_, n, dy.data.data(), x.data.data(), gw_.data());
        if (dx) {
            dx->resize(x.shape);
            gemm_nn(n, in_size_, desc_.units, dy.data.data(), w_.data(), dx->data.data());
        }
    }

    std::vector<ParamView> params() override { return {{w_, gw_}, {b_, gb_}}; }

private:
    int in_size_;
    std::vector<double> w_, b_, gw_, gb_;
};

// 2x2, stride 2; odd edges use partial windows so 1x1 stays 1x1.
class MaxPoolLayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        const int n = x.batch();
        y.resize(out_dims(n));
        argmax_.assign(y.size(), 0);
        const int H = in_.h, W = in_.w, OH = out_.h, OW = out_.w;
        for (int s = 0; s < n; ++s)
            for (int c = 0; c < in_.c; ++c) {
                const double* src = x.sample(s) + static_cast<std::size_t>(c) * H * W;
                const std::size_t obase = (static_cast<std::size_t>(s) * in_.c + c) * OH * OW;
                for (int oy = 0; oy < OH; ++oy)
                    for (int ox = 0; ox < OW; ++ox) {
                        double best = -std::numeric_limits<double>::infinity();
                        int arg = 0;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const int iy = 2 * oy + dy, ix = 2 * ox + dx;
                                if (iy >= H || ix >= W) continue;
                                const double v = src[iy * W + ix];
                                if (v > best) {
                                    best = v;
                                    arg = iy * W + ix;
                                }
                            }
                        y.data[obase + oy * OW + ox] = best;
                        argmax_[obase + oy * OW + ox] = static_cast<std::uint32_t>(arg);
                    }
            }
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->resize(x.shape);
        const int n = x.batch(), HW = in_.h * in_.w, OHW = out_.h * out_.w;
        for (int s = 0; s < n; ++s)
            for (int c = 0; c < in_.c; ++c) {
                const std::size_t obase = (static_cast<std::size_t>(s) * in_.c + c) * OHW;
                double* d = dx->data.data() + (static_cast<std::size_t>(s) * in_.c + c) * HW;
                for (int o = 0; o < OHW; ++o) d[argmax_[obase + o]] += dy.data[obase + o];
            }
    }

    void append_pattern(const Tensor&, std::vector<std::uint32_t>& sig) const override {
        sig.insert(sig.end(), argmax_.begin(), argmax_.end());
    }

private:
    std::vector<std::uint32_t> argmax_;
};

class GlobalAvgPoolLayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        const int n = x.batch(), HW = in_.h * in_.w;
        y.resize(out_dims(n));
        for (int s = 0; s < n; ++s)
            for (int c = 0; c < in_.c; ++c) {
                const double* src = x.sample(s) + static_cast<std::size_t>(c) * HW;
                double acc = 0;
                for (int i = 0; i < HW; ++i) acc += src[i];
                y.sample(s)[c] = acc / HW;
            }
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->resize(x.shape);
        const int n = x.batch(), HW = in_.h * in_.w;
        for (int s = 0; s < n; ++s)
            for (int c = 0; c < in_.c; ++c) {
                const double g = dy.sample(s)[c] / HW;
                double* d = dx->sample(s) + static_cast<std::size_t>(c) * HW;
                for (int i = 0; i < HW; ++i) d[i] = g;
            }
    }
};

class FlattenLayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        y.shape = out_dims(x.batch());
        y.data = x.data;
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->shape = x.shape;
        dx->data = dy.data;
    }
};

class ReLULayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        y.shape = x.shape;
        y.data.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : 0.0;
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->shape = x.shape;
        dx->data.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dx->data[i] = x.data[i] > 0 ? dy.data[i] : 0.0;
    }

    void append_pattern(const Tensor& x, std::vector<std::uint32_t>& sig) const override {
        std::uint32_t word = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x.data[i] > 0) word |= 1u << (i % 32);
            if (i % 32 == 31 || i + 1 == x.size()) {
                sig.push_back(word);
                word = 0;
            }
        }
    }
};

class ELULayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        y.shape = x.shape;
        y.data.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : std::expm1(x.data[i]);
    }

    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->shape = x.shape;
        dx->data.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dx->data[i] = dy.data[i] * (x.data[i] > 0 ? 1.0 : y.data[i] + 1.0);
    }
};

// Inverted dropout: kept units are scaled by 1/(1-rate) during training.
class DropoutLayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode mode, std::mt19937_64& rng) override {
        y.shape = x.shape;
        y.data = x.data;
        active_ = mode == Mode::Train && desc_.rate > 0;
        if (!active_) return;
        const double keep = 1.0 - desc_.rate;
        std::bernoulli_distribution coin(keep);
        scale_.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            scale_[i] = coin(rng) ? 1.0 / keep : 0.0;
            y.data[i] *= scale_[i];
        }
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->shape = x.shape;
        dx->data = dy.data;
        if (active_)
            for (std::size_t i = 0; i < x.size(); ++i) dx->data[i] *= scale_[i];
    }

    std::span<const double> last_mask() const { return scale_; }

private:
    bool active_ = false;
    std::vector<double> scale_;
};

// Per-channel (spatial input) or per-feature (flat input) normalization.
class BatchNormLayer final : public Layer {
public:
    static constexpr double kEps = 1e-5;
    static constexpr double kMomentum = 0.1;

    BatchNormLayer(const LayerDesc& d, const Shape& in, const Shape& out)
        : Layer(d, in, out), gamma_(in.c, 1.0), beta_(in.c, 0.0), ggamma_(in.c, 0.0), gbeta_(in.c, 0.0),
          running_mean_(in.c, 0.0), running_var_(in.c, 1.0), mean_(in.c), inv_std_(in.c) {}

    void forward(const Tensor& x, Tensor& y, Mode mode, std::mt19937_64&) override {
        const int n = x.batch(), C = in_.c, HW = in_.h * in_.w;
        y.shape = x.shape;
        y.data.resize(x.size());
        batch_stats_ = mode == Mode::Train;
        if (batch_stats_) {
            const double m = static_cast<double>(n) * HW;
            for (int c = 0; c < C; ++c) {
                double sum = 0, sq = 0;
                for (int s = 0; s < n; ++s) {
                    const double* v = x.sample(s) + static_cast<std::size_t>(c) * HW;
                    for (int i = 0; i < HW; ++i) sum += v[i];
                }
                const double mu = sum / m;
                for (int s = 0; s < n; ++s) {
                    const double* v = x.sample(s) + static_cast<std::size_t>(c) * HW;
                    for (int i = 0; i < HW; ++i) sq += (v[i] - mu) * (v[i] - mu);
                }
                const double var = sq / m;
                mean_[c] = mu;
                inv_std_[c] = 1.0 / std::sqrt(var + kEps);
                running_mean_[c] = (1 - kMomentum) * running_mean_[c] + kMomentum * mu;
                running_var_[c] = (1 - kMomentum) * running_var_[c] + kMomentum * var;
            }
        } else {
            for (int c = 0; c < C; ++c) {
                mean_[c] = running_mean_[c];
                inv_std_[c] = 1.0 / std::sqrt(running_var_[c] + kEps);
            }
        }
        for (int s = 0; s < n; ++s)
            for (int c = 0; c < C; ++c) {
                const double* v = x.sample(s) + static_cast<std::size_t>(c) * HW;
                double* o = y.sample(s) + static_cast<std::size_t>(c) * HW;
                for (int i = 0; i < HW; ++i) o[i] = gamma_[c] * (v[i] - mean_[c]) * inv_std_[c] + beta_[c];
            }
    }

    void backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor* dx) override {
        const int n = x.batch(), C = in_.c, HW = in_.h * in_.w;
        const double m = static_cast<double>(n) * HW;
        if (dx) {
            dx->shape = x.shape;
            dx->data.resize(x.size());
        }
        for (int c = 0; c < C; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int s = 0; s < n; ++s) {
                const double* v = x.sample(s) + static_cast<std::size_t>(c) * HW;
                const double* g = dy.sample(s) + static_cast<std::size_t>(c) * HW;
                for (int i = 0; i < HW; ++i) {
                    sum_dy += g[i];
                    sum_dy_xhat += g[i] * (v[i] - mean_[c]) * inv_std_[c];
                }
            }
            ggamma_[c] += sum_dy_xhat;
            gbeta_[c] += sum_dy;
            if (!dx) continue;
            const double k = gamma_[c] * inv_std_[c];
            for (int s = 0; s < n; ++s) {
                const double* v = x.sample(s) + static_cast<std::size_t>(c) * HW;
                const double* g = dy.sample(s) + static_cast<std::size_t>(c) * HW;
                double* d = dx->sample(s) + static_cast<std::size_t>(c) * HW;
                for (int i = 0; i < HW; ++i) {
                    if (batch_stats_) {
                        const double xhat = (v[i] - mean_[c]) * inv_std_[c];
                        d[i] = k * (g[i] - sum_dy / m - xhat * sum_dy_xhat / m);
                    } else {
                        d[i] = k * g[i];
                    }
                }
            }
        }
    }

    std::vector<ParamView> params() override { return {{gamma_, ggamma_}, {beta_, gbeta_}}; }
    std::vector<std::span<double>> buffers() override { return {running_mean_, running_var_}; }

private:
    std::vector<double> gamma_, beta_, ggamma_, gbeta_;
    std::vector<double> running_mean_, running_var_;
    std::vector<double> mean_, inv_std_;
    bool batch_stats_ = false;
};

// Row-wise softmax over the flat feature axis.
class SoftmaxLayer final : public Layer {
public:
    using Layer::Layer;

    void forward(const Tensor& x, Tensor& y, Mode, std::mt19937_64&) override {
        y.shape = x.shape;
        y.data.resize(x.size());
        const int n = x.batch();
        const std::size_t k = x.stride();
        for (int s = 0; s < n; ++s) {
            const double* in = x.sample(s);
            double* out = y.sample(s);
            const double mx = *std::max_element(in, in + k);
            double z = 0;
            for (std::size_t i = 0; i < k; ++i) z += (out[i] = std::exp(in[i] - mx));
            for (std::size_t i = 0; i < k; ++i) out[i] /= z;
        }
    }

    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor* dx) override {
        if (!dx) return;
        dx->shape = x.shape;
        dx->data.resize(x.size());
        const int n = x.batch();
        const std::size_t k = x.stride();
        for (int s = 0; s < n; ++s) {
            const double* p = y.sample(s);
            const double* g = dy.sample(s);
            double dot = 0;
            for (std::size_t i = 0; i < k; ++i) dot += g[i] * p[i];
            for (std::size_t i = 0; i < k; ++i) dx->sample(s)[i] = p[i] * (g[i] - dot);
        }
    }
};

inline std::unique_ptr<Layer> make_layer(const LayerDesc& d, const Shape& in, const Shape& out, std::mt19937_64& rng) {
    switch (d.kind) {
    case LayerKind::Conv: return std::make_unique<ConvLayer>(d, in, out, rng);
    case LayerKind::Dense: return std::make_unique<DenseLayer>(d, in, out, rng);
    case LayerKind::MaxPool: return std::make_unique<MaxPoolLayer>(d, in, out);
    case LayerKind::GlobalAvgPool: return std::make_unique<GlobalAvgPoolLayer>(d, in, out);
    case LayerKind::BatchNorm: return std::make_unique<BatchNormLayer>(d, in, out);
    case LayerKind::Dropout: return std::make_unique<DropoutLayer>(d, in, out);
    case LayerKind::ReLU: return std::make_unique<ReLULayer>(d, in, out);
    case LayerKind::ELU: return std::make_unique<ELULayer>(d, in, out);
    case LayerKind::Flatten: return std::make_unique<FlattenLayer>(d, in, out);
    case LayerKind::Softmax: return std::make_unique<SoftmaxLayer>(d, in, out);
    }
    throw ShapeMismatch("unknown layer kind");
}

} // namespace pn::learn

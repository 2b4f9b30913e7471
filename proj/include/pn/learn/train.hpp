#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "pn/error.hpp"
#include "pn/learn/model.hpp"

namespace pn::learn {

struct LabeledSet {
    Tensor x; // (N, C, H, W) or (N, F)
    std::vector<int> y;

    int size() const { return static_cast<int>(y.size()); }
};

struct Dataset {
    LabeledSet train;
    LabeledSet test;
    int classes = 0;

    Shape input_shape() const {
        const auto& s = train.x.shape;
        if (s.size() == 2) return {s[1], 1, 1, true};
        return {s.at(1), s.at(2), s.at(3), false};
    }
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
    int max_epochs = 20;
    std::uint64_t seed = 0;
    bool augment_shift = false;
    bool augment_flip = false;
    int patience = 5;
    double delta = 0.002;
    // Step decay: lr *= lr_decay every lr_step epochs (0 disables).
    int lr_step = 0;
    double lr_decay = 0.1;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be > 0");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
        if (patience < 1) throw ConfigError("patience must be >= 1");
        if (delta < 0) throw ConfigError("delta must be >= 0");
        if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0,1)");
    }
};

struct TrainResult {
    std::vector<double> train_accuracy;
    std::vector<double> test_accuracy;
    std::vector<double> train_loss;
    int epochs_to_converge = 0;
    double final_test_accuracy = 0;
    std::size_t params = 0;

    bool operator==(const TrainResult&) const = default;
};

// First epoch e (1-based) such that no epoch in (e, e+patience] beats
// history[e] by more than delta. Windows running past the end are truncated,
// so the final epoch always qualifies.
inline int epochs_to_converge(std::span<const double> history, int patience = 5, double delta = 0.002) {
    if (history.empty()) throw InvalidInput("empty accuracy history");
    const int n = static_cast<int>(history.size());
    for (int e = 0; e < n; ++e) {
        bool plateau = true;
        for (int j = e + 1; j <= std::min(n - 1, e + patience); ++j)
            if (history[j] > history[e] + delta) {
                plateau = false;
                break;
            }
        if (plateau) return e + 1;
    }
    return n;
}

struct AugmentFlags {
    bool shift = false;
    bool flip = false;
};

// Reflect-pad by 4, take a random crop of the original size, flip
// horizontally with probability 1/2.
inline Tensor augment(const Tensor& batch, AugmentFlags flags, std::uint64_t seed) {
    if (batch.shape.size() != 4) throw InvalidInput("augment expects an image batch (N,C,H,W)");
    if (!flags.shift && !flags.flip) return batch;
    constexpr int pad = 4;
    const int n = batch.dim(0), C = batch.dim(1), H = batch.dim(2), W = batch.dim(3);
    if (H <= pad || W <= pad) throw InvalidInput("augment needs images larger than the padding");
    auto reflect = [](int i, int len) {
        if (i < 0) return -i;
        if (i >= len) return 2 * len - 2 - i;
        return i;
    };
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> offset(0, 2 * pad);
    std::bernoulli_distribution coin(0.5);
    Tensor out(batch.shape);
    for (int s = 0; s < n; ++s) {
        const int ox = flags.shift ? offset(rng) - pad : 0;
        const int oy = flags.shift ? offset(rng) - pad : 0;
        const bool flip = flags.flip && coin(rng);
        const double* src = batch.sample(s);
        double* dst = out.sample(s);
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const int xx = flip ? W - 1 - x : x;
                    const int sy = reflect(y + oy, H), sx = reflect(xx + ox, W);
                    dst[(static_cast<std::size_t>(c) * H + y) * W + x] = src[(static_cast<std::size_t>(c) * H + sy) * W + sx];
                }
    }
    return out;
}

inline Tensor gather(const Tensor& x, std::span<const int> idx) {
    std::vector<int> shape = x.shape;
    shape[0] = static_cast<int>(idx.size());
    Tensor out(shape);
    const std::size_t st = x.stride();
    for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(x.sample(idx[i]), st, out.sample(static_cast<int>(i)));
    return out;
}

inline int argmax_row(const Tensor& p, int s) {
    const double* r = p.sample(s);
    return static_cast<int>(std::max_element(r, r + p.stride()) - r);
}

inline double evaluate(Model& model, const LabeledSet& set, int batch_size = 128) {
    if (set.size() == 0) return 0.0;
    int correct = 0;
    std::vector<int> idx;
    for (int start = 0; start < set.size(); start += batch_size) {
        const int end = std::min(set.size(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor& p = model.forward(gather(set.x, idx), Mode::Inference);
        for (int i = 0; i < end - start; ++i) correct += argmax_row(p, i) == set.y[start + i];
    }
    return static_cast<double>(correct) / set.size();
}

// Minibatch SGD with momentum on cross-entropy. The model is rebuilt from
// `spec` with cfg.seed so results depend only on (spec, data, cfg).
inline TrainResult train(const ModelSpec& spec, const Dataset& data, const TrainConfig& cfg, Model* trained = nullptr) {
    cfg.validate();
    if (data.train.size() == 0 || data.test.size() == 0) throw InvalidInput("train and test splits must be non-empty");
    Model model(spec, data.input_shape(), cfg.seed);
    model.seed_dropout(cfg.seed * 0x2545F4914F6CDD1DULL + 1);
    auto params = model.params();
    std::vector<std::vector<double>> velocity;
    for (auto& p : params) velocity.emplace_back(p.value.size(), 0.0);

    TrainResult r;
    r.params = model.param_count();
    std::mt19937_64 order_rng(cfg.seed + 17);
    std::vector<int> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);
    const bool image = data.train.x.shape.size() == 4;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double lr = cfg.learning_rate;
        if (cfg.lr_step > 0) lr *= std::pow(cfg.lr_decay, (epoch - 1) / cfg.lr_step);
        std::shuffle(order.begin(), order.end(), order_rng);
        int correct = 0;
        double loss_sum = 0;
        int batch_no = 0;
        for (int start = 0; start < data.train.size(); start += cfg.batch_size, ++batch_no) {
            const int end = std::min(data.train.size(), start + cfg.batch_size);
            std::span<const int> idx(order.data() + start, end - start);
            Tensor x = gather(data.train.x, idx);
            if (image && (cfg.augment_shift || cfg.augment_flip))
                x = augment(x, {cfg.augment_shift, cfg.augment_flip},
                            cfg.seed ^ (static_cast<std::uint64_t>(epoch) << 32) ^ static_cast<std::uint64_t>(batch_no));
            std::vector<int> labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.train.y[idx[i]];

            const Tensor& p = model.forward(x, Mode::Train);
            const double loss = model.loss(Loss::CrossEntropy, labels);
            if (!std::isfinite(loss)) throw Divergence(epoch, "non-finite loss");
            loss_sum += loss * static_cast<double>(labels.size());
            for (std::size_t i = 0; i < labels.size(); ++i) correct += argmax_row(p, static_cast<int>(i)) == labels[i];

            model.zero_grad();
            model.backward_loss(Loss::CrossEntropy, labels);
            for (std::size_t k = 0; k < params.size(); ++k) {
                auto& v = velocity[k];
                auto w = params[k].value;
                auto g = params[k].grad;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    v[i] = cfg.momentum * v[i] - lr * g[i];
                    w[i] += v[i];
                }
            }
        }
        r.train_loss.push_back(loss_sum / data.train.size());
        r.train_accuracy.push_back(static_cast<double>(correct) / data.train.size());
        r.test_accuracy.push_back(evaluate(model, data.test));
    }
    for (auto& p : params)
        for (double w : p.value)
            if (!std::isfinite(w)) throw Divergence(cfg.max_epochs, "non-finite weight");
    r.epochs_to_converge = epochs_to_converge(r.test_accuracy, cfg.patience, cfg.delta);
    r.final_test_accuracy = r.test_accuracy.back();
    if (trained) *trained = std::move(model);
    return r;
}

} // namespace pn::learn

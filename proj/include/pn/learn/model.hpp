#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pn/learn/layers.hpp"
#include "pn/learn/spec.hpp"
#include "pn/learn/tensor.hpp"

namespace pn::learn {

enum class Loss { CrossEntropy, SquaredError };

// A built network. Owns its layers and the activations of the last forward
// pass, so one instance serves one trainer at a time.
class Model {
public:
    Model(ModelSpec spec, Shape input, std::uint64_t seed) : spec_(std::move(spec)), input_(input) {
        shapes_ = infer_shapes(spec_, input_);
        std::mt19937_64 init(seed);
        for (std::size_t i = 0; i < spec_.layers.size(); ++i)
            layers_.push_back(make_layer(spec_.layers[i], shapes_[i], shapes_[i + 1], init));
        acts_.resize(layers_.size() + 1);
        grads_.resize(layers_.size() + 1);
        dropout_rng_.seed(seed ^ 0x9e3779b97f4a7c15ULL);
    }

    const ModelSpec& spec() const { return spec_; }
    const Shape& input_shape() const { return input_; }
    const std::vector<Shape>& shapes() const { return shapes_; }
    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    bool ends_with_softmax() const {
        return !spec_.layers.empty() && spec_.layers.back().kind == LayerKind::Softmax;
    }

    void seed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

    const Tensor& forward(const Tensor& x, Mode mode) {
        check_input(x);
        acts_[0] = x;
        for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->forward(acts_[i], acts_[i + 1], mode, dropout_rng_);
        return acts_.back();
    }

    const Tensor& output() const { return acts_.back(); }

    // Backpropagates dLoss/dOutput through every layer.
    void backward(const Tensor& grad_output) { backward_from(layers_.size(), grad_output); }

    double loss(Loss kind, std::span<const int> labels, const Tensor* targets = nullptr) const {
        const Tensor& y = acts_.back();
        const int n = y.batch();
        const std::size_t k = y.stride();
        double total = 0;
        if (kind == Loss::CrossEntropy) {
            for (int s = 0; s < n; ++s) total -= std::log(y.sample(s)[labels[s]]);
        } else {
            for (int s = 0; s < n; ++s)
                for (std::size_t i = 0; i < k; ++i) {
                    const double d = y.sample(s)[i] - targets->sample(s)[i];
                    total += 0.5 * d * d;
                }
        }
        return total / n;
    }

    // Backward pass for the mean loss over the batch of the last forward.
    void backward_loss(Loss kind, std::span<const int> labels, const Tensor* targets = nullptr) {
        const Tensor& y = acts_.back();
        const int n = y.batch();
        const std::size_t k = y.stride();
        Tensor g(y.shape);
        if (kind == Loss::CrossEntropy && ends_with_softmax()) {
            // softmax + cross-entropy: d/dlogits = (p - onehot) / n
            for (int s = 0; s < n; ++s)
                for (std::size_t i = 0; i < k; ++i)
                    g.sample(s)[i] = (y.sample(s)[i] - (static_cast<int>(i) == labels[s] ? 1.0 : 0.0)) / n;
            backward_from(layers_.size() - 1, g);
            return;
        }
        for (int s = 0; s < n; ++s)
            for (std::size_t i = 0; i < k; ++i) {
                if (kind == Loss::CrossEntropy)
                    g.sample(s)[i] = static_cast<int>(i) == labels[s] ? -1.0 / (y.sample(s)[i] * n) : 0.0;
                else
                    g.sample(s)[i] = (y.sample(s)[i] - targets->sample(s)[i]) / n;
            }
        backward(g);
    }

    std::vector<ParamView> params() {
        std::vector<ParamView> out;
        for (auto& l : layers_)
            for (auto& p : l->params()) out.push_back(p);
        return out;
    }

    // Parameters grouped by owning layer index.
    std::vector<std::pair<std::size_t, ParamView>> params_by_layer() {
        std::vector<std::pair<std::size_t, ParamView>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            for (auto& p : layers_[i]->params()) out.emplace_back(i, p);
        return out;
    }

    std::vector<std::span<double>> buffers() {
        std::vector<std::span<double>> out;
        for (auto& l : layers_)
            for (auto& b : l->buffers()) out.push_back(b);
        return out;
    }

    void zero_grad() {
        for (auto& p : params()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto& p : params()) n += p.value.size();
        return n;
    }

    std::vector<std::uint32_t> activation_pattern() const {
        std::vector<std::uint32_t> sig;
        for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->append_pattern(acts_[i], sig);
        return sig;
    }

private:
    void check_input(const Tensor& x) const {
        const bool ok = input_.flat ? (x.shape.size() == 2 && x.shape[1] == input_.c)
                                    : (x.shape.size() == 4 && x.shape[1] == input_.c && x.shape[2] == input_.h &&
                                       x.shape[3] == input_.w);
        if (!ok || x.batch() < 1)
            throw ShapeMismatch("input " + shape_string(x.shape) + " does not match model input " + to_string(input_));
    }

    // Propagates `g` (gradient w.r.t. the output of layer end-1) down to layer 0.
    void backward_from(std::size_t end, const Tensor& g) {
        if (end == 0) return;
        grads_[end] = g;
        for (std::size_t i = end; i-- > 0;)
            layers_[i]->backward(acts_[i], acts_[i + 1], grads_[i + 1], i == 0 ? nullptr : &grads_[i]);
    }

    ModelSpec spec_;
    Shape input_;
    std::vector<Shape> shapes_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<Tensor> acts_, grads_;
    std::mt19937_64 dropout_rng_;
};

} // namespace pn::learn

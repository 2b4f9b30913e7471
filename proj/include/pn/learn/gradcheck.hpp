#pragma once

// Finite-difference check of backpropagated gradients. Runs in inference
// mode, so dropout is off and batch-norm uses its running statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "pn/learn/model.hpp"

namespace pn::learn {

struct GradCheckOptions {
    double h = 1e-5;
    int max_weights = 2000;
    std::uint64_t seed = 0;
    Loss loss = Loss::CrossEntropy;
    // Denominator floor for the relative error.
    double floor = 1e-6;
    // Called between backward and comparison; used for fault injection.
    std::function<void(Model&)> after_backward;
};

struct GradCheckReport {
    double max_rel_error = 0;
    int checked = 0;
    // Weights whose +-h probe flipped a ReLU gate or pool winner.
    int skipped = 0;
};

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

inline GradCheckReport grad_check(Model& model, const Tensor& x, std::span<const int> labels,
                                  const Tensor* targets = nullptr, const GradCheckOptions& opt = {}) {
    auto loss_at = [&] {
        model.forward(x, Mode::Inference);
        return model.loss(opt.loss, labels, targets);
    };

    model.zero_grad();
    loss_at();
    const auto pattern = model.activation_pattern();
    model.backward_loss(opt.loss, labels, targets);
    if (opt.after_backward) opt.after_backward(model);

    auto params = model.params();
    std::vector<std::vector<double>> analytic;
    for (auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

    // Stratified sample: an equal share per parameter tensor, leftovers
    // redistributed to larger tensors.
    std::mt19937_64 rng(opt.seed);
    std::vector<std::vector<std::size_t>> picks(params.size());
    std::size_t total = 0;
    for (auto& p : params) total += p.value.size();
    const std::size_t budget = std::min<std::size_t>(total, static_cast<std::size_t>(std::max(opt.max_weights, 0)));
    std::vector<std::size_t> quota(params.size(), 0);
    std::size_t assigned = 0;
    while (assigned < budget) {
        bool progressed = false;
        for (std::size_t k = 0; k < params.size() && assigned < budget; ++k)
            if (quota[k] < params[k].value.size()) {
                ++quota[k];
                ++assigned;
                progressed = true;
            }
        if (!progressed) break;
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<std::size_t> idx(params[k].value.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(quota[k]);
        std::sort(idx.begin(), idx.end());
        picks[k] = std::move(idx);
    }

    GradCheckReport rep;
    for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i : picks[k]) {
            double& w = params[k].value[i];
            const double w0 = w;
            w = w0 + opt.h;
            const double lp = loss_at();
            const bool same_p = model.activation_pattern() == pattern;
            w = w0 - opt.h;
            const double lm = loss_at();
            const bool same_m = model.activation_pattern() == pattern;
            w = w0;
            if (!same_p || !same_m) {
                ++rep.skipped;
                continue;
            }
            const double numeric = (lp - lm) / (2 * opt.h);
            rep.max_rel_error = std::max(rep.max_rel_error, relative_error(analytic[k][i], numeric, opt.floor));
            ++rep.checked;
        }
    loss_at();
    return rep;
}

} // namespace pn::learn

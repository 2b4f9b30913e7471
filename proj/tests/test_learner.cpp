#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "pn/learn/checkpoint.hpp"
#include "pn/learn/gradcheck.hpp"
#include "pn/learn/train.hpp"
#include "pn/learn/zoo.hpp"

using namespace pn::learn;

namespace {

// Hand oracle for the zoo counts: 3x3 'same' convs, ceil-mode 2x2 pools.
std::size_t conv_p(std::size_t cin, std::size_t cout) { return 9 * cin * cout + cout; }
std::size_t fc_p(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t ceil_half(std::size_t v) { return (v + 1) / 2; }

std::size_t image_oracle(const std::string& id, std::size_t h, std::size_t w) {
    const std::size_t trunk = conv_p(3, 32) + conv_p(32, 64) + conv_p(64, 128) + 3 * conv_p(128, 128);
    const std::size_t head_conv = conv_p(128, 10);
    const std::size_t mlp128 = fc_p(128, 128) + fc_p(128, 128) + fc_p(128, 10);
    if (id == "image-A") return trunk + 2 * conv_p(128, 128) + head_conv;
    if (id == "image-B") return trunk + 2 * conv_p(128, 128) + mlp128;
    if (id == "image-C") return trunk + 5 * conv_p(128, 128) + head_conv;
    if (id == "image-D") return trunk + 5 * conv_p(128, 128) + mlp128;
    if (id == "image-E") return trunk + 2 * conv_p(128, 128) + fc_p(128, 256) + fc_p(256, 256) + fc_p(256, 10);
    if (id == "image-F") return trunk + fc_p(128 * h * w, 128) + fc_p(128, 256) + fc_p(256, 256) + fc_p(256, 10);
    return 0;
}

std::size_t audio_oracle(const std::string& id, std::size_t h, std::size_t w) {
    const std::size_t stem = conv_p(1, 32) + 2 * 32;
    auto loops = [&](int n) {
        std::size_t hh = h, ww = w;
        for (int i = 0; i < n; ++i) hh = ceil_half(hh), ww = ceil_half(ww);
        return std::pair{n * conv_p(32, 32), 32 * hh * ww};
    };
    if (id == "audio-A") {
        auto [c, flat] = loops(3);
        return stem + c + fc_p(flat, 12);
    }
    if (id == "audio-B") {
        auto [c, flat] = loops(4);
        return stem + c + fc_p(flat, 128) + fc_p(128, 12);
    }
    if (id == "audio-C") {
        auto [c, flat] = loops(3);
        return stem + c + fc_p(flat, 64) + fc_p(64, 128) + fc_p(128, 12);
    }
    if (id == "audio-D") {
        auto [c, flat] = loops(3);
        return stem + c + fc_p(flat, 128) + fc_p(128, 12);
    }
    if (id == "audio-E") {
        auto [c, flat] = loops(3);
        return stem + c + fc_p(flat, 128) + fc_p(128, 128) + fc_p(128, 12);
    }
    if (id == "audio-F") {
        auto [c, flat] = loops(2);
        return stem + c + fc_p(flat, 128) + fc_p(128, 12);
    }
    return 0;
}

Tensor random_tensor(std::vector<int> dims, std::uint64_t seed, double scale = 1.0) {
    Tensor t(std::move(dims));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, scale);
    for (double& v : t.data) v = n(rng);
    return t;
}

Tensor input_for(const Shape& s, int batch, std::uint64_t seed) {
    return random_tensor(s.flat ? std::vector<int>{batch, s.c} : std::vector<int>{batch, s.c, s.h, s.w}, seed);
}

// Two Gaussian blobs far apart in 2-D.
Dataset blobs(int per_class, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 0.5);
    auto make = [&](int count) {
        LabeledSet s;
        s.x = Tensor({2 * count, 2});
        for (int i = 0; i < 2 * count; ++i) {
            const int label = i % 2;
            const double cx = label ? 2.0 : -2.0;
            s.x.sample(i)[0] = cx + n(rng);
            s.x.sample(i)[1] = -cx + n(rng);
            s.y.push_back(label);
        }
        return s;
    };
    Dataset d;
    d.train = make(per_class);
    d.test = make(per_class / 2);
    d.classes = 2;
    return d;
}

} // namespace

TEST(ParamCount, SmallExamples) {
    EXPECT_EQ(count_params(parse_layers("fc:10"), {10, 1, 1, true}), 110u);
    EXPECT_EQ(count_params(parse_layers("conv:32:3,gap"), {3, 32, 32, false}), 896u);
    EXPECT_EQ(count_params(parse_layers("conv:4:3,bn,gap"), {2, 5, 5, false}), conv_p(2, 4) + 8);
    EXPECT_EQ(count_params(parse_layers("conv:8:5,gap"), {3, 6, 6, false}), 25u * 3 * 8 + 8);
}

TEST(ParamCount, ZooMatchesHandOracle) {
    for (const auto& id : zoo::image_ids())
        for (auto [h, w] : {std::pair{32, 32}, std::pair{8, 8}}) {
            const auto n = count_params(zoo::get(id), {3, h, w, false});
            EXPECT_EQ(n, image_oracle(id, h, w)) << id << " " << h;
            if (h == 8) {
                Model m(zoo::get(id), {3, h, w, false}, 1);
                EXPECT_EQ(m.param_count(), n) << id;
            }
        }
    for (const auto& id : zoo::audio_ids())
        for (auto [h, w] : {std::pair{96, 128}, std::pair{96, 64}, std::pair{8, 8}})
            EXPECT_EQ(count_params(zoo::get(id), {1, h, w, false}), audio_oracle(id, h, w)) << id << " " << w;
}

TEST(ParamCount, PublishedTotalsAreReported) {
    for (const auto& p : zoo::published_counts()) {
        const bool audio = zoo::is_audio(p.id);
        const Shape in = audio ? Shape{1, 96, 128, false} : Shape{3, 32, 32, false};
        const auto ours = count_params(zoo::get(p.id), in);
        std::printf("  %-8s ours %zu published %zu\n", p.id.c_str(), ours, p.params);
        EXPECT_GT(ours, 0u);
    }
    EXPECT_EQ(count_params(zoo::get("image-F"), {3, 8, 8, false}), *zoo::published_count("image-F"));
}

TEST(ParamCount, ShapeErrors) {
    EXPECT_THROW(count_params(parse_layers("fc:10"), {3, 8, 8, false}), pn::ShapeMismatch);
    EXPECT_THROW(count_params(parse_layers("conv:10"), {3, 8, 8, false}), pn::ShapeMismatch);
    EXPECT_THROW(count_params(parse_layers("flatten,conv:10,gap"), {3, 8, 8, false}), pn::ShapeMismatch);
    auto s = parse_layers("flatten,fc:7");
    s.classes = 10;
    EXPECT_THROW(count_params(s, {3, 8, 8, false}), pn::ShapeMismatch);
    EXPECT_THROW(parse_layers("conv:x"), pn::ConfigError);
    EXPECT_THROW(parse_layers("wobble"), pn::ConfigError);
    EXPECT_FALSE(zoo::find("image-Z").has_value());
    EXPECT_THROW(zoo::get("nope"), pn::ConfigError);
}

TEST(Forward, RowsAreProbabilities) {
    std::vector<std::pair<ModelSpec, Shape>> cases;
    for (const auto& id : zoo::desk_ids()) cases.push_back({zoo::get(id), {3, 8, 8, false}});
    for (const auto& id : zoo::audio_ids()) cases.push_back({zoo::get(id), {1, 16, 16, false}});
    cases.push_back({zoo::get("image-A"), {3, 8, 8, false}});
    for (auto& [spec, shape] : cases) {
        Model m(spec, shape, 2);
        const Tensor& p = m.forward(input_for(shape, 4, 3), Mode::Inference);
        ASSERT_EQ(p.dim(0), 4);
        for (int s = 0; s < 4; ++s) {
            double sum = 0;
            for (std::size_t i = 0; i < p.stride(); ++i) {
                EXPECT_GE(p.sample(s)[i], 0.0);
                sum += p.sample(s)[i];
            }
            EXPECT_NEAR(sum, 1.0, 1e-9) << spec.id;
        }
        std::vector<int> labels = {0, 1, 2, 3};
        EXPECT_GE(m.loss(Loss::CrossEntropy, labels), 0.0);
    }
}

TEST(Forward, ZeroFinalLayerGivesUniform) {
    Model m(zoo::get("desk-small"), {3, 8, 8, false}, 4);
    auto params = m.params_by_layer();
    const std::size_t last = params.back().first;
    for (auto& [layer, p] : params)
        if (layer == last) std::fill(p.value.begin(), p.value.end(), 0.0);
    const Tensor& out = m.forward(input_for({3, 8, 8, false}, 3, 5), Mode::Inference);
    for (double v : out.data) EXPECT_NEAR(v, 0.1, 1e-15);
}

TEST(Forward, DeterministicForSeed) {
    const auto spec = zoo::get("desk-large");
    Model a(spec, {3, 8, 8, false}, 9), b(spec, {3, 8, 8, false}, 9), c(spec, {3, 8, 8, false}, 10);
    const auto x = input_for({3, 8, 8, false}, 2, 1);
    const Tensor pa = a.forward(x, Mode::Inference);
    EXPECT_EQ(pa, b.forward(x, Mode::Inference));
    EXPECT_NE(pa, c.forward(x, Mode::Inference));
    EXPECT_EQ(pa, a.forward(x, Mode::Inference));
}

TEST(Forward, RejectsWrongInputShape) {
    Model m(zoo::get("desk-small"), {3, 8, 8, false}, 1);
    EXPECT_THROW(m.forward(Tensor({1, 3, 9, 8}), Mode::Inference), pn::ShapeMismatch);
    EXPECT_THROW(m.forward(Tensor({1, 192}), Mode::Inference), pn::ShapeMismatch);
}

TEST(Layers, DropoutExpectationMatchesKeepCompensation) {
    for (double rate : {0.5, 0.6}) {
        Model m(parse_layers("dropout:" + std::to_string(rate)), {10, 1, 1, true}, 7);
        Tensor ones({1, 10});
        std::fill(ones.data.begin(), ones.data.end(), 1.0);
        double sum = 0;
        const int masks = 10000;
        for (int i = 0; i < masks; ++i)
            for (double v : m.forward(ones, Mode::Train).data) sum += v;
        EXPECT_NEAR(sum / (masks * 10.0), 1.0, 0.02) << rate;
        EXPECT_EQ(m.forward(ones, Mode::Inference), ones);
    }
}

TEST(Layers, BatchNormModes) {
    Model m(parse_layers("bn"), {10, 1, 1, true}, 1);
    Tensor x = random_tensor({64, 10}, 3, 4.0);
    for (double& v : x.data) v += 7.0;
    const Tensor y = m.forward(x, Mode::Train);
    for (int f = 0; f < 10; ++f) {
        double mean = 0, var = 0;
        for (int s = 0; s < 64; ++s) mean += y.sample(s)[f];
        mean /= 64;
        for (int s = 0; s < 64; ++s) var += (y.sample(s)[f] - mean) * (y.sample(s)[f] - mean);
        EXPECT_NEAR(mean, 0.0, 1e-9);
        EXPECT_NEAR(var / 64, 1.0, 1e-3);
    }
    // Inference uses running statistics, so a single sample is well defined.
    Tensor one({1, 10});
    const Tensor z = m.forward(one, Mode::Inference);
    EXPECT_TRUE(z.all_finite());
}

TEST(Layers, ActivationsAndPooling) {
    Tensor x({1, 1, 3, 3});
    for (int i = 0; i < 9; ++i) x.data[i] = i - 4.0;
    auto rs = parse_layers("relu,flatten");
    rs.classes = 9;
    Model relu_m(rs, {1, 3, 3, false}, 0);
    const Tensor ry = relu_m.forward(x, Mode::Inference);
    for (int i = 0; i < 9; ++i) EXPECT_EQ(ry.data[i], std::max(0.0, i - 4.0));

    auto es = parse_layers("elu,flatten");
    es.classes = 9;
    Model elu_m(es, {1, 3, 3, false}, 0);
    const Tensor ey = elu_m.forward(x, Mode::Inference);
    for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(ey.data[i], i < 4 ? std::expm1(i - 4.0) : i - 4.0);

    // ceil-mode pooling keeps the odd edge: 3x3 -> 2x2
    auto ps = parse_layers("maxpool,flatten");
    ps.classes = 4;
    Model pool_m(ps, {1, 3, 3, false}, 0);
    const Tensor py = pool_m.forward(x, Mode::Inference);
    EXPECT_EQ(py.data, (std::vector<double>{0, 1, 3, 4}));
}

TEST(Train, SeparableBlobs) {
    const auto data = blobs(100, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 50;
    cfg.batch_size = 16;
    const auto r = train(parse_layers("fc:16,relu,fc:2,softmax"), data, cfg);
    EXPECT_EQ(r.train_accuracy.size(), 50u);
    EXPECT_GE(*std::max_element(r.train_accuracy.begin(), r.train_accuracy.end()), 0.99);
    EXPECT_GE(r.final_test_accuracy, 0.99);
    EXPECT_EQ(r.params, fc_p(2, 16) + fc_p(16, 2));
    for (double a : r.test_accuracy) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
    }
    EXPECT_LE(r.epochs_to_converge, 50);
}

TEST(Train, HugeLearningRateDiverges) {
    const auto data = blobs(50, 2);
    TrainConfig cfg;
    cfg.learning_rate = 1e3;
    cfg.max_epochs = 20;
    try {
        train(parse_layers("fc:16,relu,fc:2,softmax"), data, cfg);
        FAIL() << "expected divergence";
    } catch (const pn::Divergence& e) {
        EXPECT_GE(e.epoch(), 1);
        EXPECT_LE(e.epoch(), 20);
    }
}

TEST(Train, SameSeedSameResult) {
    const auto data = blobs(40, 3);
    TrainConfig cfg;
    cfg.max_epochs = 6;
    cfg.seed = 11;
    const auto spec = parse_layers("fc:8,relu,dropout:0.5,fc:2,softmax");
    const auto a = train(spec, data, cfg), b = train(spec, data, cfg);
    EXPECT_EQ(a, b);
    cfg.seed = 12;
    EXPECT_NE(train(spec, data, cfg).train_loss, a.train_loss);
}

TEST(Train, ImageModelWithAugmentationIsDeterministic) {
    Dataset d;
    d.classes = 10;
    d.train.x = random_tensor({20, 3, 8, 8}, 1);
    d.test.x = random_tensor({10, 3, 8, 8}, 2);
    for (int i = 0; i < 20; ++i) d.train.y.push_back(i % 10);
    for (int i = 0; i < 10; ++i) d.test.y.push_back(i);
    TrainConfig cfg;
    cfg.max_epochs = 2;
    cfg.augment_shift = cfg.augment_flip = true;
    const auto a = train(zoo::get("desk-small"), d, cfg), b = train(zoo::get("desk-small"), d, cfg);
    EXPECT_EQ(a, b);
}

TEST(Train, ConfigValidation) {
    const auto data = blobs(10, 1);
    const auto spec = parse_layers("fc:2,softmax");
    TrainConfig cfg;
    cfg.learning_rate = 0;
    EXPECT_THROW(train(spec, data, cfg), pn::ConfigError);
    cfg = {};
    cfg.batch_size = 0;
    EXPECT_THROW(train(spec, data, cfg), pn::ConfigError);
    cfg = {};
    cfg.patience = 0;
    EXPECT_THROW(train(spec, data, cfg), pn::ConfigError);
    cfg = {};
    cfg.delta = -1;
    EXPECT_THROW(train(spec, data, cfg), pn::ConfigError);
    Dataset empty = data;
    empty.test = {};
    empty.test.x = Tensor({0, 2});
    EXPECT_THROW(train(spec, empty, TrainConfig{}), pn::InvalidInput);
}

TEST(Convergence, Examples) {
    const std::vector<double> plateau = {0.2, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9};
    EXPECT_EQ(epochs_to_converge(plateau, 5, 0.002), 2);
    std::vector<double> rising;
    for (int i = 0; i < 12; ++i) rising.push_back(0.05 * i);
    EXPECT_EQ(epochs_to_converge(rising), 12);
    EXPECT_EQ(epochs_to_converge(std::vector<double>(9, 0.4)), 1);
    // within delta counts as no improvement
    EXPECT_EQ(epochs_to_converge(std::vector<double>{0.5, 0.501, 0.502, 0.5015}, 5, 0.002), 1);
    EXPECT_THROW(epochs_to_converge(std::vector<double>{}), pn::InvalidInput);
}

TEST(GradCheck, ToyConvNet) {
    Model m(parse_layers("conv:4:3,relu,conv:4:3,relu,flatten,fc:10,softmax"), {3, 8, 8, false}, 3);
    const auto x = input_for({3, 8, 8, false}, 2, 4);
    const std::vector<int> labels = {1, 7};
    const auto r = grad_check(m, x, labels);
    EXPECT_LT(r.max_rel_error, 1e-4);
    EXPECT_GT(r.checked, 1000);
}

TEST(GradCheck, LinearSquaredLoss) {
    auto spec = parse_layers("fc:3");
    Model m(spec, {5, 1, 1, true}, 1);
    const auto x = input_for({5, 1, 1, true}, 4, 2);
    const auto targets = random_tensor({4, 3}, 3);
    GradCheckOptions opt;
    opt.loss = Loss::SquaredError;
    const std::vector<int> none(4, 0);
    const auto r = grad_check(m, x, none, &targets, opt);
    EXPECT_LT(r.max_rel_error, 1e-8);
    EXPECT_EQ(r.checked, 18);
}

TEST(GradCheck, SignFlipIsCaught) {
    Model m(parse_layers("conv:4:3,relu,conv:4:3,relu,flatten,fc:10,softmax"), {3, 8, 8, false}, 3);
    const auto x = input_for({3, 8, 8, false}, 2, 4);
    const std::vector<int> labels = {1, 7};
    GradCheckOptions opt;
    opt.after_backward = [](Model& model) {
        for (auto& [layer, p] : model.params_by_layer())
            if (layer == 2)
                for (double& g : p.grad) g = -g;
    };
    EXPECT_GT(grad_check(m, x, labels, nullptr, opt).max_rel_error, 0.1);
}

TEST(GradCheck, AudioAndDeskZooAt8x8) {
    for (const auto& id : zoo::audio_ids()) {
        Model m(zoo::get(id), {1, 8, 8, false}, 3);
        const auto x = input_for({1, 8, 8, false}, 2, 5);
        m.forward(x, Mode::Train); // populate batch-norm running statistics
        const std::vector<int> labels = {1, 3};
        GradCheckOptions opt;
        opt.max_weights = 200;
        const auto r = grad_check(m, x, labels, nullptr, opt);
        EXPECT_LT(r.max_rel_error, 1e-4) << id;
        EXPECT_GT(r.checked, 0) << id;
    }
    for (const auto& id : zoo::desk_ids()) {
        Model m(zoo::get(id), {3, 8, 8, false}, 3);
        const auto x = input_for({3, 8, 8, false}, 2, 6);
        const std::vector<int> labels = {2, 9};
        GradCheckOptions opt;
        opt.max_weights = 300;
        EXPECT_LT(grad_check(m, x, labels, nullptr, opt).max_rel_error, 1e-4) << id;
    }
}

TEST(Augment, FlagsOffIsIdentity) {
    const auto x = random_tensor({3, 3, 8, 8}, 1);
    EXPECT_EQ(augment(x, {}, 5), x);
}

TEST(Augment, FlipMirrorsExactly) {
    Tensor x({16, 1, 6, 6});
    for (int s = 0; s < 16; ++s)
        for (int i = 0; i < 36; ++i) x.sample(s)[i] = s * 100 + i; // asymmetric in every row
    const auto y = augment(x, {false, true}, 42);
    int flipped = 0;
    for (int s = 0; s < 16; ++s) {
        bool same = true, mirror = true;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) {
                const double v = y.sample(s)[r * 6 + c];
                same &= v == x.sample(s)[r * 6 + c];
                mirror &= v == x.sample(s)[r * 6 + 5 - c];
            }
        EXPECT_TRUE(same != mirror) << s;
        flipped += mirror;
    }
    EXPECT_GT(flipped, 0);
    EXPECT_LT(flipped, 16);
}

TEST(Augment, ShiftIsSeededReflectCrop) {
    const auto x = random_tensor({4, 3, 8, 8}, 2);
    const auto a = augment(x, {true, true}, 9), b = augment(x, {true, true}, 9), c = augment(x, {true, true}, 10);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    // every output pixel comes from the same sample and channel
    for (int s = 0; s < 4; ++s)
        for (int ch = 0; ch < 3; ++ch)
            for (int i = 0; i < 64; ++i) {
                const double v = a.sample(s)[ch * 64 + i];
                EXPECT_NE(std::find(x.sample(s) + ch * 64, x.sample(s) + ch * 64 + 64, v), x.sample(s) + ch * 64 + 64);
            }
    EXPECT_THROW(augment(Tensor({2, 5}), {true, false}, 1), pn::InvalidInput);
    EXPECT_THROW(augment(Tensor({1, 1, 4, 4}), {true, false}, 1), pn::InvalidInput);
}

TEST(Checkpoint, RoundTrip) {
    Model m(zoo::get("desk-large"), {3, 8, 8, false}, 5);
    const auto x = input_for({3, 8, 8, false}, 2, 7);
    m.forward(x, Mode::Train);
    const auto bytes = encode_checkpoint(m);
    Model back = decode_checkpoint(bytes);
    EXPECT_EQ(back.spec().id, "desk-large");
    EXPECT_EQ(back.spec().layers, m.spec().layers);
    EXPECT_EQ(back.input_shape(), m.input_shape());
    EXPECT_EQ(encode_checkpoint(back), bytes);
    const Tensor p0 = m.forward(x, Mode::Inference);
    const Tensor p1 = back.forward(x, Mode::Inference);
    for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(p0.data[i], p1.data[i], 1e-5);

    const auto path = std::filesystem::temp_directory_path() / "pn_ckpt.bin";
    save_checkpoint(path, m);
    Model loaded = load_checkpoint(path);
    EXPECT_EQ(encode_checkpoint(loaded), bytes);
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFiles) {
    Model m(zoo::get("desk-small"), {3, 8, 8, false}, 5);
    const auto bytes = encode_checkpoint(m);
    auto cut = bytes;
    cut.resize(bytes.size() - 4);
    EXPECT_THROW(decode_checkpoint(cut), pn::TruncatedFile);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(magic), pn::UnsupportedFormat);
    auto version = bytes;
    version[4] = 99;
    EXPECT_THROW(decode_checkpoint(version), pn::UnsupportedFormat);
    auto extra = bytes;
    extra.push_back(0);
    EXPECT_THROW(decode_checkpoint(extra), pn::UnsupportedFormat);
    EXPECT_THROW(load_checkpoint("/nonexistent/pn.ckpt"), pn::Error);
}

// pn: command-line front end for the codec, bit-budget, Helmholtz, learner
// and sweep modules.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage, 3 config, 4 every sweep
// cell failed.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "image_io.hpp"
#include "json.hpp"
#include "pn/audio_codec.hpp"
#include "pn/bit_budget.hpp"
#include "pn/data.hpp"
#include "pn/helmholtz.hpp"
#include "pn/learn/checkpoint.hpp"
#include "pn/learn/train.hpp"
#include "pn/learn/zoo.hpp"
#include "pn/records.hpp"
#include "pn/report.hpp"
#include "pn/sweep.hpp"

namespace {

using json = nlohmann::ordered_json;
using pn::sweep::fmt;

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kConfig = 3, kAllFailed = 4 };

struct Globals {
    bool json = false;
    std::optional<std::uint64_t> seed;
};

void emit(const Globals& g, const json& j, const std::string& text) {
    if (g.json) std::cout << j.dump(2) << "\n";
    else std::cout << text;
}

// ------------------------------------------------------------------- bits

struct BitsArgs {
    std::vector<double> quality;
    std::optional<double> target;
    std::string model = "published";
    int baseline = 16;
    std::string format = "table";
};

int cmd_bits(const BitsArgs& a, const Globals& g) {
    pn::budget::BitBudgetModel m = a.model == "annexk" ? pn::budget::BitBudgetModel::recomputed() : pn::budget::BitBudgetModel::published();
    m.baseline = a.baseline;
    m.validate();
    if (a.format != "table" && a.format != "csv") throw pn::InvalidInput("--format must be table or csv");
    json j;
    j["model"] = {{"sum", m.sum}, {"baseline", m.baseline}};
    std::string text;
    if (a.target) {
        const int q = pn::budget::quality_for_bits(*a.target, m);
        const double qc = pn::budget::continuous_quality_for_bits(*a.target, m);
        j["target_bits"] = *a.target;
        j["quality"] = q;
        j["continuous_quality"] = qc;
        text = a.format == "csv" ? "target_bits,quality,continuous_quality\n" + fmt("%.6g", *a.target) + "," +
                                       std::to_string(q) + "," + fmt("%.4f", qc) + "\n"
                                 : "target " + fmt("%.4g", *a.target) + " bits/pixel -> quality " + std::to_string(q) +
                                       " (continuous " + fmt("%.3f", qc) + ")\n";
        emit(g, j, text);
        return kOk;
    }
    std::vector<double> qs = a.quality;
    if (qs.empty()) qs = {1, 5, 10, 19, 20, 25, 30, 40, 50, 60, 70, 80, 90, 95, 100};
    for (double q : qs) pn::budget::check_quality(q);
    j["rows"] = json::array();
    text = a.format == "csv" ? "quality,scale,bits_lost,bits_remaining\n" : "quality   scale  bits_lost  bits_remaining\n";
    for (double q : qs) {
        const double s = pn::budget::continuous_scale(q), lost = pn::budget::bits_lost(q, m),
                     rem = pn::budget::bits_remaining(q, m);
        j["rows"].push_back({{"quality", q}, {"scale", s}, {"bits_lost", lost}, {"bits_remaining", rem}});
        if (a.format == "csv")
            text += fmt("%g", q) + "," + fmt("%.4f", s) + "," + fmt("%.4f", lost) + "," + fmt("%.4f", rem) + "\n";
        else {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%7g %7.2f %10.2f %15.2f\n", q, s, lost, rem);
            text += buf;
        }
    }
    emit(g, j, text);
    return kOk;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    double n = 1.0;
    double r_max = 255.0;
    double jitter = 0.0;
    std::string source = "uniform:256";
    std::size_t count = 10000;
};

int cmd_synth(const SynthArgs& a, const Globals& g) {
    const auto source = pn::helmholtz::parse_source(a.source);
    const pn::helmholtz::SensorModel model{a.r_max, a.n, a.jitter};
    const std::uint64_t seed = g.seed.value_or(0);
    const auto readings = pn::helmholtz::synthesize_readings(model, source, a.count, seed);
    std::vector<double> values;
    for (const auto& r : readings) values.push_back(r.value);
    const double H = source.entropy();
    const double est = pn::helmholtz::estimate_noise_scalar(values, a.r_max, H);
    const double rel = a.n == 0 ? std::abs(est) : std::abs(est - a.n) / a.n;
    json j = {{"n_true", a.n},   {"n_approx", est}, {"relative_error", rel}, {"entropy_bits", H},
              {"count", a.count}, {"r_max", a.r_max}, {"jitter", a.jitter},   {"seed", seed}};
    emit(g, j,
         "n_true " + fmt("%.6g", a.n) + "\nn_approx " + fmt("%.6g", est) + "\nrelative_error " + fmt("%.6g", rel) +
             "\nentropy_bits " + fmt("%.6g", H) + "\n");
    return kOk;
}

// -------------------------------------------------------------- transcode

struct TranscodeArgs {
    std::string input, output;
    int quality = 75;
};

int cmd_transcode(const TranscodeArgs& a, const Globals& g) {
    pn::codec::check_quality(a.quality);
    const auto img = pn::tools::read_image(a.input);
    const auto r = pn::codec::transcode_image(img, a.quality);
    if (!a.output.empty()) pn::tools::write_image(a.output, r.image);
    const double psnr = r.stats.psnr;
    json j = {{"quality", a.quality},
              {"width", img.width},
              {"height", img.height},
              {"coefficient_entropy", r.stats.coefficient_entropy},
              {"nonzero_fraction", r.stats.nonzero_fraction},
              {"bits_remaining", pn::budget::bits_remaining(a.quality)}};
    j["psnr_db"] = std::isinf(psnr) ? json("inf") : json(psnr);
    emit(g, j,
         "quality " + std::to_string(a.quality) + "\nsize " + std::to_string(img.width) + "x" + std::to_string(img.height) +
             "\ncoefficient_entropy " + fmt("%.4f", r.stats.coefficient_entropy) + "\nnonzero_fraction " +
             fmt("%.4f", r.stats.nonzero_fraction) + "\npsnr_db " + (std::isinf(psnr) ? "inf" : fmt("%.3f", psnr)) + "\n");
    return kOk;
}

// ---------------------------------------------------------------- melspec

struct MelArgs {
    std::string input, output;
    std::optional<double> quality;
    int bands = 96;
};

int cmd_melspec(const MelArgs& a, const Globals& g) {
    auto sig = pn::audio::read_wav(a.input);
    if (a.quality) sig = pn::audio::perceptual_quantize_audio(sig, pn::audio::AudioQuality(*a.quality));
    pn::audio::MelConfig cfg;
    cfg.n_mels = a.bands;
    const auto mel = pn::audio::mel_spectrogram(sig, cfg);
    if (!a.output.empty()) pn::audio::write_mel_file(a.output, mel);
    json j = {{"bands", mel.bands}, {"frames", mel.frames}, {"rate", sig.rate}, {"samples", sig.samples.size()}};
    if (a.quality) j["Q"] = *a.quality;
    emit(g, j, "bands " + std::to_string(mel.bands) + "\nframes " + std::to_string(mel.frames) + "\n");
    return kOk;
}

// ------------------------------------------------------------------ train

// Config: {"dataset": {...}, "arch": id, "quality": q, "train": {...},
//          "checkpoint": path}
int cmd_train(const std::string& config, const Globals& g) {
    namespace fs = std::filesystem;
    const json j = pn::sweep::parse_json_file(config);
    if (!j.is_object()) throw pn::ConfigError("train config must be a JSON object");
    pn::sweep::detail::reject_unknown(j, {"dataset", "arch", "quality", "train", "checkpoint"}, "train config");
    const fs::path base = fs::path(config).parent_path();
    if (!j.contains("dataset")) throw pn::ConfigError("missing 'dataset' object");
    const auto ref = pn::sweep::dataset_from_json(j["dataset"], base);
    std::string arch = "desk-small", checkpoint;
    pn::sweep::detail::read(j, "arch", arch);
    pn::sweep::detail::read(j, "checkpoint", checkpoint);
    pn::learn::TrainConfig tc = j.contains("train") ? pn::sweep::train_from_json(j["train"]) : pn::learn::TrainConfig{};
    if (g.seed) tc.seed = *g.seed;
    const bool audio = ref.kind == pn::data::DatasetKind::Audio;
    double quality = 0; // untouched images, transparent audio
    pn::sweep::detail::read(j, "quality", quality);
    if (!pn::learn::zoo::find(arch)) throw pn::ConfigError("unknown architecture '" + arch + "'");
    if (!audio && quality != 0) pn::codec::check_quality(static_cast<int>(quality));

    const auto corpus = pn::sweep::load_corpus(ref);
    const auto data = pn::sweep::transform_corpus(corpus, quality, ref.frames);
    const auto spec = pn::learn::zoo::get(arch, data.classes);
    pn::learn::Model model(spec, data.input_shape(), tc.seed);
    const auto r = pn::learn::train(spec, data, tc, &model);
    if (!checkpoint.empty()) pn::learn::save_checkpoint(pn::sweep::detail::resolve(base, checkpoint), model);

    json out = {{"arch", arch},
                {"params", r.params},
                {"epochs_to_converge", r.epochs_to_converge},
                {"final_test_accuracy", r.final_test_accuracy},
                {"train_accuracy", r.train_accuracy},
                {"test_accuracy", r.test_accuracy},
                {"train_loss", r.train_loss}};
    std::string text = "arch " + arch + "\nparams " + std::to_string(r.params) + "\n";
    for (std::size_t e = 0; e < r.test_accuracy.size(); ++e)
        text += "epoch " + std::to_string(e + 1) + " loss " + fmt("%.4f", r.train_loss[e]) + " train " +
                fmt("%.4f", r.train_accuracy[e]) + " test " + fmt("%.4f", r.test_accuracy[e]) + "\n";
    text += "epochs_to_converge " + std::to_string(r.epochs_to_converge) + "\nfinal_test_accuracy " +
            fmt("%.4f", r.final_test_accuracy) + "\n";
    emit(g, out, text);
    return kOk;
}

// -------------------------------------------------------------------- fit

int cmd_fit(const std::string& csv, double tau, const Globals& g) {
    const auto table = pn::sweep::read_csv(csv);
    const auto records = pn::sweep::records_from_table(table, {"quality", "Q", "arch", "test_accuracy", "status"});
    const auto rep = pn::sweep::summarize(records, pn::sweep::infer_domain(records), tau);
    std::string text;
    for (const auto& a : rep.archs) {
        text += a.arch + ": c " + fmt("%.6f", a.c) + " Q_knee " + fmt("%.4f", a.q_knee) + " quality_knee " +
                fmt("%g", a.quality_knee);
        if (a.bits) text += " content_bits " + fmt("%.3f", a.bits->content_bits) + " noise_bits " + fmt("%.3f", a.bits->noise_bits);
        text += "\n";
    }
    emit(g, pn::sweep::to_json(rep), text);
    return kOk;
}

// ------------------------------------------------------------------- plot

int cmd_plot(const pn::report::PlotSpec& spec, const Globals& g) {
    pn::report::render_plot(spec);
    emit(g, {{"output", spec.output_svg.string()}, {"kind", pn::report::to_string(spec.kind)}},
         "wrote " + spec.output_svg.string() + "\n");
    return kOk;
}

// ------------------------------------------------------------------ sweep

int cmd_sweep(const std::string& config, std::optional<int> workers, const Globals& g) {
    auto cfg = pn::sweep::load_config(config);
    if (workers) {
        if (*workers < 1) throw pn::ConfigError("--workers must be >= 1");
        cfg.workers = *workers;
    }
    if (g.seed) cfg.seeds = {*g.seed};
    const auto result = pn::sweep::run_sweep(cfg, [](const pn::sweep::SweepRecord& r, bool resumed) {
        std::cerr << (resumed ? "[resumed] " : "[trained] ") << r.arch << " quality " << fmt("%g", r.quality) << " seed "
                  << r.seed << ": " << (r.test_accuracy ? fmt("%.4f", *r.test_accuracy) : std::string("-")) << " ("
                  << r.status << ")\n";
    });
    const auto art = pn::sweep::write_artifacts(cfg, result);
    json j = {{"cells", result.records.size()},
              {"trained", result.trained},
              {"resumed", result.resumed},
              {"failed", result.failed()},
              {"results_csv", art.results_csv.string()},
              {"summary_json", art.summary_json.string()}};
    j["plots"] = json::array();
    for (const auto& p : art.plots) j["plots"].push_back(p.string());
    if (art.summary_error) j["summary_error"] = *art.summary_error;
    std::string text = "cells " + std::to_string(result.records.size()) + " (trained " + std::to_string(result.trained) +
                       ", resumed " + std::to_string(result.resumed) + ", failed " + std::to_string(result.failed()) +
                       ")\nresults " + art.results_csv.string() + "\n";
    if (art.summary_error) text += "summary skipped: " + *art.summary_error + "\n";
    emit(g, j, text);
    return result.failed() == static_cast<int>(result.records.size()) ? kAllFailed : kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perceptual-noise toolkit: bit budgets, transcoding, noise estimation, training sweeps and plots"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    app.add_flag("--json", g.json, "Machine-readable JSON on stdout");
    auto* seed_opt = app.add_option("--seed", seed_value, "Seed for every random choice");

    BitsArgs bits;
    auto* c_bits = app.add_subcommand("bits", "Bits lost/remaining per JPEG quality, or the quality for a bit target");
    c_bits->add_option("-q,--quality", bits.quality, "Quality levels (1-100)");
    c_bits->add_option("-t,--target", bits.target, "Target bits per pixel (inverse mode)");
    c_bits->add_option("--model", bits.model, "Table sum: published or annexk")->check(CLI::IsMember({"published", "annexk"}));
    c_bits->add_option("--baseline", bits.baseline, "Baseline bits per pixel (16 or 24)");
    c_bits->add_option("--format", bits.format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Synthesize sensor readings and estimate the noise scalar");
    c_synth->add_option("-n,--n", synth.n, "True noise scalar");
    c_synth->add_option("--r-max", synth.r_max, "Maximum reading");
    c_synth->add_option("--jitter", synth.jitter, "Gaussian jitter sigma as a fraction of r_max");
    c_synth->add_option("--source", synth.source, "uniform:K, laplace:K:scale or probs:p0,p1,...");
    c_synth->add_option("--count", synth.count, "Number of readings");

    TranscodeArgs tr;
    auto* c_tr = app.add_subcommand("transcode", "JPEG-style transcode of an image (PNG, PPM or raw RGB)");
    c_tr->add_option("-i,--input", tr.input, "Input image")->required();
    c_tr->add_option("-q,--quality", tr.quality, "Quality (1-100)")->required();
    c_tr->add_option("-o,--output", tr.output, "Output image");

    MelArgs mel;
    auto* c_mel = app.add_subcommand("melspec", "Mel spectrogram of a 16-bit mono WAV");
    c_mel->add_option("-i,--input", mel.input, "Input WAV")->required();
    c_mel->add_option("-o,--output", mel.output, "Output tensor file");
    c_mel->add_option("-Q,--quality", mel.quality, "Apply the perceptual quantizer at Q in [0,1] first");
    c_mel->add_option("--bands", mel.bands, "Mel bands");

    std::string train_cfg;
    auto* c_train = app.add_subcommand("train", "Train one architecture from a JSON config");
    c_train->add_option("config", train_cfg, "Config file")->required();

    std::string fit_csv;
    double fit_tau = 0.05;
    auto* c_fit = app.add_subcommand("fit", "Fit the accuracy curve and knee from a sweep CSV");
    c_fit->add_option("csv", fit_csv, "Sweep results CSV")->required();
    c_fit->add_option("--tau", fit_tau, "Knee tolerance");

    pn::report::PlotSpec plot;
    std::string plot_kind = "accuracy-vs-Q", plot_csv, plot_out;
    bool no_overlay = false;
    auto* c_plot = app.add_subcommand("plot", "Render a sweep CSV as SVG");
    c_plot->add_option("csv", plot_csv, "Sweep results CSV")->required();
    c_plot->add_option("-o,--output", plot_out, "Output SVG")->required();
    c_plot->add_option("--kind", plot_kind, "accuracy-vs-Q, epochs-vs-Q or accuracy-vs-params")
        ->check(CLI::IsMember({"accuracy-vs-Q", "epochs-vs-Q", "accuracy-vs-params"}));
    c_plot->add_option("--title", plot.title, "Plot title");
    c_plot->add_flag("--no-overlay", no_overlay, "Omit the theoretical curve");

    std::string sweep_cfg;
    std::optional<int> sweep_workers;
    auto* c_sweep = app.add_subcommand("sweep", "Run a quality sweep from a JSON config");
    c_sweep->add_option("config", sweep_cfg, "Config file")->required();
    c_sweep->add_option("--workers", sweep_workers, "Concurrent cells (PN_WORKERS overrides)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (*c_bits) return cmd_bits(bits, g);
        if (*c_synth) return cmd_synth(synth, g);
        if (*c_tr) return cmd_transcode(tr, g);
        if (*c_mel) return cmd_melspec(mel, g);
        if (*c_train) return cmd_train(train_cfg, g);
        if (*c_fit) return cmd_fit(fit_csv, fit_tau, g);
        if (*c_plot) {
            plot.kind = pn::report::parse_plot_kind(plot_kind);
            plot.overlay_theoretical = !no_overlay;
            plot.input_csv = plot_csv;
            plot.output_svg = plot_out;
            return cmd_plot(plot, g);
        }
        if (*c_sweep) return cmd_sweep(sweep_cfg, sweep_workers, g);
    } catch (const pn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const pn::Unreachable& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    } catch (const pn::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    } catch (const pn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

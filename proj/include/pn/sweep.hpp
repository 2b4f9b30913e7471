#pragma once

// Quality sweep: for every (quality, arch, seed) cell, transcode the corpus
// at that quality (once per quality), train from scratch and record the
// outcome. Finished cells leave a marker file so interrupted sweeps resume.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pn/bit_budget.hpp"
#include "pn/data.hpp"
#include "pn/error.hpp"
#include "pn/learn/train.hpp"
#include "pn/learn/zoo.hpp"
#include "pn/records.hpp"
#include "pn/report.hpp"

namespace pn::sweep {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct SweepConfig {
    data::DatasetRef dataset;
    std::vector<double> grid;
    std::vector<std::string> archs;
    std::vector<std::uint64_t> seeds;
    learn::TrainConfig train;
    fs::path output;
    int workers = 1;
    double tau = 0.05;
    bool record_wall_time = false;

    Domain domain() const { return dataset.kind == data::DatasetKind::Audio ? Domain::Audio : Domain::Image; }

    void validate() const {
        dataset.validate();
        train.validate();
        if (grid.empty()) throw ConfigError("quality grid is empty");
        if (archs.empty()) throw ConfigError("architecture list is empty");
        if (seeds.empty()) throw ConfigError("seed list is empty");
        if (output.empty()) throw ConfigError("output directory is not set");
        if (workers < 1) throw ConfigError("workers must be >= 1");
        if (!(tau > 0 && tau < 1)) throw ConfigError("tau must be in (0,1)");
        bool up = true, down = true;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            up = up && grid[i] > grid[i - 1];
            down = down && grid[i] < grid[i - 1];
        }
        if (!up && !down) throw ConfigError("quality grid must be strictly ordered");
        for (double g : grid) {
            if (domain() == Domain::Image && (g != std::floor(g) || g < 1 || g > 100))
                throw ConfigError("image grid entries must be integer qualities in [1,100]");
            if (domain() == Domain::Audio && !(g >= 0 && g <= 1)) throw ConfigError("audio grid entries must be Q in [0,1]");
        }
        for (const auto& a : archs)
            if (!learn::zoo::find(a)) throw ConfigError("unknown architecture '" + a + "'");
    }
};

// ------------------------------------------------------------ config JSON

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

} // namespace detail

inline data::DatasetRef dataset_from_json(const json& d, const fs::path& base) {
    using detail::read;
    if (!d.is_object()) throw ConfigError("'dataset' must be an object");
    detail::reject_unknown(d, {"kind", "root", "classes", "train_per_class", "test_per_class", "manifest", "train_fraction",
                               "frames", "train_count", "test_count", "seed"},
                           "dataset");
    data::DatasetRef ref;
    std::string kind = "cifar10", root, manifest;
    read(d, "kind", kind);
    if (kind == "cifar10") ref.kind = data::DatasetKind::Cifar10;
    else if (kind == "audio") ref.kind = data::DatasetKind::Audio;
    else if (kind == "synthetic-hf") ref.kind = data::DatasetKind::SyntheticHF;
    else throw ConfigError("unknown dataset kind '" + kind + "' (cifar10, audio, synthetic-hf)");
    read(d, "root", root);
    read(d, "manifest", manifest);
    ref.root = detail::resolve(base, root);
    ref.manifest = detail::resolve(base, manifest);
    read(d, "classes", ref.classes);
    read(d, "train_per_class", ref.train_per_class);
    read(d, "test_per_class", ref.test_per_class);
    read(d, "train_fraction", ref.train_fraction);
    read(d, "frames", ref.frames);
    read(d, "train_count", ref.train_count);
    read(d, "test_count", ref.test_count);
    read(d, "seed", ref.seed);
    ref.validate();
    return ref;
}

inline learn::TrainConfig train_from_json(const json& t) {
    using detail::read;
    if (!t.is_object()) throw ConfigError("'train' must be an object");
    detail::reject_unknown(t, {"learning_rate", "momentum", "batch_size", "max_epochs", "augment_shift", "augment_flip",
                               "patience", "delta", "lr_step", "lr_decay", "seed"},
                           "train");
    learn::TrainConfig c;
    read(t, "learning_rate", c.learning_rate);
    read(t, "momentum", c.momentum);
    read(t, "batch_size", c.batch_size);
    read(t, "max_epochs", c.max_epochs);
    read(t, "augment_shift", c.augment_shift);
    read(t, "augment_flip", c.augment_flip);
    read(t, "patience", c.patience);
    read(t, "delta", c.delta);
    read(t, "lr_step", c.lr_step);
    read(t, "lr_decay", c.lr_decay);
    read(t, "seed", c.seed);
    c.validate();
    return c;
}

inline json parse_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Relative paths are resolved against `base` (the config file's directory).
inline SweepConfig config_from_json(const json& j, const fs::path& base = {}) {
    using detail::read;
    if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
    detail::reject_unknown(j, {"dataset", "grid", "archs", "seeds", "train", "output", "workers", "tau", "record_wall_time"},
                           "sweep config");
    SweepConfig c;
    if (!j.contains("dataset")) throw ConfigError("missing 'dataset' object");
    c.dataset = dataset_from_json(j["dataset"], base);
    read(j, "grid", c.grid);
    read(j, "archs", c.archs);
    read(j, "seeds", c.seeds);
    if (j.contains("train")) c.train = train_from_json(j["train"]);
    std::string output;
    read(j, "output", output);
    c.output = detail::resolve(base, output);
    read(j, "workers", c.workers);
    read(j, "tau", c.tau);
    read(j, "record_wall_time", c.record_wall_time);
    c.validate();
    return c;
}

inline SweepConfig load_config(const fs::path& path) {
    return config_from_json(parse_json_file(path), path.parent_path());
}

inline json train_json(const learn::TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"momentum", t.momentum},       {"batch_size", t.batch_size},
            {"max_epochs", t.max_epochs},       {"augment_shift", t.augment_shift}, {"augment_flip", t.augment_flip},
            {"patience", t.patience},           {"delta", t.delta},             {"lr_step", t.lr_step},
            {"lr_decay", t.lr_decay}};
}

inline json dataset_json(const data::DatasetRef& d) {
    const char* kind = d.kind == data::DatasetKind::Cifar10 ? "cifar10" : d.kind == data::DatasetKind::Audio ? "audio" : "synthetic-hf";
    return {{"kind", kind},
            {"root", d.root.string()},
            {"classes", d.classes},
            {"train_per_class", d.train_per_class},
            {"test_per_class", d.test_per_class},
            {"manifest", d.manifest.string()},
            {"train_fraction", d.train_fraction},
            {"frames", d.frames},
            {"train_count", d.train_count},
            {"test_count", d.test_count},
            {"seed", d.seed}};
}

// ------------------------------------------------------------------ corpus

using AnyCorpus = std::variant<data::ImageCorpus, data::AudioCorpus>;

inline AnyCorpus load_corpus(const data::DatasetRef& ref) {
    switch (ref.kind) {
    case data::DatasetKind::Cifar10: return data::load_cifar10(ref);
    case data::DatasetKind::Audio: return data::load_audio_dataset(ref);
    case data::DatasetKind::SyntheticHF:
        return data::make_hf_corpus({ref.train_count, ref.test_count, 60.0, ref.seed});
    }
    throw ConfigError("unknown dataset kind");
}

inline learn::Dataset transform_corpus(const AnyCorpus& corpus, double quality, int frames) {
    if (const auto* img = std::get_if<data::ImageCorpus>(&corpus)) return data::image_dataset(*img, static_cast<int>(quality));
    return data::audio_dataset(std::get<data::AudioCorpus>(corpus), quality, frames);
}

// Image rows carry the bit budget left at q; audio rows carry the bitrate
// ratio 1 - Q of the in-house quantizer.
inline double bits_column(Domain d, double quality) {
    return d == Domain::Image ? budget::bits_remaining(quality) : 1.0 - quality;
}

// ---------------------------------------------------------------- cells

struct Cell {
    std::size_t index = 0;
    double quality = 0;
    std::string arch;
    std::uint64_t seed = 0;
};

struct CellOutcome {
    SweepRecord record;
    learn::TrainResult history;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<learn::TrainResult> histories; // parallel to records; empty for failed cells
    int trained = 0;
    int resumed = 0;

    int failed() const {
        int n = 0;
        for (const auto& r : records) n += !r.ok();
        return n;
    }
};

inline std::vector<Cell> enumerate_cells(const SweepConfig& cfg) {
    std::vector<Cell> cells;
    for (double q : cfg.grid)
        for (const auto& a : cfg.archs)
            for (auto s : cfg.seeds) cells.push_back({cells.size(), q, a, s});
    return cells;
}

inline std::string cell_name(const Cell& c) {
    return fmt("%04.0f", static_cast<double>(c.index)) + "_q" + fmt("%.10g", c.quality) + "_" + c.arch + "_s" +
           std::to_string(c.seed);
}

// Everything that determines a cell's outcome; a marker is reused only when
// its fingerprint matches.
inline json cell_fingerprint(const SweepConfig& cfg, const Cell& c) {
    return {{"dataset", dataset_json(cfg.dataset)}, {"train", train_json(cfg.train)},
            {"quality", c.quality},                 {"arch", c.arch},
            {"seed", c.seed}};
}

inline json outcome_json(const CellOutcome& o, const json& fingerprint) {
    const auto& r = o.record;
    json j;
    j["fingerprint"] = fingerprint;
    j["record"] = {{"quality", r.quality}, {"Q", r.Q},           {"bits_per_pixel", r.bits_per_pixel},
                   {"arch", r.arch},       {"params", r.params}, {"seed", r.seed},
                   {"wall_seconds", r.wall_seconds}, {"status", r.status}};
    if (r.test_accuracy) j["record"]["test_accuracy"] = *r.test_accuracy;
    if (r.epochs_to_converge) j["record"]["epochs_to_converge"] = *r.epochs_to_converge;
    j["history"] = {{"train_accuracy", o.history.train_accuracy},
                    {"test_accuracy", o.history.test_accuracy},
                    {"train_loss", o.history.train_loss}};
    return j;
}

inline std::optional<CellOutcome> read_marker(const fs::path& path, const json& fingerprint) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        j = json::parse(in);
        if (j.at("fingerprint") != fingerprint) return std::nullopt;
        CellOutcome o;
        const json& r = j.at("record");
        o.record.quality = r.at("quality").get<double>();
        o.record.Q = r.at("Q").get<double>();
        o.record.bits_per_pixel = r.at("bits_per_pixel").get<double>();
        o.record.arch = r.at("arch").get<std::string>();
        o.record.params = r.at("params").get<std::size_t>();
        o.record.seed = r.at("seed").get<std::uint64_t>();
        o.record.wall_seconds = r.at("wall_seconds").get<double>();
        o.record.status = r.at("status").get<std::string>();
        if (r.contains("test_accuracy")) o.record.test_accuracy = r["test_accuracy"].get<double>();
        if (r.contains("epochs_to_converge")) o.record.epochs_to_converge = r["epochs_to_converge"].get<int>();
        const json& h = j.at("history");
        o.history.train_accuracy = h.at("train_accuracy").get<std::vector<double>>();
        o.history.test_accuracy = h.at("test_accuracy").get<std::vector<double>>();
        o.history.train_loss = h.at("train_loss").get<std::vector<double>>();
        if (o.record.test_accuracy) o.history.final_test_accuracy = *o.record.test_accuracy;
        if (o.record.epochs_to_converge) o.history.epochs_to_converge = *o.record.epochs_to_converge;
        o.history.params = o.record.params;
        return o;
    } catch (const json::exception&) {
        return std::nullopt; // unreadable marker: retrain the cell
    }
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InvalidInput("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

// PN_WORKERS, when set to a positive integer, overrides the config.
inline int effective_workers(int configured) {
    if (const char* env = std::getenv("PN_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    return configured;
}

inline CellOutcome run_cell(const SweepConfig& cfg, const Cell& c, const learn::Dataset& data) {
    CellOutcome o;
    SweepRecord& r = o.record;
    r.quality = c.quality;
    r.Q = normalized_q(cfg.domain(), c.quality);
    r.bits_per_pixel = bits_column(cfg.domain(), c.quality);
    r.arch = c.arch;
    r.seed = c.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        const learn::ModelSpec spec = learn::zoo::get(c.arch, data.classes);
        r.params = learn::count_params(spec, data.input_shape());
        learn::TrainConfig tc = cfg.train;
        tc.seed = c.seed;
        o.history = learn::train(spec, data, tc);
        r.test_accuracy = o.history.final_test_accuracy;
        r.epochs_to_converge = o.history.epochs_to_converge;
    } catch (const Divergence& e) {
        r.status = "diverged at epoch " + std::to_string(e.epoch());
    } catch (const Error& e) {
        r.status = std::string("failed: ") + e.what();
    }
    if (cfg.record_wall_time)
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return o;
}

// `progress` (optional) is called after each finished cell under a lock.
inline SweepResult run_sweep(const SweepConfig& cfg, std::function<void(const SweepRecord&, bool resumed)> progress = {}) {
    cfg.validate();
    const fs::path cells_dir = cfg.output / "cells";
    fs::create_directories(cells_dir);
    const auto cells = enumerate_cells(cfg);

    std::vector<std::optional<CellOutcome>> outcomes(cells.size());
    std::vector<json> prints(cells.size());
    std::map<double, int> pending; // cells still to train per quality
    SweepResult result;
    for (const auto& c : cells) {
        prints[c.index] = cell_fingerprint(cfg, c);
        outcomes[c.index] = read_marker(cells_dir / (cell_name(c) + ".json"), prints[c.index]);
        if (outcomes[c.index]) {
            ++result.resumed;
            if (progress) progress(outcomes[c.index]->record, true);
        } else {
            ++pending[c.quality];
        }
    }

    std::mutex mu;
    std::optional<AnyCorpus> corpus;
    std::map<double, std::shared_future<std::shared_ptr<const learn::Dataset>>> cache;
    std::map<double, std::promise<std::shared_ptr<const learn::Dataset>>> producers;

    // Corpus loads lazily so a fully resumed sweep never touches the data.
    auto dataset_for = [&](double q) -> std::shared_ptr<const learn::Dataset> {
        std::shared_future<std::shared_ptr<const learn::Dataset>> fut;
        bool produce = false;
        {
            std::lock_guard lock(mu);
            auto it = cache.find(q);
            if (it == cache.end()) {
                fut = producers[q].get_future().share();
                cache.emplace(q, fut);
                produce = true;
            } else {
                fut = it->second;
            }
        }
        if (produce) {
            try {
                std::unique_lock lock(mu);
                if (!corpus) corpus = load_corpus(cfg.dataset);
                lock.unlock();
                auto ds = std::make_shared<const learn::Dataset>(transform_corpus(*corpus, q, cfg.dataset.frames));
                std::lock_guard relock(mu);
                producers[q].set_value(ds);
            } catch (...) {
                std::lock_guard relock(mu);
                producers[q].set_exception(std::current_exception());
            }
        }
        return fut.get();
    };

    std::vector<std::size_t> todo;
    for (const auto& c : cells)
        if (!outcomes[c.index]) todo.push_back(c.index);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) return;
            const Cell& c = cells[todo[k]];
            std::shared_ptr<const learn::Dataset> ds;
            try {
                ds = dataset_for(c.quality);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                return;
            }
            CellOutcome o = run_cell(cfg, c, *ds);
            ds.reset();
            std::lock_guard lock(mu);
            write_text_atomic(cells_dir / (cell_name(c) + ".json"), outcome_json(o, prints[c.index]).dump(1) + "\n");
            if (progress) progress(o.record, false);
            outcomes[c.index] = std::move(o);
            ++result.trained;
            if (--pending[c.quality] == 0) { // drop the transcoded copy
                cache.erase(c.quality);
                producers.erase(c.quality);
            }
        }
    };
    const int n_workers = std::min<int>(effective_workers(cfg.workers), static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    for (auto& o : outcomes) {
        result.records.push_back(o->record);
        result.histories.push_back(std::move(o->history));
    }
    return result;
}

// Per-epoch curves of every successful cell.
inline std::string curves_csv(const SweepResult& r) {
    std::string out = "quality,arch,seed,epoch,train_accuracy,test_accuracy,train_loss\n";
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        const auto& h = r.histories[i];
        for (std::size_t e = 0; e < h.test_accuracy.size(); ++e)
            out += fmt("%.10g", rec.quality) + "," + sanitize_field(rec.arch) + "," + std::to_string(rec.seed) + "," +
                   std::to_string(e + 1) + "," + fmt("%.6f", h.train_accuracy.at(e)) + "," +
                   fmt("%.6f", h.test_accuracy[e]) + "," + fmt("%.6f", h.train_loss.at(e)) + "\n";
    }
    return out;
}

struct Artifacts {
    fs::path results_csv, curves_csv, summary_json, summary_csv;
    std::vector<fs::path> plots;
    std::optional<std::string> summary_error;
};

// Writes results.csv, curves.csv, summary.json/.csv and the SVG plots.
inline Artifacts write_artifacts(const SweepConfig& cfg, const SweepResult& r) {
    Artifacts a;
    a.results_csv = cfg.output / "results.csv";
    a.curves_csv = cfg.output / "curves.csv";
    a.summary_json = cfg.output / "summary.json";
    a.summary_csv = cfg.output / "summary.csv";
    write_text_atomic(a.results_csv, records_csv(r.records));
    write_text_atomic(a.curves_csv, curves_csv(r));

    std::map<std::string, double> cs;
    json sj;
    try {
        const auto rep = summarize(r.records, cfg.domain(), cfg.tau);
        for (const auto& arch : rep.archs) cs[arch.arch] = arch.c;
        sj = to_json(rep);
        write_text_atomic(a.summary_csv, summary_csv(rep));
    } catch (const Error& e) {
        a.summary_error = e.what();
        sj = {{"domain", to_string(cfg.domain())}, {"tau", cfg.tau}, {"error", e.what()}};
        write_text_atomic(a.summary_csv, "arch,quality,Q,mean_accuracy,mean_epochs,cells\n");
    }
    sj["cells"] = r.records.size();
    sj["failed_cells"] = r.failed();
    write_text_atomic(a.summary_json, sj.dump(2) + "\n");

    auto plot = [&](report::PlotKind k, const std::string& file, const std::map<std::string, double>& c) {
        const fs::path p = cfg.output / file;
        write_text_atomic(p, report::render_svg(k, r.records, report::to_string(k), c));
        a.plots.push_back(p);
    };
    plot(report::PlotKind::AccuracyVsQ, "accuracy_vs_Q.svg", cs);
    plot(report::PlotKind::EpochsVsQ, "epochs_vs_Q.svg", {});
    if (cfg.archs.size() > 1) plot(report::PlotKind::AccuracyVsParams, "accuracy_vs_params.svg", {});
    return a;
}

} // namespace pn::sweep

// SPDX-License-Identifier: Apache-2.0
#include "fgdm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

#include "fgdm/errors.hpp"
#include "fgdm/filters.hpp"
#include "fgdm/io.hpp"
#include "fgdm/manifest.hpp"
#include "fgdm/metrics.hpp"
#include "fgdm/nn/checkpoint.hpp"
#include "fgdm/phantoms.hpp"
#include "fgdm/service.hpp"
#include "fgdm/spectral.hpp"
#include "fgdm/training.hpp"
#include "fgdm/translate.hpp"

namespace fgdm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool verbose = false;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    json config = json::object();

    bool has_seed() const { return seed_opt->count() > 0; }
    json section(const char* name) const { return config.value(name, json::object()); }
};

bool given(const CLI::Option* o) { return o && o->count() > 0; }

void write_text(const fs::path& p, const std::string& s) {
    write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

bool is_dataset(const fs::path& p) { return fs::is_directory(p) && fs::exists(p / "manifest.json") && fs::is_directory(p / "source"); }

bool is_image_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return fs::is_regular_file(p) && (ext == ".png" || ext == ".f32");
}

/// Image files of a plain directory, sorted by name.
std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> v;
    for (const auto& e : fs::directory_iterator(dir))
        if (is_image_file(e.path())) v.push_back(e.path());
    std::sort(v.begin(), v.end());
    return v;
}

/// A file, a plain directory of images, or a dataset (its `sub` side).
std::vector<fs::path> resolve_inputs(const fs::path& p, const char* sub) {
    if (is_dataset(p)) {
        const auto man = read_manifest(p);
        std::vector<fs::path> v;
        for (int i = 0; i < man.count; ++i) v.push_back(std::string(sub) == "target" ? target_path(p, i) : source_path(p, i));
        return v;
    }
    if (fs::is_directory(p)) return list_images(p);
    if (!fs::exists(p)) throw IoError("no such file or directory: " + p.string());
    return {p};
}

std::vector<ImageGrid> load_all(const std::vector<fs::path>& paths) {
    std::vector<ImageGrid> v;
    v.reserve(paths.size());
    for (const auto& p : paths) v.push_back(load_image(p));
    return v;
}

fs::path out_dir_or(const Globals& g, const std::string& local, const char* fallback) {
    if (!local.empty()) return local;
    if (!g.out_dir.empty()) return g.out_dir;
    return fallback;
}

ExperimentManifest begin_manifest(const std::string& cmd, const Globals& g) {
    ExperimentManifest m;
    m.command = cmd;
    m.seed = g.seed;
    m.tool_version = std::string(tool_version());
    m.started_utc = utc_now();
    return m;
}

void finish_manifest(ExperimentManifest& m, const fs::path& dir, const json& extra = json::object()) {
    m.finished_utc = utc_now();
    write_manifest(dir, m, extra);
}

template <class... A>
void say(const Globals& g, std::ostream& err, A&&... a) {
    if (!g.verbose) return;
    (err << ... << a);
    err << '\n';
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    int n = 200;
    int size = 64;
    std::vector<double> band;
    double shading = 0.0;
    int streaks = 0;
    double streak_strength = 0.0;
    std::string out;
    CLI::Option *size_o, *shading_o, *streaks_o, *streak_strength_o;
};

int cmd_gen_data(const GenDataArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    PhantomSpec ps = PhantomSpec::from_json(g.section("phantom"));
    DegradationSpec ds = DegradationSpec::from_json(g.section("degradation"));
    if (given(a.size_o)) ps.size = a.size;
    if (!a.band.empty()) {
        if (a.band.size() != 2) throw ArgumentError("--band expects lo,hi");
        ds.f_lo = a.band[0];
        ds.f_hi = a.band[1];
    }
    if (given(a.shading_o)) ds.shading_strength = a.shading;
    if (given(a.streaks_o)) ds.streak_count = a.streaks;
    if (given(a.streak_strength_o)) ds.streak_strength = a.streak_strength;
    if (g.has_seed()) {
        ps.seed = g.seed;
        ds.seed = derive_seed(g.seed, 1);
    }
    ps.validate();
    ds.validate();
    if (a.n < 1) throw ArgumentError("--n must be >= 1");
    const fs::path dir = out_dir_or(g, a.out, "");
    if (dir.empty()) throw ArgumentError("gen-data needs --out DIR");

    auto m = begin_manifest("gen-data", g);
    say(g, err, "generating ", a.n, " pairs into ", dir.string());
    const DatasetManifest dm = make_paired_dataset(a.n, ps, ds, dir);
    m.config = {{"phantom", ps.to_json()}, {"degradation", ds.to_json()}, {"n", a.n}};
    m.artifacts = {"target/", "source/"};
    finish_manifest(m, dir, dm.to_json());
    out << "wrote " << dm.count << " pairs to " << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string data, out, val_data, loss;
    int epochs = 0, batch = 0, T = 0, eta_min = 0, eta_max = 0, width = 0, val_count = 16, checkpoint_every = 0;
    double lr = 0, lr_min = 0, recon_weight = 0;
    std::vector<double> betas;
    CLI::Option *epochs_o, *batch_o, *T_o, *eta_min_o, *eta_max_o, *width_o, *lr_o, *lr_min_o, *betas_o, *recon_o, *ckpt_every_o;
};

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    TrainingConfig cfg = TrainingConfig::from_json(g.section("training"));
    if (given(a.epochs_o)) cfg.epochs = a.epochs;
    if (given(a.batch_o)) cfg.batch_size = a.batch;
    if (given(a.T_o)) cfg.T = a.T;
    if (given(a.eta_min_o)) cfg.eta_min = a.eta_min;
    if (given(a.eta_max_o)) cfg.eta_max = a.eta_max;
    if (given(a.width_o)) cfg.generator.base_width = cfg.discriminator.base_width = a.width;
    if (given(a.lr_o)) cfg.lr_initial = a.lr;
    if (given(a.lr_min_o)) cfg.lr_min = a.lr_min;
    if (given(a.betas_o)) {
        cfg.beta1 = a.betas[0];
        cfg.beta2 = a.betas[1];
    }
    if (given(a.recon_o)) cfg.recon_weight = a.recon_weight;
    if (given(a.ckpt_every_o)) cfg.checkpoint_every = a.checkpoint_every;
    if (!a.loss.empty()) cfg.loss = TrainingConfig::from_json(json{{"loss", a.loss}}).loss;
    if (g.has_seed()) cfg.seed = g.seed;
    cfg.validate();

    fs::path ckpt = a.out;
    if (ckpt.empty()) {
        if (g.out_dir.empty()) throw ArgumentError("train needs --out CKPT");
        ckpt = fs::path(g.out_dir) / "model.fgdm";
    }
    const fs::path dir = ckpt.has_parent_path() ? ckpt.parent_path() : fs::path(".");

    auto m = begin_manifest("train", g);
    m.seed = cfg.seed;
    // Only the target side is read: training never sees source images.
    const auto targets = load_targets(a.data);
    std::vector<ImageGrid> val;
    if (!a.val_data.empty()) {
        val = load_targets(a.val_data);
        if (static_cast<int>(val.size()) > a.val_count) val.resize(static_cast<std::size_t>(a.val_count));
    }
    say(g, err, "training on ", targets.size(), " targets for ", cfg.epochs, " epochs");

    TrainingHooks hooks;
    hooks.on_epoch = [&](const EpochLog& e) {
        say(g, err, "epoch ", e.epoch, " d_loss ", e.d_loss, " g_loss ", e.g_loss, " mse ", e.recon_mse, " lr ", e.lr,
            " val_psnr ", e.val_psnr);
    };
    const json meta_base = {{"T", cfg.T},
                            {"eta_range", {cfg.eta_min, cfg.eta_max}},
                            {"training", cfg.to_json()},
                            {"dataset", {{"dir", a.data}, {"count", targets.size()}}}};
    const NoiseSchedule sched = make_schedule(cfg.T);
    hooks.on_checkpoint = [&](int ep, const nn::Generator<float>& gen, const nn::Discriminator<float>& disc) {
        nn::Checkpoint ck{gen, disc, sched, meta_base, {}};
        ck.metadata["epoch"] = ep;
        char name[32];
        std::snprintf(name, sizeof name, "_epoch%03d", ep + 1);
        save_checkpoint(ck, dir / (ckpt.stem().string() + name + ckpt.extension().string()));
    };

    TrainingResult res = train(targets, cfg, val, hooks);
    nn::Checkpoint ck{res.generator, res.discriminator, res.schedule, meta_base, {}};
    ck.metadata["epochs_completed"] = res.log.epochs.size();
    m.checkpoint_sha256 = save_checkpoint(ck, ckpt);
    write_text(dir / "train_log.csv", res.log.to_csv());
    write_text(dir / "train_log.json", res.log.to_json().dump(2) + "\n");
    m.config = {{"training", cfg.to_json()}, {"data", a.data}, {"val_data", a.val_data}};
    m.artifacts = {ckpt.filename().string(), "train_log.csv", "train_log.json"};
    finish_manifest(m, dir);
    out << "checkpoint " << ckpt.string() << " sha256 " << m.checkpoint_sha256 << '\n';
    return 0;
}

// --------------------------------------------------------------- translate

struct TranslateArgs {
    std::string ckpt, in, out, ablation, dump;
    double eta = 10;
    int tilde_t = 4;
    bool save_conditions = false;
    CLI::Option *eta_o, *tilde_o;
};

TranslationConfig translation_config(const Globals& g, const CLI::Option* eta_o, double eta,
                                     const CLI::Option* tilde_o, int tilde_t, const std::string& ablation) {
    TranslationConfig c = TranslationConfig::from_json(g.section("translate"));
    if (given(eta_o)) c.eta = eta;
    if (given(tilde_o)) c.tilde_T = tilde_t;
    if (!ablation.empty()) c.ablation = parse_ablation(ablation);
    if (g.has_seed()) c.seed = g.seed;
    return c;
}

int cmd_translate(const TranslateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    TranslationConfig cfg = translation_config(g, a.eta_o, a.eta, a.tilde_o, a.tilde_t, a.ablation);
    cfg.record_intermediates = !a.dump.empty();
    const nn::Checkpoint ck = nn::load_checkpoint(a.ckpt);
    const auto inputs = resolve_inputs(a.in, "source");
    const bool batch = fs::is_directory(a.in);
    fs::path dest = a.out;
    if (dest.empty()) {
        if (g.out_dir.empty()) throw ArgumentError("translate needs --out");
        dest = batch ? fs::path(g.out_dir) : fs::path(g.out_dir) / "translated.png";
    }
    const fs::path dir = batch ? dest : (dest.has_parent_path() ? dest.parent_path() : fs::path("."));

    auto m = begin_manifest("translate", g);
    m.seed = cfg.seed;
    m.checkpoint_sha256 = ck.sha256;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        TranslationConfig c = cfg;
        if (batch) c.seed = derive_seed(cfg.seed, i);
        const ImageGrid src = load_image(inputs[i]);
        const auto r = translate(src, c, ck.generator, ck.schedule);
        // Side files follow the output name.
        const std::string stem = batch ? inputs[i].stem().string() : dest.stem().string();
        const fs::path target = batch ? dir / (stem + ".f32") : dest;
        save_image(r.output, target);
        m.artifacts.push_back(target.filename().string());
        if (a.save_conditions) {
            save_raw(r.high, dir / (stem + "_high.f32"));
            save_raw(r.low, dir / (stem + "_low.f32"));
        }
        if (!a.dump.empty()) {
            for (std::size_t k = 0; k < r.intermediates.size(); ++k) {
                char name[64];
                std::snprintf(name, sizeof name, "%s_t%02d.f32", stem.c_str(), r.start_step - static_cast<int>(k));
                save_raw(r.intermediates[k], fs::path(a.dump) / name);
            }
        }
        say(g, err, inputs[i].string(), " -> ", target.string());
    }
    m.config = {{"translate", cfg.to_json()}, {"ckpt", a.ckpt}, {"in", a.in}};
    finish_manifest(m, dir);
    out << "translated " << inputs.size() << " image(s)\n";
    return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    std::string ckpt, in, data, target, report, out, ablation;
    std::vector<double> etas{5, 10, 15, 20, 25};
    std::vector<int> tilde_ts{1, 2, 3, 4, 5};
    int count = 0;
};

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    if (a.in.empty() == a.data.empty()) throw ArgumentError("sweep needs exactly one of --in IMG or --data DIR");
    TranslationConfig base = translation_config(g, nullptr, 0, nullptr, 0, a.ablation);
    const nn::Checkpoint ck = nn::load_checkpoint(a.ckpt);
    SweepTable tab;
    if (!a.in.empty()) {
        const ImageGrid src = load_image(a.in);
        std::optional<ImageGrid> tgt;
        if (!a.target.empty()) tgt = load_image(a.target);
        tab = sweep(src, a.etas, a.tilde_ts, ck.generator, ck.schedule, tgt ? &*tgt : nullptr, base);
    } else {
        auto src = load_sources(a.data);
        auto tgt = load_targets(a.data);
        if (a.count > 0 && static_cast<std::size_t>(a.count) < src.size()) {
            src.resize(static_cast<std::size_t>(a.count));
            tgt.resize(static_cast<std::size_t>(a.count));
        }
        say(g, err, "sweeping ", a.etas.size(), "x", a.tilde_ts.size(), " cells over ", src.size(), " images");
        tab = sweep_dataset(src, tgt, a.etas, a.tilde_ts, ck.generator, ck.schedule, base);
    }
    fs::path report = a.report;
    if (report.empty()) report = out_dir_or(g, a.out, ".") / "sweep.csv";
    const fs::path dir = report.has_parent_path() ? report.parent_path() : fs::path(".");
    write_text(report, tab.to_csv());
    fs::path js = report;
    js.replace_extension(".json");
    write_text(js, tab.to_json().dump(2) + "\n");

    auto m = begin_manifest("sweep", g);
    m.seed = base.seed;
    m.checkpoint_sha256 = ck.sha256;
    m.config = {{"etas", a.etas}, {"tilde_ts", a.tilde_ts}, {"base", base.to_json()}, {"in", a.in}, {"data", a.data},
                {"count", a.count}};
    m.artifacts = {report.filename().string(), js.filename().string()};
    finish_manifest(m, dir);
    out << tab.to_csv();
    return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string data, a, b, out;
    int nbins = 64, count = 0;
    double phi = 0, psi = 0;
    CLI::Option *phi_o, *psi_o;
};

int cmd_analyze(const AnalyzeArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
    if (a.nbins < 2) throw ArgumentError("--nbins must be >= 2");
    std::vector<ImageGrid> srcs, tgts;
    json info = json::object();
    if (!a.data.empty()) {
        srcs = load_sources(a.data);
        tgts = load_targets(a.data);
        const auto man = read_manifest(a.data);
        info["band"] = {man.degradation.f_lo, man.degradation.f_hi};
    } else if (!a.a.empty() && !a.b.empty()) {
        srcs = load_all(resolve_inputs(a.a, "source"));
        tgts = load_all(resolve_inputs(a.b, "target"));
    } else {
        throw ArgumentError("analyze needs --data DIR or both --a and --b");
    }
    if (srcs.size() != tgts.size()) throw ArgumentError("analyze: the two sides differ in image count");
    if (a.count > 0 && static_cast<std::size_t>(a.count) < srcs.size()) {
        srcs.resize(static_cast<std::size_t>(a.count));
        tgts.resize(static_cast<std::size_t>(a.count));
    }
    if (srcs.empty()) throw ArgumentError("analyze: no images");

    SpectralProfile mean = radial_frequency_mse(srcs[0], tgts[0], a.nbins);
    for (std::size_t i = 1; i < srcs.size(); ++i) {
        const auto p = radial_frequency_mse(srcs[i], tgts[i], a.nbins);
        for (int k = 0; k < a.nbins; ++k) mean.values[k] += p.values[k];
    }
    for (double& v : mean.values) v /= static_cast<double>(srcs.size());
    const auto peak = std::max_element(mean.values.begin(), mean.values.end());
    info["peak_frequency"] = mean.center(static_cast<int>(peak - mean.values.begin()));
    info["pairs"] = srcs.size();
    info["nbins"] = a.nbins;

    const fs::path dir = out_dir_or(g, a.out, ".");
    write_profile_csv(mean, dir / "freq_mse_profile.csv");
    const SpectralProfile psd = radial_psd(tgts, a.nbins);
    write_profile_csv(psd, dir / "target_psd.csv");
    std::vector<std::string> artifacts = {"freq_mse_profile.csv", "target_psd.csv", "analysis.json"};
    try {
        const PowerLawFit fit = fit_psd_powerlaw(tgts, a.nbins);
        info["psd_fit"] = {{"k", fit.k}, {"a", fit.a}, {"assumption_violated", fit.assumption_violated}};
        if (given(a.phi_o) && given(a.psi_o)) {
            const auto ck_T = g.section("training").value("T", 8);
            SnrModelParams p{fit.k, fit.a, 1.0, a.phi, a.psi};
            info["tilde_T"] = select_tilde_T(p, make_schedule(ck_T));
        }
    } catch (const Error& e) {
        info["psd_fit_error"] = e.what();
    }
    write_text(dir / "analysis.json", info.dump(2) + "\n");
    auto m = begin_manifest("analyze", g);
    m.config = {{"data", a.data}, {"a", a.a}, {"b", a.b}, {"nbins", a.nbins}, {"count", a.count}};
    m.artifacts = artifacts;
    finish_manifest(m, dir);
    out << info.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string translated, source, target, data, report, out;
};

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
    std::vector<ImageGrid> tr = load_all(resolve_inputs(a.translated, "source"));
    std::vector<ImageGrid> src, tgt;
    if (!a.data.empty()) {
        src = load_sources(a.data);
        tgt = load_targets(a.data);
    } else {
        if (a.source.empty()) throw ArgumentError("evaluate needs --data DIR or --source");
        src = load_all(resolve_inputs(a.source, "source"));
        if (!a.target.empty()) tgt = load_all(resolve_inputs(a.target, "target"));
    }
    // A translated directory may cover a prefix of the dataset.
    if (tr.size() < src.size()) {
        src.resize(tr.size());
        if (!tgt.empty()) tgt.resize(tr.size());
    }
    const EvalReport rep = evaluate(tr, src, tgt);
    fs::path report = a.report;
    if (report.empty()) report = out_dir_or(g, a.out, ".") / "report.csv";
    const fs::path dir = report.has_parent_path() ? report.parent_path() : fs::path(".");
    write_text(report, rep.to_csv());
    fs::path js = report;
    js.replace_extension(".json");
    write_text(js, rep.to_json().dump(2) + "\n");
    auto m = begin_manifest("evaluate", g);
    m.config = {{"translated", a.translated}, {"source", a.source}, {"target", a.target}, {"data", a.data}};
    m.artifacts = {report.filename().string(), js.filename().string()};
    finish_manifest(m, dir);
    out << rep.to_json()["mean"].dump(2) << '\n';
    return 0;
}

// ------------------------------------------------------------------ filter

struct FilterArgs {
    std::string in, out;
    double eta = 10;
    int tilde_t = 4, T = 8;
    CLI::Option *eta_o, *tilde_o;
};

int cmd_filter(const FilterArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
    const TranslationConfig c = translation_config(g, a.eta_o, a.eta, a.tilde_o, a.tilde_t, "");
    const ImageGrid img = load_image(a.in);
    const NoiseSchedule sched = make_schedule(a.T);
    Rng rng(c.seed);
    const ImageGrid h = high_pass(img, c.eta);
    const ImageGrid l = low_pass(img, c.tilde_T, sched, rng);
    const fs::path dir = out_dir_or(g, a.out, ".");
    save_image(h, dir / "high.png");
    save_raw(h, dir / "high.f32");
    save_raw(l, dir / "low.f32");
    auto m = begin_manifest("filter", g);
    m.seed = c.seed;
    m.config = {{"in", a.in}, {"eta", c.eta}, {"tilde_t", c.tilde_T}, {"T", a.T}};
    m.artifacts = {"high.png", "high.f32", "low.f32"};
    finish_manifest(m, dir);
    out << "wrote high.png, high.f32 and low.f32 to " << dir.string() << '\n';
    return 0;
}

// ------------------------------------------------------------------- serve

struct ServeArgs {
    std::string ckpt, data, host = "127.0.0.1", ui;
    int port = 8080;
    std::size_t max_upload = std::size_t{8} << 20;
};

int cmd_serve(const ServeArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
    std::optional<nn::Checkpoint> ck;
    if (!a.ckpt.empty()) ck = nn::load_checkpoint(a.ckpt);
    ServiceConfig sc;
    sc.max_upload_bytes = a.max_upload;
    sc.ui_dir = a.ui;
    Service svc(sc, std::move(ck));
    if (!a.data.empty()) {
        const int n = svc.preload_dataset(a.data);
        out << "preloaded " << n << " pairs as source-NNNN / target-NNNN\n";
    }
    out << "listening on http://" << a.host << ':' << a.port << std::endl;
    (void)g;
    serve(svc, a.host, a.port);
    return 0;
}

json read_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path);
    try {
        json j = json::parse(f);
        if (!j.is_object()) throw FormatError("config must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw FormatError("config " + path + ": " + e.what());
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Frequency-guided diffusion toolkit: zero-shot image translation on synthetic phantoms.", "fgdm"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(tool_version()));
    Globals g;
    app.add_option("--config", g.config_path, "JSON config (sections: phantom, degradation, training, translate)")
        ->check(CLI::ExistingFile);
    g.seed_opt = app.add_option("--seed", g.seed, "Master seed");
    g.out_opt = app.add_option("--out", g.out_dir, "Output directory");
    app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

    std::function<int()> action;

    GenDataArgs gd;
    auto* sc = app.add_subcommand("gen-data", "Generate a paired phantom dataset");
    sc->add_option("--n", gd.n, "Number of pairs")->capture_default_str();
    gd.size_o = sc->add_option("--size", gd.size, "Image side in pixels");
    sc->add_option("--band", gd.band, "Degradation band lo,hi in cycles/pixel")->delimiter(',')->expected(2);
    gd.shading_o = sc->add_option("--shading", gd.shading, "RMS of the band-limited shading field");
    gd.streaks_o = sc->add_option("--streaks", gd.streaks, "Streak count");
    gd.streak_strength_o = sc->add_option("--streak-strength", gd.streak_strength, "Streak amplitude");
    sc->add_option("--out", gd.out, "Dataset directory");
    sc->callback([&] { action = [&] { return cmd_gen_data(gd, g, out, err); }; });

    TrainArgs ta;
    sc = app.add_subcommand("train", "Train on the target side of a dataset");
    sc->add_option("--data", ta.data, "Dataset directory")->required();
    ta.epochs_o = sc->add_option("--epochs", ta.epochs, "Epochs (default 60)");
    ta.batch_o = sc->add_option("--batch", ta.batch, "Batch size (default 8)");
    ta.T_o = sc->add_option("--T", ta.T, "Diffusion steps (default 8)");
    ta.eta_min_o = sc->add_option("--eta-min", ta.eta_min, "Lower end of the eta range (default 1)");
    ta.eta_max_o = sc->add_option("--eta-max", ta.eta_max, "Upper end of the eta range (default 25)");
    ta.lr_o = sc->add_option("--lr", ta.lr, "Initial learning rate (default 1e-4)");
    ta.lr_min_o = sc->add_option("--lr-min", ta.lr_min, "Final learning rate (default 1e-5)");
    ta.width_o = sc->add_option("--width", ta.width, "Base channel width of both networks");
    ta.betas_o = sc->add_option("--betas", ta.betas, "Adam beta1,beta2 (default 0.9,0.999)")->expected(2)->delimiter(',');
    ta.recon_o = sc->add_option("--recon-weight", ta.recon_weight, "Weight of the MSE term in adversarial mode");
    sc->add_option("--loss", ta.loss, "adversarial or simple")->check(CLI::IsMember({"adversarial", "simple"}));
    sc->add_option("--val-data", ta.val_data, "Held-out target dataset for val_psnr");
    sc->add_option("--val-count", ta.val_count, "Validation images used")->capture_default_str();
    ta.ckpt_every_o = sc->add_option("--checkpoint-every", ta.checkpoint_every, "Save every N epochs (0 = off)");
    sc->add_option("--out", ta.out, "Checkpoint file");
    sc->callback([&] { action = [&] { return cmd_train(ta, g, out, err); }; });

    TranslateArgs tr;
    sc = app.add_subcommand("translate", "Zero-shot translation of one image or a directory");
    sc->add_option("--ckpt", tr.ckpt, "Checkpoint file")->required();
    sc->add_option("--in", tr.in, "Source image, image directory or dataset")->required();
    tr.eta_o = sc->add_option("--eta", tr.eta, "High-pass threshold (default 10)");
    tr.tilde_o = sc->add_option("--tilde-t", tr.tilde_t, "Forward steps applied to the source (default 4)");
    sc->add_option("--ablation", tr.ablation, "full, no_high_freq or no_low_freq")
        ->check(CLI::IsMember({"full", "no_high_freq", "no_low_freq"}));
    sc->add_option("--dump-intermediates", tr.dump, "Directory for per-step states");
    sc->add_flag("--save-conditions", tr.save_conditions, "Also write H and the starting state");
    sc->add_option("--out", tr.out, "Output image (or directory for directory input)");
    sc->callback([&] { action = [&] { return cmd_translate(tr, g, out, err); }; });

    SweepArgs sw;
    sc = app.add_subcommand("sweep", "Translate over an eta x tilde_T grid");
    sc->add_option("--ckpt", sw.ckpt, "Checkpoint file")->required();
    sc->add_option("--in", sw.in, "Single source image");
    sc->add_option("--target", sw.target, "Paired target for --in");
    sc->add_option("--data", sw.data, "Dataset directory (dataset means)");
    sc->add_option("--count", sw.count, "Use the first N pairs of --data");
    sc->add_option("--etas", sw.etas, "Comma-separated eta values")->delimiter(',')->capture_default_str();
    sc->add_option("--tilde-ts", sw.tilde_ts, "Comma-separated tilde_T values")->delimiter(',')->capture_default_str();
    sc->add_option("--ablation", sw.ablation, "full, no_high_freq or no_low_freq")
        ->check(CLI::IsMember({"full", "no_high_freq", "no_low_freq"}));
    sc->add_option("--report", sw.report, "CSV path (a JSON copy is written alongside)");
    sc->add_option("--out", sw.out, "Output directory");
    sc->callback([&] { action = [&] { return cmd_sweep(sw, g, out, err); }; });

    AnalyzeArgs an;
    sc = app.add_subcommand("analyze", "Radial spectra of source/target differences");
    sc->add_option("--data", an.data, "Dataset directory");
    sc->add_option("--a", an.a, "First image, directory or dataset");
    sc->add_option("--b", an.b, "Second image, directory or dataset");
    sc->add_option("--nbins", an.nbins, "Radial bins")->capture_default_str();
    sc->add_option("--count", an.count, "Use the first N pairs");
    an.phi_o = sc->add_option("--phi", an.phi, "SNR corruption threshold for tilde_T selection");
    an.psi_o = sc->add_option("--psi", an.psi, "Target cutoff frequency for tilde_T selection");
    sc->add_option("--out", an.out, "Output directory");
    sc->callback([&] { action = [&] { return cmd_analyze(an, g, out, err); }; });

    EvaluateArgs ev;
    sc = app.add_subcommand("evaluate", "PSNR / SSIM / frequency MSE report");
    sc->add_option("--translated", ev.translated, "Translated image or directory")->required();
    sc->add_option("--data", ev.data, "Dataset supplying sources and targets");
    sc->add_option("--source", ev.source, "Source image or directory");
    sc->add_option("--target", ev.target, "Target image or directory");
    sc->add_option("--report", ev.report, "CSV path (a JSON copy is written alongside)");
    sc->add_option("--out", ev.out, "Output directory");
    sc->callback([&] { action = [&] { return cmd_evaluate(ev, g, out, err); }; });

    FilterArgs fi;
    sc = app.add_subcommand("filter", "Write H_eta and the low-pass starting state of an image");
    sc->add_option("--in", fi.in, "Input image")->required();
    fi.eta_o = sc->add_option("--eta", fi.eta, "High-pass threshold (default 10)");
    fi.tilde_o = sc->add_option("--tilde-t", fi.tilde_t, "Forward steps (default 4)");
    sc->add_option("--T", fi.T, "Schedule length")->capture_default_str();
    sc->add_option("--out", fi.out, "Output directory");
    sc->callback([&] { action = [&] { return cmd_filter(fi, g, out, err); }; });

    ServeArgs sv;
    sc = app.add_subcommand("serve", "HTTP API for interactive tuning");
    sc->add_option("--ckpt", sv.ckpt, "Checkpoint file (translate answers 409 without one)");
    sc->add_option("--data", sv.data, "Dataset to preload");
    sc->add_option("--host", sv.host)->capture_default_str();
    sc->add_option("--port", sv.port)->capture_default_str();
    sc->add_option("--max-upload", sv.max_upload, "Upload limit in bytes")->capture_default_str();
    sc->add_option("--ui", sv.ui, "Static UI bundle directory");
    sc->callback([&] { action = [&] { return cmd_serve(sv, g, out, err); }; });

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }
    try {
        g.config = read_config(g.config_path);
        return action ? action() : 1;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace fgdm::cli

// SPDX-License-Identifier: Apache-2.0
#include "fgdm/translate.hpp"

#include <cmath>
#include <sstream>

#include "fgdm/errors.hpp"
#include "fgdm/filters.hpp"
#include "fgdm/metrics.hpp"
#include "fgdm/spectral.hpp"

namespace fgdm {

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::NoHighFreq: return "no_high_freq";
        case Ablation::NoLowFreq: return "no_low_freq";
    }
    return "full";
}

Ablation parse_ablation(std::string_view s) {
    if (s == "full") return Ablation::Full;
    if (s == "no_high_freq") return Ablation::NoHighFreq;
    if (s == "no_low_freq") return Ablation::NoLowFreq;
    throw ArgumentError("unknown ablation '" + std::string(s) + "' (expected full, no_high_freq or no_low_freq)");
}

nlohmann::json TranslationConfig::to_json() const {
    return {{"eta", eta}, {"tilde_t", tilde_T}, {"seed", seed}, {"ablation", to_string(ablation)}};
}

TranslationConfig TranslationConfig::from_json(const nlohmann::json& j, TranslationConfig c) {
    c.eta = j.value("eta", c.eta);
    c.tilde_T = j.value("tilde_t", c.tilde_T);
    c.seed = j.value("seed", c.seed);
    if (j.contains("ablation")) c.ablation = parse_ablation(j["ablation"].get<std::string>());
    return c;
}

Denoiser make_denoiser(const nn::Generator<float>& gen) {
    return [&gen](const ImageGrid& s_t, int t, const ImageGrid& h, std::span<const double> z) {
        return nn::generator_predict(s_t, t, h, z, gen);
    };
}

TranslationResult translate(const ImageGrid& c0, const TranslationConfig& cfg, const Denoiser& denoiser,
                            int latent_dim, const NoiseSchedule& sched, Rng& rng) {
    if (c0.empty()) throw ArgumentError("translate: empty image");
    if (cfg.tilde_T < 1 || cfg.tilde_T > sched.T())
        throw ArgumentError("translate: tilde_T=" + std::to_string(cfg.tilde_T) + " outside [1," +
                            std::to_string(sched.T()) + "]");
    if (!(cfg.eta >= 0.0)) throw ArgumentError("translate: eta must be non-negative");
    if (latent_dim < 1) throw ArgumentError("translate: latent_dim must be positive");

    TranslationResult r;
    r.config = cfg;
    r.high = cfg.ablation == Ablation::NoHighFreq ? ImageGrid(c0.height(), c0.width(), 0.0) : high_pass(c0, cfg.eta);
    if (cfg.ablation == Ablation::NoLowFreq) {
        r.start_step = sched.T();
        r.low = white_noise(c0.height(), c0.width(), sched.sigma2(), rng).values;
    } else {
        r.start_step = cfg.tilde_T;
        r.low = low_pass(c0, cfg.tilde_T, sched, rng);
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    ImageGrid s = r.low;
    for (int t = r.start_step; t >= 1; --t) {
        std::vector<double> z(static_cast<std::size_t>(latent_dim));
        for (double& v : z) v = normal(rng);
        if (cfg.record_intermediates) r.intermediates.push_back(s);
        const ImageGrid s0_hat = denoiser(s, t, r.high, z);
        require_same_shape(s0_hat, c0, "translate: denoiser output");
        s = posterior_sample(s, s0_hat, t, sched, rng);
        r.latents.push_back(std::move(z));
    }
    r.output = clamp_unit(s);
    return r;
}

TranslationResult translate(const ImageGrid& c0, const TranslationConfig& cfg, const nn::Generator<float>& gen,
                            const NoiseSchedule& sched) {
    if (gen.arch().T != sched.T()) throw ArgumentError("translate: generator and schedule disagree on T");
    Rng rng(cfg.seed);
    return translate(c0, cfg, make_denoiser(gen), gen.arch().latent_dim, sched, rng);
}

double support_overlap(const ImageGrid& output, const ImageGrid& c0, double eta) {
    require_same_shape(output, c0, "support_overlap");
    const ImageGrid ho = high_pass(output, eta);
    const ImageGrid hc = high_pass(c0, eta);
    std::size_t both = 0, src = 0;
    for (std::size_t i = 0; i < hc.size(); ++i) {
        if (hc.values()[i] == 0.0) continue;
        ++src;
        if (ho.values()[i] != 0.0) ++both;
    }
    return src == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(src);
}

const SweepCell& SweepTable::at(double eta, int tilde_T) const {
    for (const auto& c : cells)
        if (c.eta == eta && c.tilde_T == tilde_T) return c;
    throw ArgumentError("sweep: no cell for the requested (eta, tilde_T)");
}

std::string SweepTable::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "eta,tilde_t,psnr_source,ssim_source,freq_mse_source";
    if (has_target) os << ",psnr_target,ssim_target,freq_mse_target";
    os << '\n';
    for (const auto& c : cells) {
        os << c.eta << ',' << c.tilde_T << ',' << c.psnr_source << ',' << c.ssim_source << ',' << c.freq_mse_source;
        if (has_target) os << ',' << *c.psnr_target << ',' << *c.ssim_target << ',' << *c.freq_mse_target;
        os << '\n';
    }
    return os.str();
}

nlohmann::json SweepTable::to_json() const {
    auto a = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json j = {{"eta", c.eta},
                            {"tilde_t", c.tilde_T},
                            {"psnr_source", c.psnr_source},
                            {"ssim_source", c.ssim_source},
                            {"freq_mse_source", c.freq_mse_source}};
        if (c.psnr_target) {
            j["psnr_target"] = *c.psnr_target;
            j["ssim_target"] = *c.ssim_target;
            j["freq_mse_target"] = *c.freq_mse_target;
        }
        a.push_back(j);
    }
    return a;
}

namespace {

void check_grid(std::span<const double> etas, std::span<const int> tilde_Ts) {
    if (etas.empty() || tilde_Ts.empty()) throw ArgumentError("sweep: eta and tilde_T lists must be non-empty");
}

void score(SweepCell& c, const ImageGrid& out, const ImageGrid& src, const ImageGrid* tgt) {
    c.psnr_source = psnr(out, src);
    c.ssim_source = ssim(out, src);
    c.freq_mse_source = frequency_mse(out, src);
    if (tgt) {
        c.psnr_target = psnr(out, *tgt);
        c.ssim_target = ssim(out, *tgt);
        c.freq_mse_target = frequency_mse(out, *tgt);
    }
}

}  // namespace

SweepTable sweep(const ImageGrid& c0, std::span<const double> etas, std::span<const int> tilde_Ts,
                 const nn::Generator<float>& gen, const NoiseSchedule& sched, const ImageGrid* target,
                 const TranslationConfig& base) {
    check_grid(etas, tilde_Ts);
    SweepTable tab;
    tab.has_target = target != nullptr;
    for (double eta : etas)
        for (int tt : tilde_Ts) {
            TranslationConfig cfg = base;
            cfg.eta = eta;
            cfg.tilde_T = tt;
            SweepCell c;
            c.eta = eta;
            c.tilde_T = tt;
            c.result = translate(c0, cfg, gen, sched);
            score(c, c.result->output, c0, target);
            tab.cells.push_back(std::move(c));
        }
    return tab;
}

SweepTable sweep_dataset(std::span<const ImageGrid> sources, std::span<const ImageGrid> targets,
                         std::span<const double> etas, std::span<const int> tilde_Ts,
                         const nn::Generator<float>& gen, const NoiseSchedule& sched, const TranslationConfig& base) {
    check_grid(etas, tilde_Ts);
    if (sources.empty()) throw ArgumentError("sweep: empty source list");
    if (!targets.empty() && targets.size() != sources.size())
        throw ArgumentError("sweep: source and target lists differ in length");
    SweepTable tab;
    tab.has_target = !targets.empty();
    const double inv = 1.0 / static_cast<double>(sources.size());
    for (double eta : etas)
        for (int tt : tilde_Ts) {
            SweepCell m;
            m.eta = eta;
            m.tilde_T = tt;
            if (tab.has_target) m.psnr_target = m.ssim_target = m.freq_mse_target = 0.0;
            for (std::size_t i = 0; i < sources.size(); ++i) {
                TranslationConfig cfg = base;
                cfg.eta = eta;
                cfg.tilde_T = tt;
                cfg.seed = derive_seed(base.seed, i);
                const auto r = translate(sources[i], cfg, gen, sched);
                SweepCell c;
                score(c, r.output, sources[i], tab.has_target ? &targets[i] : nullptr);
                m.psnr_source += c.psnr_source * inv;
                m.ssim_source += c.ssim_source * inv;
                m.freq_mse_source += c.freq_mse_source * inv;
                if (tab.has_target) {
                    *m.psnr_target += *c.psnr_target * inv;
                    *m.ssim_target += *c.ssim_target * inv;
                    *m.freq_mse_target += *c.freq_mse_target * inv;
                }
            }
            tab.cells.push_back(std::move(m));
        }
    return tab;
}

}  // namespace fgdm

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/nn/model.hpp"
#include "fgdm/schedule.hpp"

namespace fgdm {

enum class Ablation { Full, NoHighFreq, NoLowFreq };

std::string to_string(Ablation a);
/// Accepts "full", "no_high_freq", "no_low_freq".
Ablation parse_ablation(std::string_view s);

struct TranslationConfig {
    double eta = 10.0;
    int tilde_T = 4;
    std::uint64_t seed = 0;
    Ablation ablation = Ablation::Full;
    bool record_intermediates = false;

    nlohmann::json to_json() const;
    static TranslationConfig from_json(const nlohmann::json& j, TranslationConfig base);
    static TranslationConfig from_json(const nlohmann::json& j) { return from_json(j, TranslationConfig()); }
};

struct TranslationResult {
    ImageGrid output;
    /// State fed to each denoiser call, from the first step down to t = 1.
    std::vector<ImageGrid> intermediates;
    ImageGrid high;  // H_eta (zeros under no_high_freq)
    ImageGrid low;   // starting state of the reverse chain
    /// Latent drawn for each step, in call order.
    std::vector<std::vector<double>> latents;
    TranslationConfig config;
    int start_step = 0;
};

/// s0_hat = f(s_t, t, H, latent). Lets tests plug in oracles and counters.
using Denoiser = std::function<ImageGrid(const ImageGrid& s_t, int t, const ImageGrid& h, std::span<const double> latent)>;

Denoiser make_denoiser(const nn::Generator<float>& gen);

/// Reverse chain started from the partially diffused source. Draw order from
/// `rng`: starting noise, then per step the latent followed by the posterior noise.
TranslationResult translate(const ImageGrid& c0, const TranslationConfig& cfg, const Denoiser& denoiser,
                            int latent_dim, const NoiseSchedule& sched, Rng& rng);
/// Seeds the stream from cfg.seed.
TranslationResult translate(const ImageGrid& c0, const TranslationConfig& cfg, const nn::Generator<float>& gen,
                            const NoiseSchedule& sched);

/// Fraction of the source's high-pass support that survives in the output:
/// |supp H(out) ∩ supp H(c0)| / |supp H(c0)|; 1 when the source support is empty.
double support_overlap(const ImageGrid& output, const ImageGrid& c0, double eta);

struct SweepCell {
    double eta = 0.0;
    int tilde_T = 0;
    double psnr_source = 0.0, ssim_source = 0.0, freq_mse_source = 0.0;
    std::optional<double> psnr_target, ssim_target, freq_mse_target;
    /// Only kept by the single-image sweep.
    std::optional<TranslationResult> result;
};

struct SweepTable {
    std::vector<SweepCell> cells;  // row-major over (eta, tilde_T)
    bool has_target = false;

    const SweepCell& at(double eta, int tilde_T) const;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Cartesian product on one image; every cell runs with base.seed.
SweepTable sweep(const ImageGrid& c0, std::span<const double> etas, std::span<const int> tilde_Ts,
                 const nn::Generator<float>& gen, const NoiseSchedule& sched, const ImageGrid* target = nullptr,
                 const TranslationConfig& base = {});

/// Dataset-mean variant; image i runs with derive_seed(base.seed, i).
/// `targets` may be empty.
SweepTable sweep_dataset(std::span<const ImageGrid> sources, std::span<const ImageGrid> targets,
                         std::span<const double> etas, std::span<const int> tilde_Ts,
                         const nn::Generator<float>& gen, const NoiseSchedule& sched,
                         const TranslationConfig& base = {});

}  // namespace fgdm

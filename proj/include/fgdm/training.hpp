// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/nn/model.hpp"
#include "fgdm/schedule.hpp"

namespace fgdm {

enum class LossMode {
    Adversarial,  // non-saturating GAN on posterior pairs, plus recon_weight * MSE(s0_hat, x0)
    Simple,       // MSE(s0_hat, x0) only; the discriminator is left untouched
};

struct TrainingConfig {
    int epochs = 60;
    int batch_size = 8;
    double lr_initial = 1e-4;
    double lr_min = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int eta_min = 1;
    int eta_max = 25;
    int T = 8;
    std::uint64_t seed = 0;
    LossMode loss = LossMode::Adversarial;
    double recon_weight = 1.0;
    /// Call the checkpoint hook every N epochs; 0 disables it.
    int checkpoint_every = 0;
    /// eta used for the validation reconstructions.
    double val_eta = 10.0;
    nn::GeneratorArch generator;
    nn::DiscriminatorArch discriminator;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j, TrainingConfig base);
    static TrainingConfig from_json(const nlohmann::json& j) { return from_json(j, TrainingConfig()); }
};

/// Cosine annealing from lr_initial at epoch 0 to lr_min at epoch epochs-1.
double learning_rate(const TrainingConfig& cfg, int epoch);

struct EpochLog {
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;  // adversarial term (MSE in simple mode)
    double recon_mse = 0.0;
    double lr = 0.0;
    double val_psnr = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> eta_counts;  // index k counts draws of eta_min + k
    double eta_coverage() const;
};

struct TrainingLog {
    std::vector<EpochLog> epochs;
    /// Columns: epoch,d_loss,g_loss,lr,val_psnr
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// One minibatch with every random draw already made.
struct TrainingBatch {
    int n = 0;
    std::vector<int> t;
    std::vector<int> eta;
    nn::Tensor<float> x0, s_t, h, real_prev, fake_noise, z;
};

struct StepLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
    double recon_mse = 0.0;
};

/// Owns both networks and their Adam state.
class Trainer {
public:
    Trainer(const TrainingConfig& cfg);

    TrainingBatch make_batch(std::span<const ImageGrid> images, std::span<const std::size_t> idx, Rng& rng) const;

    /// Discriminator loss on the batch under the current weights.
    double evaluate_discriminator(const TrainingBatch& b) const;
    /// One discriminator update; returns the loss before the update.
    double discriminator_step(const TrainingBatch& b, double lr);
    /// One generator update; returns the losses before the update.
    StepLosses generator_step(const TrainingBatch& b, double lr);
    /// Discriminator step then generator step, sharing one generator forward.
    /// Equivalent to calling the two in sequence.
    StepLosses train_step(const TrainingBatch& b, double lr);

    const nn::Generator<float>& generator() const { return gen_; }
    const nn::Discriminator<float>& discriminator() const { return disc_; }
    nn::Generator<float>& generator() { return gen_; }
    nn::Discriminator<float>& discriminator() { return disc_; }
    const NoiseSchedule& schedule() const { return sched_; }
    const TrainingConfig& config() const { return cfg_; }

private:
    void fake_prev(const TrainingBatch& b, const nn::Tensor<float>& s0_hat, nn::Tensor<float>& out) const;
    double d_update(const TrainingBatch& b, const nn::Tensor<float>& s0_hat, double lr);
    StepLosses g_update(const TrainingBatch& b, const nn::Tensor<float>& s0_hat, nn::GeneratorCache<float>& gc,
                        double lr);

    TrainingConfig cfg_;
    NoiseSchedule sched_;
    nn::Generator<float> gen_;
    nn::Discriminator<float> disc_;
    std::vector<float> gm_, gv_, dm_, dv_;
    long gstep_ = 0, dstep_ = 0;
};

struct TrainingResult {
    nn::Generator<float> generator;
    nn::Discriminator<float> discriminator;
    NoiseSchedule schedule;
    TrainingLog log;
};

struct TrainingHooks {
    /// After every epoch (progress reporting).
    std::function<void(const EpochLog&)> on_epoch;
    /// Every cfg.checkpoint_every epochs.
    std::function<void(int epoch, const nn::Generator<float>&, const nn::Discriminator<float>&)> on_checkpoint;
};

/// Target-domain training. `validation` (held-out targets, may be empty)
/// feeds val_psnr: the mean PSNR of the full reverse chain from t = T.
/// Throws DivergenceError after 3 consecutive non-finite batch losses.
TrainingResult train(std::span<const ImageGrid> targets, const TrainingConfig& cfg,
                     std::span<const ImageGrid> validation = {}, const TrainingHooks& hooks = {});

/// Mean PSNR of translate(x, eta, tilde_T = T) against x over the images.
double reconstruction_psnr(std::span<const ImageGrid> images, const nn::Generator<float>& gen,
                           const NoiseSchedule& sched, double eta, std::uint64_t seed);

}  // namespace fgdm

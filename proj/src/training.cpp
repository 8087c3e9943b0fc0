// SPDX-License-Identifier: Apache-2.0
#include "fgdm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fgdm/errors.hpp"
#include "fgdm/filters.hpp"
#include "fgdm/metrics.hpp"
#include "fgdm/simd/kernels.hpp"
#include "fgdm/translate.hpp"

namespace fgdm {

namespace {

const char* loss_name(LossMode m) { return m == LossMode::Simple ? "simple" : "adversarial"; }

LossMode parse_loss(const std::string& s) {
    if (s == "adversarial") return LossMode::Adversarial;
    if (s == "simple") return LossMode::Simple;
    throw ArgumentError("unknown loss mode '" + s + "' (expected adversarial or simple)");
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void TrainingConfig::validate() const {
    if (epochs < 0) throw ArgumentError("epochs must be >= 0");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(lr_min > 0.0) || !(lr_min < lr_initial)) throw ArgumentError("need 0 < lr_min < lr_initial");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("Adam betas must lie in [0,1)");
    if (eta_min < 0 || eta_max < eta_min || eta_max > 255) throw ArgumentError("eta_range must satisfy 0 <= min <= max <= 255");
    if (T < 1) throw ArgumentError("T must be >= 1");
    if (!(recon_weight >= 0.0)) throw ArgumentError("recon_weight must be >= 0");
    if (checkpoint_every < 0) throw ArgumentError("checkpoint_every must be >= 0");
}

nlohmann::json TrainingConfig::to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr_initial", lr_initial},
            {"lr_min", lr_min},
            {"lr_schedule", "cosine"},
            {"beta1", beta1},
            {"beta2", beta2},
            {"eta_range", {eta_min, eta_max}},
            {"T", T},
            {"seed", seed},
            {"loss", loss_name(loss)},
            {"recon_weight", recon_weight},
            {"checkpoint_every", checkpoint_every},
            {"val_eta", val_eta},
            {"generator", generator.to_json()},
            {"discriminator", discriminator.to_json()}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j, TrainingConfig c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr_initial = j.value("lr_initial", c.lr_initial);
    c.lr_min = j.value("lr_min", c.lr_min);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    if (j.contains("eta_range")) {
        c.eta_min = j["eta_range"].at(0).get<int>();
        c.eta_max = j["eta_range"].at(1).get<int>();
    }
    c.T = j.value("T", c.T);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss")) c.loss = parse_loss(j["loss"].get<std::string>());
    c.recon_weight = j.value("recon_weight", c.recon_weight);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.val_eta = j.value("val_eta", c.val_eta);
    if (j.contains("generator")) c.generator = nn::GeneratorArch::from_json(j["generator"]);
    if (j.contains("discriminator")) c.discriminator = nn::DiscriminatorArch::from_json(j["discriminator"]);
    return c;
}

double learning_rate(const TrainingConfig& cfg, int epoch) {
    if (cfg.epochs <= 1) return cfg.lr_initial;
    const double p = std::clamp(static_cast<double>(epoch) / (cfg.epochs - 1), 0.0, 1.0);
    return cfg.lr_min + 0.5 * (cfg.lr_initial - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * p));
}

double EpochLog::eta_coverage() const {
    if (eta_counts.empty()) return 0.0;
    const auto hit = std::count_if(eta_counts.begin(), eta_counts.end(), [](int c) { return c > 0; });
    return static_cast<double>(hit) / static_cast<double>(eta_counts.size());
}

std::string TrainingLog::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "epoch,d_loss,g_loss,lr,val_psnr\n";
    for (const auto& e : epochs) os << e.epoch << ',' << e.d_loss << ',' << e.g_loss << ',' << e.lr << ',' << e.val_psnr << '\n';
    return os.str();
}

nlohmann::json TrainingLog::to_json() const {
    auto a = nlohmann::json::array();
    for (const auto& e : epochs) {
        nlohmann::json j = {{"epoch", e.epoch},     {"d_loss", e.d_loss},         {"g_loss", e.g_loss},
                            {"recon_mse", e.recon_mse}, {"lr", e.lr},             {"eta_counts", e.eta_counts},
                            {"eta_coverage", e.eta_coverage()}};
        j["val_psnr"] = std::isfinite(e.val_psnr) ? nlohmann::json(e.val_psnr) : nlohmann::json(nullptr);
        a.push_back(j);
    }
    return a;
}

Trainer::Trainer(const TrainingConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    cfg_.generator.T = cfg_.T;
    cfg_.discriminator.T = cfg_.T;
    sched_ = make_schedule(cfg_.T);
    gen_ = nn::Generator<float>(cfg_.generator, derive_seed(cfg_.seed, 1));
    disc_ = nn::Discriminator<float>(cfg_.discriminator, derive_seed(cfg_.seed, 2));
    gm_.assign(gen_.params().size(), 0.0f);
    gv_.assign(gen_.params().size(), 0.0f);
    dm_.assign(disc_.params().size(), 0.0f);
    dv_.assign(disc_.params().size(), 0.0f);
}

TrainingBatch Trainer::make_batch(std::span<const ImageGrid> images, std::span<const std::size_t> idx,
                                  Rng& rng) const {
    if (idx.empty()) throw ArgumentError("make_batch: empty index list");
    const int n = static_cast<int>(idx.size());
    const ImageGrid& first = images[idx[0]];
    const int H = first.height(), W = first.width();
    TrainingBatch b;
    b.n = n;
    b.x0.reshape(n, 1, H, W);
    b.s_t.reshape(n, 1, H, W);
    b.h.reshape(n, 1, H, W);
    b.real_prev.reshape(n, 1, H, W);
    b.fake_noise.reshape(n, 1, H, W);
    b.z.reshape(n, cfg_.generator.latent_dim, 1, 1);
    std::uniform_int_distribution<int> tdist(1, cfg_.T);
    std::uniform_int_distribution<int> edist(cfg_.eta_min, cfg_.eta_max);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto put = [](nn::Tensor<float>& dst, int i, const ImageGrid& g) {
        float* p = dst.sample(i);
        for (std::size_t k = 0; k < g.size(); ++k) p[k] = static_cast<float>(g.values()[k]);
    };
    for (int i = 0; i < n; ++i) {
        const ImageGrid& x0 = images[idx[i]];
        if (x0.height() != H || x0.width() != W) throw ArgumentError("training images must share one shape");
        const int t = tdist(rng);
        const int eta = edist(rng);
        b.t.push_back(t);
        b.eta.push_back(eta);
        const ImageGrid st = forward_sample(x0, t, sched_, rng);
        const ImageGrid prev = posterior_sample(st, x0, t, sched_, rng);
        put(b.x0, i, x0);
        put(b.s_t, i, st);
        put(b.h, i, high_pass(x0, eta));
        put(b.real_prev, i, prev);
        float* fz = b.fake_noise.sample(i);
        for (std::size_t k = 0; k < b.fake_noise.sample_size(); ++k) fz[k] = static_cast<float>(normal(rng));
        float* z = b.z.sample(i);
        for (std::size_t k = 0; k < b.z.sample_size(); ++k) z[k] = static_cast<float>(normal(rng));
    }
    return b;
}

void Trainer::fake_prev(const TrainingBatch& b, const nn::Tensor<float>& s0_hat, nn::Tensor<float>& out) const {
    out.reshape(b.n, 1, s0_hat.h, s0_hat.w);
    for (int i = 0; i < b.n; ++i) {
        const PosteriorCoefs c = posterior_coefficients(sched_, b.t[i]);
        const float a = static_cast<float>(c.coef_s0), s = static_cast<float>(c.coef_st);
        const float sd = static_cast<float>(std::sqrt(c.var * sched_.sigma2()));
        const float* g = s0_hat.sample(i);
        const float* st = b.s_t.sample(i);
        const float* e = b.fake_noise.sample(i);
        float* o = out.sample(i);
        for (std::size_t k = 0; k < out.sample_size(); ++k) o[k] = a * g[k] + s * st[k] + sd * e[k];
    }
}

namespace {

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

}  // namespace

double Trainer::evaluate_discriminator(const TrainingBatch& b) const {
    nn::GeneratorCache<float> gc;
    nn::Tensor<float> s0_hat, fake;
    gen_.forward(b.s_t, b.h, b.t, b.z, s0_hat, gc);
    fake_prev(b, s0_hat, fake);
    nn::DiscriminatorCache<float> dc;
    std::vector<float> lr, lf;
    disc_.forward(b.real_prev, b.s_t, b.h, b.t, lr, dc);
    disc_.forward(fake, b.s_t, b.h, b.t, lf, dc);
    return nn::discriminator_loss(widen(lr), widen(lf));
}

double Trainer::discriminator_step(const TrainingBatch& b, double lr) {
    nn::GeneratorCache<float> gc;
    nn::Tensor<float> s0_hat;
    gen_.forward(b.s_t, b.h, b.t, b.z, s0_hat, gc);
    return d_update(b, s0_hat, lr);
}

StepLosses Trainer::generator_step(const TrainingBatch& b, double lr) {
    nn::GeneratorCache<float> gc;
    nn::Tensor<float> s0_hat;
    gen_.forward(b.s_t, b.h, b.t, b.z, s0_hat, gc);
    return g_update(b, s0_hat, gc, lr);
}

StepLosses Trainer::train_step(const TrainingBatch& b, double lr) {
    nn::GeneratorCache<float> gc;
    nn::Tensor<float> s0_hat;
    gen_.forward(b.s_t, b.h, b.t, b.z, s0_hat, gc);
    double d = 0.0;
    if (cfg_.loss == LossMode::Adversarial) d = d_update(b, s0_hat, lr);
    StepLosses out;
    if (finite(d)) out = g_update(b, s0_hat, gc, lr);
    out.d_loss = d;
    return out;
}

double Trainer::d_update(const TrainingBatch& b, const nn::Tensor<float>& s0_hat, double lr) {
    nn::Tensor<float> fake;
    fake_prev(b, s0_hat, fake);

    nn::DiscriminatorCache<float> cr, cf;
    std::vector<float> l_real, l_fake;
    disc_.forward(b.real_prev, b.s_t, b.h, b.t, l_real, cr);
    disc_.forward(fake, b.s_t, b.h, b.t, l_fake, cf);
    const double loss = nn::discriminator_loss(widen(l_real), widen(l_fake));
    if (!finite(loss)) return loss;

    const double inv = 1.0 / b.n;
    std::vector<float> dr(b.n), df(b.n);
    for (int i = 0; i < b.n; ++i) {
        dr[i] = static_cast<float>(-nn::sigmoid(-l_real[i]) * inv);
        df[i] = static_cast<float>(nn::sigmoid(l_fake[i]) * inv);
    }
    auto& ps = disc_.params();
    ps.zero_grad();
    disc_.backward(dr, cr, nullptr);
    disc_.backward(df, cf, nullptr);
    simd::adam_update(ps.values(), ps.grads(), dm_, dv_, {lr, cfg_.beta1, cfg_.beta2, 1e-8, ++dstep_});
    return loss;
}

StepLosses Trainer::g_update(const TrainingBatch& b, const nn::Tensor<float>& s0_hat,
                             nn::GeneratorCache<float>& gc, double lr) {
    StepLosses out;
    const double npix = static_cast<double>(s0_hat.size());
    nn::Tensor<float> dout(s0_hat.n, s0_hat.c, s0_hat.h, s0_hat.w);
    double se = 0.0;
    for (std::size_t k = 0; k < s0_hat.size(); ++k) {
        const double d = static_cast<double>(s0_hat.data[k]) - b.x0.data[k];
        se += d * d;
    }
    out.recon_mse = se / npix;

    const bool adversarial = cfg_.loss == LossMode::Adversarial;
    const double wmse = adversarial ? cfg_.recon_weight : 1.0;
    if (adversarial) {
        nn::Tensor<float> fake;
        fake_prev(b, s0_hat, fake);
        nn::DiscriminatorCache<float> dc;
        std::vector<float> lf;
        disc_.forward(fake, b.s_t, b.h, b.t, lf, dc);
        out.g_loss = nn::generator_loss(widen(lf));
        if (!finite(out.g_loss)) return out;
        std::vector<float> dl(b.n);
        for (int i = 0; i < b.n; ++i) dl[i] = static_cast<float>(-nn::sigmoid(-lf[i]) / b.n);
        nn::Tensor<float> dfake;
        disc_.backward(dl, dc, &dfake);
        disc_.params().zero_grad();
        for (int i = 0; i < b.n; ++i) {
            const float a = static_cast<float>(posterior_coefficients(sched_, b.t[i]).coef_s0);
            const float* src = dfake.sample(i);
            float* dst = dout.sample(i);
            for (std::size_t k = 0; k < dout.sample_size(); ++k) dst[k] = a * src[k];
        }
    } else {
        out.g_loss = out.recon_mse;
    }
    if (!finite(out.recon_mse)) return out;
    if (wmse > 0.0) {
        const float s = static_cast<float>(2.0 * wmse / npix);
        for (std::size_t k = 0; k < dout.size(); ++k) dout.data[k] += s * (s0_hat.data[k] - b.x0.data[k]);
    }
    auto& ps = gen_.params();
    ps.zero_grad();
    gen_.backward(dout, gc);
    simd::adam_update(ps.values(), ps.grads(), gm_, gv_, {lr, cfg_.beta1, cfg_.beta2, 1e-8, ++gstep_});
    return out;
}

double reconstruction_psnr(std::span<const ImageGrid> images, const nn::Generator<float>& gen,
                           const NoiseSchedule& sched, double eta, std::uint64_t seed) {
    if (images.empty()) throw ArgumentError("reconstruction_psnr: no images");
    double s = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        TranslationConfig tc;
        tc.eta = eta;
        tc.tilde_T = sched.T();
        tc.seed = derive_seed(seed, i);
        s += psnr(translate(images[i], tc, gen, sched).output, images[i]);
    }
    return s / static_cast<double>(images.size());
}

TrainingResult train(std::span<const ImageGrid> targets, const TrainingConfig& cfg,
                     std::span<const ImageGrid> validation, const TrainingHooks& hooks) {
    if (targets.empty()) throw ArgumentError("train: empty dataset");
    for (const auto& img : targets)
        if (!img.same_shape(targets[0])) throw ArgumentError("train: images must share one shape");
    Trainer tr(cfg);
    const TrainingConfig& c = tr.config();
    TrainingResult res;
    res.schedule = tr.schedule();

    Rng rng(derive_seed(c.seed, 3));
    std::vector<std::size_t> order(targets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    int bad = 0;
    for (int ep = 0; ep < c.epochs; ++ep) {
        EpochLog log;
        log.epoch = ep;
        log.lr = learning_rate(c, ep);
        log.eta_counts.assign(static_cast<std::size_t>(c.eta_max - c.eta_min + 1), 0);
        std::shuffle(order.begin(), order.end(), rng);
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(c.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(c.batch_size));
            const auto b = tr.make_batch(targets, std::span(order).subspan(start, end - start), rng);
            for (int e : b.eta) ++log.eta_counts[static_cast<std::size_t>(e - c.eta_min)];
            const StepLosses g = tr.train_step(b, log.lr);
            const double d = g.d_loss;
            if (!finite(d) || !finite(g.g_loss) || !finite(g.recon_mse)) {
                if (++bad >= 3)
                    throw DivergenceError("training diverged: 3 consecutive non-finite losses at epoch " +
                                          std::to_string(ep) + ", batch " + std::to_string(batches));
                continue;
            }
            bad = 0;
            log.d_loss += d;
            log.g_loss += g.g_loss;
            log.recon_mse += g.recon_mse;
            ++batches;
        }
        if (batches > 0) {
            log.d_loss /= batches;
            log.g_loss /= batches;
            log.recon_mse /= batches;
        }
        if (!validation.empty())
            log.val_psnr = reconstruction_psnr(validation, tr.generator(), tr.schedule(), c.val_eta,
                                               derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(ep)));
        res.log.epochs.push_back(log);
        if (hooks.on_epoch) hooks.on_epoch(log);
        if (hooks.on_checkpoint && c.checkpoint_every > 0 && (ep + 1) % c.checkpoint_every == 0)
            hooks.on_checkpoint(ep, tr.generator(), tr.discriminator());
    }
    res.generator = tr.generator();
    res.discriminator = tr.discriminator();
    return res;
}

}  // namespace fgdm

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fgdm/errors.hpp"
#include "fgdm/phantoms.hpp"
#include "fgdm/training.hpp"
#include "helpers.hpp"

using namespace fgdm;

namespace {

TrainingConfig tiny_config() {
    TrainingConfig c;
    c.epochs = 1;
    c.batch_size = 4;
    c.lr_initial = 1e-3;
    c.lr_min = 1e-4;
    c.generator = {4, 2, 8, 8};
    c.discriminator = {4, 8, 8};
    return c;
}

std::vector<ImageGrid> tiny_targets(int n) {
    PhantomSpec p;
    p.size = 32;
    std::vector<ImageGrid> out;
    Rng rng(1);
    for (int i = 0; i < n; ++i) out.push_back(make_target_phantom(p, rng));
    return out;
}

template <class Net>
bool same_weights(const Net& a, const Net& b) {
    const auto x = a.params().values(), y = b.params().values();
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace

TEST_SUITE("training") {
    TEST_CASE("learning rate schedule") {
        TrainingConfig c;
        CHECK(learning_rate(c, 0) == doctest::Approx(1e-4));
        CHECK(learning_rate(c, c.epochs - 1) == doctest::Approx(1e-5));
        for (int e = 1; e < c.epochs; ++e) CHECK(learning_rate(c, e) < learning_rate(c, e - 1));
        c.epochs = 1;
        CHECK(learning_rate(c, 0) == doctest::Approx(1e-4));
    }

    TEST_CASE("config validation and json") {
        TrainingConfig c = tiny_config();
        c.lr_min = 1.0;
        CHECK_THROWS_AS(c.validate(), ArgumentError);
        c = tiny_config();
        c.eta_max = 0;
        CHECK_THROWS_AS(c.validate(), ArgumentError);
        c = tiny_config();
        c.recon_weight = 20;
        c.loss = LossMode::Simple;
        const TrainingConfig r = TrainingConfig::from_json(c.to_json());
        CHECK(r.to_json() == c.to_json());
        const TrainingConfig partial = TrainingConfig::from_json(nlohmann::json{{"epochs", 3}}, c);
        CHECK(partial.epochs == 3);
        CHECK(partial.recon_weight == 20);
    }

    TEST_CASE("zero epochs is a no-op") {
        TrainingConfig c = tiny_config();
        c.epochs = 0;
        const auto data = tiny_targets(4);
        const TrainingResult r = train(data, c);
        CHECK(r.log.epochs.empty());
        const Trainer fresh(c);
        CHECK(same_weights(r.generator, fresh.generator()));
        CHECK(same_weights(r.discriminator, fresh.discriminator()));
    }

    TEST_CASE("empty dataset") {
        CHECK_THROWS_AS(train(std::vector<ImageGrid>{}, tiny_config()), ArgumentError);
    }

    TEST_CASE("batch construction") {
        const TrainingConfig c = tiny_config();
        const Trainer tr(c);
        const auto data = tiny_targets(4);
        const std::vector<std::size_t> idx{0, 2, 3};
        Rng r1(4), r2(4);
        const TrainingBatch b = tr.make_batch(data, idx, r1);
        CHECK(b.n == 3);
        CHECK(b.x0.n == 3);
        CHECK(b.x0.h == 32);
        for (int i = 0; i < 3; ++i) {
            CHECK(b.t[i] >= 1);
            CHECK(b.t[i] <= c.T);
            CHECK(b.eta[i] >= c.eta_min);
            CHECK(b.eta[i] <= c.eta_max);
        }
        CHECK(b.z.c == c.generator.latent_dim);
        const TrainingBatch b2 = tr.make_batch(data, idx, r2);
        CHECK(b.s_t.data == b2.s_t.data);
        CHECK(b.real_prev.data == b2.real_prev.data);
    }

    TEST_CASE("discriminator step descends on its own batch") {
        Trainer tr(tiny_config());
        const auto data = tiny_targets(4);
        const std::vector<std::size_t> idx{0, 1, 2, 3};
        Rng rng(5);
        const TrainingBatch b = tr.make_batch(data, idx, rng);
        const double before = tr.evaluate_discriminator(b);
        CHECK(tr.discriminator_step(b, 1e-3) == doctest::Approx(before));
        CHECK(tr.evaluate_discriminator(b) < before);
    }

    TEST_CASE("generator step lowers reconstruction error") {
        TrainingConfig c = tiny_config();
        c.loss = LossMode::Simple;
        Trainer tr(c);
        const auto data = tiny_targets(4);
        const std::vector<std::size_t> idx{0, 1, 2, 3};
        Rng rng(6);
        const TrainingBatch b = tr.make_batch(data, idx, rng);
        const Trainer untouched(c);
        const double first = tr.generator_step(b, 1e-3).recon_mse;
        const double second = tr.generator_step(b, 1e-3).recon_mse;
        CHECK(second < first);
        // Simple mode leaves the critic alone.
        CHECK(same_weights(tr.discriminator(), untouched.discriminator()));
    }

    TEST_CASE("fused step equals the two steps in sequence") {
        TrainingConfig c = tiny_config();
        c.recon_weight = 5;
        Trainer fused(c), split(c);
        const auto data = tiny_targets(4);
        const std::vector<std::size_t> idx{3, 1, 0, 2};
        Rng rng(7);
        for (int k = 0; k < 2; ++k) {
            const TrainingBatch b = fused.make_batch(data, idx, rng);
            const StepLosses f = fused.train_step(b, 1e-3);
            const double d = split.discriminator_step(b, 1e-3);
            const StepLosses g = split.generator_step(b, 1e-3);
            CHECK(f.d_loss == d);
            CHECK(f.g_loss == g.g_loss);
            CHECK(f.recon_mse == g.recon_mse);
        }
        CHECK(same_weights(fused.generator(), split.generator()));
        CHECK(same_weights(fused.discriminator(), split.discriminator()));
    }

    TEST_CASE("one epoch covers the threshold range and logs") {
        TrainingConfig c = tiny_config();
        c.batch_size = 8;
        const auto data = tiny_targets(200);
        const auto val = tiny_targets(2);
        int epochs_seen = 0;
        TrainingHooks hooks;
        hooks.on_epoch = [&](const EpochLog&) { ++epochs_seen; };
        const TrainingResult r = train(data, c, val, hooks);
        REQUIRE(r.log.epochs.size() == 1);
        CHECK(epochs_seen == 1);
        const EpochLog& e = r.log.epochs[0];
        CHECK(e.eta_counts.size() == 25);
        CHECK(std::accumulate(e.eta_counts.begin(), e.eta_counts.end(), 0) == 200);
        CHECK(e.eta_coverage() >= 0.9);
        CHECK(std::isfinite(e.d_loss));
        CHECK(std::isfinite(e.val_psnr));
        const std::string csv = r.log.to_csv();
        CHECK(csv.rfind("epoch,d_loss,g_loss,lr,val_psnr\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    }

    TEST_CASE("training is reproducible") {
        TrainingConfig c = tiny_config();
        const auto data = tiny_targets(8);
        const TrainingResult a = train(data, c), b = train(data, c);
        CHECK(same_weights(a.generator, b.generator));
        CHECK(a.log.to_csv() == b.log.to_csv());
    }

    TEST_CASE("checkpoint hook cadence") {
        TrainingConfig c = tiny_config();
        c.epochs = 4;
        c.checkpoint_every = 2;
        const auto data = tiny_targets(4);
        std::vector<int> seen;
        TrainingHooks hooks;
        hooks.on_checkpoint = [&](int ep, const nn::Generator<float>&, const nn::Discriminator<float>&) {
            seen.push_back(ep);
        };
        train(data, c, {}, hooks);
        CHECK(seen.size() == 2);
    }

    TEST_CASE("divergence guard") {
        TrainingConfig c = tiny_config();
        c.lr_initial = 1e30;
        c.lr_min = 1e29;
        c.epochs = 3;
        const auto data = tiny_targets(32);
        CHECK_THROWS_AS(train(data, c), DivergenceError);
    }
}

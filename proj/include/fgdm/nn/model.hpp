// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <json.hpp>
#include <span>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/nn/layers.hpp"
#include "fgdm/nn/tensor.hpp"

namespace fgdm::nn {

struct GeneratorArch {
    int base_width = 16;
    int latent_dim = 8;
    int temb_dim = 32;
    int T = 8;

    nlohmann::json to_json() const;
    static GeneratorArch from_json(const nlohmann::json& j);
    bool operator==(const GeneratorArch&) const = default;
};

struct DiscriminatorArch {
    int base_width = 16;
    int temb_dim = 32;
    int T = 8;

    nlohmann::json to_json() const;
    static DiscriminatorArch from_json(const nlohmann::json& j);
    bool operator==(const DiscriminatorArch&) const = default;
};

/// Intermediates kept by Generator::forward for the backward pass.
template <class T>
struct GeneratorCache {
    Tensor<T> x_in, emb;
    Tensor<T> tb[5];
    Tensor<T> a1, h1, a1b, x1, p1;
    Tensor<T> a2, h2, a2b, x2, p2, zmap, zc;
    Tensor<T> ab, hb, abb, bott, up2, c2;
    Tensor<T> ad, hd, adb, u2, up1, c1;
    Tensor<T> ae, he, aeb, u1;
};

/// Three-resolution U-Net predicting s0 from [s_t, H]. Each block adds a
/// learned projection of the sinusoidal step embedding; the latent is
/// broadcast to latent_dim constant planes and concatenated at the bottleneck.
template <class T>
class Generator {
public:
    Generator() = default;
    Generator(const GeneratorArch& arch, std::uint64_t seed);

    const GeneratorArch& arch() const { return arch_; }
    ParamStore<T>& params() { return ps_; }
    const ParamStore<T>& params() const { return ps_; }

    /// s_t, h: [n,1,H,W] with H, W divisible by 4; t: n steps in [1,T];
    /// z: [n, latent_dim, 1, 1]. out: [n,1,H,W].
    void forward(const Tensor<T>& s_t, const Tensor<T>& h, std::span<const int> t, const Tensor<T>& z,
                 Tensor<T>& out, GeneratorCache<T>& cache) const;
    /// Accumulates parameter grads from d(loss)/d(out).
    void backward(const Tensor<T>& dout, GeneratorCache<T>& cache);

private:
    GeneratorArch arch_;
    ParamStore<T> ps_;
    Linear<T> te_[5];
    Conv2d<T> e1a_, e1b_, e2a_, e2b_, ba_, bb_, d2a_, d2b_, d1a_, d1b_, out_;
};

template <class T>
struct DiscriminatorCache {
    Tensor<T> x_in, emb;
    Tensor<T> tb[4];
    Tensor<T> pre[4];
    Tensor<T> act[4];
    Tensor<T> pooled;
};

/// Four stride-2 conv blocks on [s_prev, s_t, H] with the step embedding
/// added per block, global mean, linear head. Emits logits; the score is
/// sigmoid(logit).
template <class T>
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(const DiscriminatorArch& arch, std::uint64_t seed);

    const DiscriminatorArch& arch() const { return arch_; }
    ParamStore<T>& params() { return ps_; }
    const ParamStore<T>& params() const { return ps_; }

    /// Inputs [n,1,H,W] each. logits has n entries.
    void forward(const Tensor<T>& s_prev, const Tensor<T>& s_t, const Tensor<T>& h, std::span<const int> t,
                 std::vector<T>& logits, DiscriminatorCache<T>& cache) const;
    /// Accumulates parameter grads; writes d(loss)/d(s_prev) when given.
    void backward(std::span<const T> dlogits, DiscriminatorCache<T>& cache, Tensor<T>* ds_prev);

    static constexpr double kSlope = 0.2;

private:
    DiscriminatorArch arch_;
    ParamStore<T> ps_;
    Conv2d<T> conv_[4];
    Linear<T> te_[4];
    Linear<T> fc_;
};

/// Mean of softplus(-l_real) + softplus(l_fake), i.e. -log D(real) - log(1 - D(fake)).
double discriminator_loss(std::span<const double> logit_real, std::span<const double> logit_fake);
/// Mean of softplus(-l_fake), i.e. -log D(fake).
double generator_loss(std::span<const double> logit_fake);

/// Single-image convenience wrappers on float weights.
ImageGrid generator_predict(const ImageGrid& s_t, int t, const ImageGrid& h, std::span<const double> latent,
                            const Generator<float>& gen);
double discriminator_score(const ImageGrid& s_prev, const ImageGrid& s_t, const ImageGrid& h, int t,
                           const Discriminator<float>& disc);

template <class T>
Tensor<T> to_tensor(std::span<const ImageGrid> imgs);
ImageGrid to_image(const Tensor<float>& t, int index);

}  // namespace fgdm::nn

// SPDX-License-Identifier: Apache-2.0
#include "fgdm/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fgdm/errors.hpp"

namespace fgdm::nn {

nlohmann::json GeneratorArch::to_json() const {
    return {{"kind", "unet3"}, {"base_width", base_width}, {"latent_dim", latent_dim}, {"temb_dim", temb_dim}, {"T", T}};
}

GeneratorArch GeneratorArch::from_json(const nlohmann::json& j) {
    GeneratorArch a;
    a.base_width = j.value("base_width", a.base_width);
    a.latent_dim = j.value("latent_dim", a.latent_dim);
    a.temb_dim = j.value("temb_dim", a.temb_dim);
    a.T = j.value("T", a.T);
    return a;
}

nlohmann::json DiscriminatorArch::to_json() const {
    return {{"kind", "strided4"}, {"base_width", base_width}, {"temb_dim", temb_dim}, {"T", T}};
}

DiscriminatorArch DiscriminatorArch::from_json(const nlohmann::json& j) {
    DiscriminatorArch a;
    a.base_width = j.value("base_width", a.base_width);
    a.temb_dim = j.value("temb_dim", a.temb_dim);
    a.T = j.value("T", a.T);
    return a;
}

namespace {

void check_steps(std::span<const int> t, int n, int T) {
    if (static_cast<int>(t.size()) != n) throw ArgumentError("step count does not match batch size");
    for (int v : t)
        if (v < 1 || v > T) throw ArgumentError("step " + std::to_string(v) + " outside [1," + std::to_string(T) + "]");
}

template <class T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

template <class T>
Generator<T>::Generator(const GeneratorArch& arch, std::uint64_t seed) : arch_(arch) {
    const int w = arch.base_width, nz = arch.latent_dim, E = arch.temb_dim;
    if (w < 1 || nz < 1 || E < 2 || E % 2 || arch.T < 1) throw ArgumentError("invalid generator architecture");
    const int widths[5] = {w, 2 * w, 4 * w, 2 * w, w};
    for (int i = 0; i < 5; ++i) te_[i] = Linear<T>(ps_, "temb" + std::to_string(i), E, widths[i]);
    e1a_ = Conv2d<T>(ps_, "enc1a", 2, w);
    e1b_ = Conv2d<T>(ps_, "enc1b", w, w);
    e2a_ = Conv2d<T>(ps_, "enc2a", w, 2 * w);
    e2b_ = Conv2d<T>(ps_, "enc2b", 2 * w, 2 * w);
    ba_ = Conv2d<T>(ps_, "mida", 2 * w + nz, 4 * w);
    bb_ = Conv2d<T>(ps_, "midb", 4 * w, 4 * w);
    d2a_ = Conv2d<T>(ps_, "dec2a", 6 * w, 2 * w);
    d2b_ = Conv2d<T>(ps_, "dec2b", 2 * w, 2 * w);
    d1a_ = Conv2d<T>(ps_, "dec1a", 3 * w, w);
    d1b_ = Conv2d<T>(ps_, "dec1b", w, w);
    out_ = Conv2d<T>(ps_, "out", w, 1);

    Rng rng(seed);
    for (auto& l : te_) l.init(ps_, rng);
    for (auto* c : {&e1a_, &e1b_, &e2a_, &e2b_, &ba_, &bb_, &d2a_, &d2b_, &d1a_, &d1b_, &out_}) c->init(ps_, rng);
}

template <class T>
void Generator<T>::forward(const Tensor<T>& s_t, const Tensor<T>& h, std::span<const int> t, const Tensor<T>& z,
                           Tensor<T>& out, GeneratorCache<T>& c) const {
    if (!s_t.same_shape(h) || s_t.c != 1) throw ArgumentError("generator: s_t and H must be matching [n,1,H,W]");
    if (s_t.h % 4 || s_t.w % 4) throw ArgumentError("generator: spatial size must be divisible by 4");
    if (z.n != s_t.n || z.sample_size() != std::size_t(arch_.latent_dim))
        throw ArgumentError("generator: latent must be [n, latent_dim]");
    check_steps(t, s_t.n, arch_.T);

    concat_channels(s_t, h, c.x_in);
    timestep_embedding(t, arch_.temb_dim, c.emb);
    for (int i = 0; i < 5; ++i) te_[i].forward(ps_, c.emb, c.tb[i]);

    e1a_.forward(ps_, c.x_in, c.a1);
    add_channel_bias(c.a1, c.tb[0]);
    silu(c.a1, c.h1);
    e1b_.forward(ps_, c.h1, c.a1b);
    silu(c.a1b, c.x1);

    avgpool2(c.x1, c.p1);
    e2a_.forward(ps_, c.p1, c.a2);
    add_channel_bias(c.a2, c.tb[1]);
    silu(c.a2, c.h2);
    e2b_.forward(ps_, c.h2, c.a2b);
    silu(c.a2b, c.x2);

    avgpool2(c.x2, c.p2);
    c.zmap.reshape(z.n, arch_.latent_dim, c.p2.h, c.p2.w);
    for (int i = 0; i < z.n; ++i)
        for (int k = 0; k < arch_.latent_dim; ++k) {
            T* p = c.zmap.channel(i, k);
            std::fill(p, p + c.zmap.plane(), z.data[std::size_t(i) * arch_.latent_dim + k]);
        }
    concat_channels(c.p2, c.zmap, c.zc);
    ba_.forward(ps_, c.zc, c.ab);
    add_channel_bias(c.ab, c.tb[2]);
    silu(c.ab, c.hb);
    bb_.forward(ps_, c.hb, c.abb);
    silu(c.abb, c.bott);

    upsample2(c.bott, c.up2);
    concat_channels(c.up2, c.x2, c.c2);
    d2a_.forward(ps_, c.c2, c.ad);
    add_channel_bias(c.ad, c.tb[3]);
    silu(c.ad, c.hd);
    d2b_.forward(ps_, c.hd, c.adb);
    silu(c.adb, c.u2);

    upsample2(c.u2, c.up1);
    concat_channels(c.up1, c.x1, c.c1);
    d1a_.forward(ps_, c.c1, c.ae);
    add_channel_bias(c.ae, c.tb[4]);
    silu(c.ae, c.he);
    d1b_.forward(ps_, c.he, c.aeb);
    silu(c.aeb, c.u1);

    out_.forward(ps_, c.u1, out);
}

template <class T>
void Generator<T>::backward(const Tensor<T>& dout, GeneratorCache<T>& c) {
    const int w = arch_.base_width;
    Tensor<T> g, g2, dtb, skip1, skip2, tmp;

    out_.backward(ps_, c.u1, dout, &g);  // g = d u1
    silu_backward(c.aeb, g, g2);
    d1b_.backward(ps_, c.he, g2, &g);
    silu_backward(c.ae, g, g2);  // g2 = d ae
    channel_bias_grad(g2, dtb);
    te_[4].backward(ps_, c.emb, dtb, nullptr);
    d1a_.backward(ps_, c.c1, g2, &g);
    split_channels(g, 2 * w, tmp, skip1);
    upsample2_backward(tmp, g);  // g = d u2

    silu_backward(c.adb, g, g2);
    d2b_.backward(ps_, c.hd, g2, &g);
    silu_backward(c.ad, g, g2);
    channel_bias_grad(g2, dtb);
    te_[3].backward(ps_, c.emb, dtb, nullptr);
    d2a_.backward(ps_, c.c2, g2, &g);
    split_channels(g, 4 * w, tmp, skip2);
    upsample2_backward(tmp, g);  // g = d bott

    silu_backward(c.abb, g, g2);
    bb_.backward(ps_, c.hb, g2, &g);
    silu_backward(c.ab, g, g2);
    channel_bias_grad(g2, dtb);
    te_[2].backward(ps_, c.emb, dtb, nullptr);
    ba_.backward(ps_, c.zc, g2, &g);
    split_channels(g, 2 * w, tmp, g2);  // latent planes are not trained through
    avgpool2_backward(tmp, g);
    add_into(g, skip2);  // g = d x2

    silu_backward(c.a2b, g, g2);
    e2b_.backward(ps_, c.h2, g2, &g);
    silu_backward(c.a2, g, g2);
    channel_bias_grad(g2, dtb);
    te_[1].backward(ps_, c.emb, dtb, nullptr);
    e2a_.backward(ps_, c.p1, g2, &g);
    avgpool2_backward(g, tmp);
    add_into(tmp, skip1);  // tmp = d x1

    silu_backward(c.a1b, tmp, g2);
    e1b_.backward(ps_, c.h1, g2, &g);
    silu_backward(c.a1, g, g2);
    channel_bias_grad(g2, dtb);
    te_[0].backward(ps_, c.emb, dtb, nullptr);
    e1a_.backward(ps_, c.x_in, g2, nullptr);
}

template <class T>
Discriminator<T>::Discriminator(const DiscriminatorArch& arch, std::uint64_t seed) : arch_(arch) {
    const int w = arch.base_width, E = arch.temb_dim;
    if (w < 1 || E < 2 || E % 2 || arch.T < 1) throw ArgumentError("invalid discriminator architecture");
    const int ch[5] = {3, w, 2 * w, 4 * w, 4 * w};
    for (int i = 0; i < 4; ++i) {
        conv_[i] = Conv2d<T>(ps_, "block" + std::to_string(i), ch[i], ch[i + 1], 2);
        te_[i] = Linear<T>(ps_, "temb" + std::to_string(i), E, ch[i + 1]);
    }
    fc_ = Linear<T>(ps_, "head", 4 * w, 1);
    Rng rng(seed);
    for (int i = 0; i < 4; ++i) {
        conv_[i].init(ps_, rng);
        te_[i].init(ps_, rng);
    }
    fc_.init(ps_, rng);
}

template <class T>
void Discriminator<T>::forward(const Tensor<T>& s_prev, const Tensor<T>& s_t, const Tensor<T>& h,
                               std::span<const int> t, std::vector<T>& logits, DiscriminatorCache<T>& c) const {
    if (!s_prev.same_shape(s_t) || !s_prev.same_shape(h) || s_prev.c != 1)
        throw ArgumentError("discriminator: inputs must be matching [n,1,H,W]");
    check_steps(t, s_prev.n, arch_.T);
    Tensor<T> tmp;
    concat_channels(s_prev, s_t, tmp);
    concat_channels(tmp, h, c.x_in);
    timestep_embedding(t, arch_.temb_dim, c.emb);
    const Tensor<T>* x = &c.x_in;
    for (int i = 0; i < 4; ++i) {
        conv_[i].forward(ps_, *x, c.pre[i]);
        te_[i].forward(ps_, c.emb, c.tb[i]);
        add_channel_bias(c.pre[i], c.tb[i]);
        leaky_relu(c.pre[i], T(kSlope), c.act[i]);
        x = &c.act[i];
    }
    global_mean(c.act[3], c.pooled);
    Tensor<T> out;
    fc_.forward(ps_, c.pooled, out);
    logits.assign(out.data.begin(), out.data.end());
}

template <class T>
void Discriminator<T>::backward(std::span<const T> dlogits, DiscriminatorCache<T>& c, Tensor<T>* ds_prev) {
    Tensor<T> dl(static_cast<int>(dlogits.size()), 1, 1, 1);
    std::copy(dlogits.begin(), dlogits.end(), dl.data.begin());
    Tensor<T> g, dpre, dtb;
    fc_.backward(ps_, c.pooled, dl, &g);
    Tensor<T> dact;
    global_mean_backward(g, c.act[3].h, c.act[3].w, dact);
    for (int i = 3; i >= 0; --i) {
        leaky_relu_backward(c.pre[i], T(kSlope), dact, dpre);
        channel_bias_grad(dpre, dtb);
        te_[i].backward(ps_, c.emb, dtb, nullptr);
        const Tensor<T>& input = i > 0 ? c.act[i - 1] : c.x_in;
        const bool need_dx = i > 0 || ds_prev != nullptr;
        conv_[i].backward(ps_, input, dpre, need_dx ? &g : nullptr);
        if (need_dx) std::swap(dact, g);
    }
    if (ds_prev) {
        ds_prev->reshape(c.x_in.n, 1, c.x_in.h, c.x_in.w);
        for (int i = 0; i < c.x_in.n; ++i) std::copy(dact.channel(i, 0), dact.channel(i, 0) + dact.plane(), ds_prev->sample(i));
    }
}

double discriminator_loss(std::span<const double> logit_real, std::span<const double> logit_fake) {
    if (logit_real.empty() || logit_fake.empty()) throw ArgumentError("discriminator_loss: empty batch");
    double r = 0.0, f = 0.0;
    for (double l : logit_real) r += softplus(-l);
    for (double l : logit_fake) f += softplus(l);
    return r / logit_real.size() + f / logit_fake.size();
}

double generator_loss(std::span<const double> logit_fake) {
    if (logit_fake.empty()) throw ArgumentError("generator_loss: empty batch");
    double s = 0.0;
    for (double l : logit_fake) s += softplus(-l);
    return s / logit_fake.size();
}

template <class T>
Tensor<T> to_tensor(std::span<const ImageGrid> imgs) {
    if (imgs.empty()) throw ArgumentError("to_tensor: no images");
    Tensor<T> t(static_cast<int>(imgs.size()), 1, imgs[0].height(), imgs[0].width());
    for (std::size_t i = 0; i < imgs.size(); ++i) {
        require_same_shape(imgs[0], imgs[i], "to_tensor");
        auto v = imgs[i].values();
        std::transform(v.begin(), v.end(), t.sample(static_cast<int>(i)), [](double x) { return static_cast<T>(x); });
    }
    return t;
}

ImageGrid to_image(const Tensor<float>& t, int index) {
    ImageGrid img(t.h, t.w);
    auto v = img.values();
    const float* p = t.channel(index, 0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = p[i];
    return img;
}

ImageGrid generator_predict(const ImageGrid& s_t, int t, const ImageGrid& h, std::span<const double> latent,
                            const Generator<float>& gen) {
    require_same_shape(s_t, h, "generator_predict");
    if (static_cast<int>(latent.size()) != gen.arch().latent_dim)
        throw ArgumentError("generator_predict: latent has wrong length");
    const Tensor<float> xs = to_tensor<float>(std::span(&s_t, 1));
    const Tensor<float> hs = to_tensor<float>(std::span(&h, 1));
    Tensor<float> z(1, gen.arch().latent_dim, 1, 1);
    for (std::size_t i = 0; i < latent.size(); ++i) z.data[i] = static_cast<float>(latent[i]);
    GeneratorCache<float> cache;
    Tensor<float> out;
    const int steps[1] = {t};
    gen.forward(xs, hs, steps, z, out, cache);
    return to_image(out, 0);
}

double discriminator_score(const ImageGrid& s_prev, const ImageGrid& s_t, const ImageGrid& h, int t,
                           const Discriminator<float>& disc) {
    require_same_shape(s_prev, s_t, "discriminator_score");
    require_same_shape(s_prev, h, "discriminator_score");
    DiscriminatorCache<float> cache;
    std::vector<float> logits;
    const int steps[1] = {t};
    disc.forward(to_tensor<float>(std::span(&s_prev, 1)), to_tensor<float>(std::span(&s_t, 1)),
                 to_tensor<float>(std::span(&h, 1)), steps, logits, cache);
    // Saturated logits would round to exactly 0 or 1; keep the score open.
    return std::clamp(sigmoid(logits[0]), std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template Tensor<float> to_tensor<float>(std::span<const ImageGrid>);
template Tensor<double> to_tensor<double>(std::span<const ImageGrid>);

}  // namespace fgdm::nn

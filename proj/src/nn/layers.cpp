// SPDX-License-Identifier: Apache-2.0
#include "fgdm/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "fgdm/errors.hpp"
#include "fgdm/simd/kernels.hpp"

namespace fgdm::nn {
namespace {

using simd::Trans;

template <class T>
std::vector<T>& scratch(int slot) {
    thread_local std::vector<T> bufs[2];
    return bufs[slot];
}

// col[(ci*9 + ky*3 + kx)][oy*ow + ox] = x[ci][oy*s + ky - 1][ox*s + kx - 1]
template <class T>
void im2col(const T* x, int c, int h, int w, int stride, int oh, int ow, T* col) {
    const std::size_t ohw = std::size_t(oh) * ow;
    for (int ci = 0; ci < c; ++ci) {
        const T* xc = x + std::size_t(ci) * h * w;
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                T* row = col + (std::size_t(ci) * 9 + ky * 3 + kx) * ohw;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - 1;
                    T* dst = row + std::size_t(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + ow, T(0));
                        continue;
                    }
                    const T* src = xc + std::size_t(iy) * w;
                    if (stride == 1) {
                        // ix = ox + kx - 1
                        const int lo = std::max(0, 1 - kx);
                        const int hi = std::min(ow, w + 1 - kx);
                        std::fill(dst, dst + lo, T(0));
                        std::copy(src + lo + kx - 1, src + hi + kx - 1, dst + lo);
                        std::fill(dst + hi, dst + ow, T(0));
                    } else {
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride + kx - 1;
                            dst[ox] = (ix < 0 || ix >= w) ? T(0) : src[ix];
                        }
                    }
                }
            }
    }
}

template <class T>
void col2im(const T* col, int c, int h, int w, int stride, int oh, int ow, T* x) {
    const std::size_t ohw = std::size_t(oh) * ow;
    std::fill(x, x + std::size_t(c) * h * w, T(0));
    for (int ci = 0; ci < c; ++ci) {
        T* xc = x + std::size_t(ci) * h * w;
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const T* row = col + (std::size_t(ci) * 9 + ky * 3 + kx) * ohw;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    const T* src = row + std::size_t(oy) * ow;
                    T* dst = xc + std::size_t(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - 1;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
    }
}

template <class T>
void uniform_init(T* p, std::size_t n, double bound, Rng& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<T>(u(rng));
}

}  // namespace

template <class T>
Conv2d<T>::Conv2d(ParamStore<T>& ps, const std::string& name, int cin_, int cout_, int stride_)
    : cin(cin_), cout(cout_), stride(stride_) {
    if (stride != 1 && stride != 2) throw ArgumentError("conv stride must be 1 or 2");
    w_off = ps.add(name + ".weight", std::size_t(cout) * cin * 9);
    b_off = ps.add(name + ".bias", cout);
}

template <class T>
void Conv2d<T>::init(ParamStore<T>& ps, Rng& rng) const {
    const double bound = 1.0 / std::sqrt(double(cin) * 9);
    uniform_init(ps.value(w_off), std::size_t(cout) * cin * 9, bound, rng);
    uniform_init(ps.value(b_off), cout, bound, rng);
}

template <class T>
void Conv2d<T>::forward(const ParamStore<T>& ps, const Tensor<T>& x, Tensor<T>& y) const {
    if (x.c != cin) throw ArgumentError("conv: channel mismatch");
    const int oh = out_size(x.h), ow = out_size(x.w);
    y.reshape(x.n, cout, oh, ow);
    const int K = cin * 9;
    const int ohw = oh * ow;
    auto& col = scratch<T>(0);
    col.resize(std::size_t(K) * ohw);
    const T* W = ps.value(w_off);
    const T* b = ps.value(b_off);
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), cin, x.h, x.w, stride, oh, ow, col.data());
        T* ys = y.sample(i);
        simd::gemm(Trans::No, Trans::No, cout, ohw, K, T(1), W, K, col.data(), ohw, T(0), ys, ohw);
        for (int co = 0; co < cout; ++co) {
            T* p = ys + std::size_t(co) * ohw;
            const T bv = b[co];
            for (int j = 0; j < ohw; ++j) p[j] += bv;
        }
    }
}

template <class T>
void Conv2d<T>::backward(ParamStore<T>& ps, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) const {
    const int oh = out_size(x.h), ow = out_size(x.w);
    if (dy.n != x.n || dy.c != cout || dy.h != oh || dy.w != ow) throw ArgumentError("conv backward: shape mismatch");
    const int K = cin * 9;
    const int ohw = oh * ow;
    auto& col = scratch<T>(0);
    auto& dcol = scratch<T>(1);
    col.resize(std::size_t(K) * ohw);
    const T* W = ps.value(w_off);
    T* dW = ps.grad(w_off);
    T* db = ps.grad(b_off);
    if (dx) {
        dx->reshape(x.n, x.c, x.h, x.w);
        dcol.resize(std::size_t(K) * ohw);
    }
    for (int i = 0; i < x.n; ++i) {
        const T* dys = dy.sample(i);
        im2col(x.sample(i), cin, x.h, x.w, stride, oh, ow, col.data());
        simd::gemm(Trans::No, Trans::Yes, cout, K, ohw, T(1), dys, ohw, col.data(), ohw, T(1), dW, K);
        for (int co = 0; co < cout; ++co) {
            const T* p = dys + std::size_t(co) * ohw;
            T s = 0;
            for (int j = 0; j < ohw; ++j) s += p[j];
            db[co] += s;
        }
        if (dx) {
            simd::gemm(Trans::Yes, Trans::No, K, ohw, cout, T(1), W, K, dys, ohw, T(0), dcol.data(), ohw);
            col2im(dcol.data(), cin, x.h, x.w, stride, oh, ow, dx->sample(i));
        }
    }
}

template <class T>
Linear<T>::Linear(ParamStore<T>& ps, const std::string& name, int in_, int out_) : in(in_), out(out_) {
    w_off = ps.add(name + ".weight", std::size_t(out) * in);
    b_off = ps.add(name + ".bias", out);
}

template <class T>
void Linear<T>::init(ParamStore<T>& ps, Rng& rng) const {
    const double bound = 1.0 / std::sqrt(double(in));
    uniform_init(ps.value(w_off), std::size_t(out) * in, bound, rng);
    uniform_init(ps.value(b_off), out, bound, rng);
}

template <class T>
void Linear<T>::forward(const ParamStore<T>& ps, const Tensor<T>& x, Tensor<T>& y) const {
    if (x.sample_size() != std::size_t(in)) throw ArgumentError("linear: input width mismatch");
    y.reshape(x.n, out, 1, 1);
    simd::gemm(Trans::No, Trans::Yes, x.n, out, in, T(1), x.data.data(), in, ps.value(w_off), in, T(0), y.data.data(),
               out);
    const T* b = ps.value(b_off);
    for (int i = 0; i < x.n; ++i)
        for (int o = 0; o < out; ++o) y.data[std::size_t(i) * out + o] += b[o];
}

template <class T>
void Linear<T>::backward(ParamStore<T>& ps, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) const {
    simd::gemm(Trans::Yes, Trans::No, out, in, x.n, T(1), dy.data.data(), out, x.data.data(), in, T(1),
               ps.grad(w_off), in);
    T* db = ps.grad(b_off);
    for (int i = 0; i < x.n; ++i)
        for (int o = 0; o < out; ++o) db[o] += dy.data[std::size_t(i) * out + o];
    if (dx) {
        dx->reshape(x.n, x.c, x.h, x.w);
        simd::gemm(Trans::No, Trans::No, x.n, in, out, T(1), dy.data.data(), out, ps.value(w_off), in, T(0),
                   dx->data.data(), in);
    }
}

template <class T>
void timestep_embedding(std::span<const int> t, int dim, Tensor<T>& out) {
    if (dim < 2 || dim % 2) throw ArgumentError("timestep embedding dim must be even");
    const int half = dim / 2;
    out.reshape(static_cast<int>(t.size()), dim, 1, 1);
    for (std::size_t i = 0; i < t.size(); ++i)
        for (int j = 0; j < half; ++j) {
            const double w = 10.0 * std::exp(-std::log(1000.0) * j / half);
            const double a = t[i] * w;
            out.data[i * dim + j] = static_cast<T>(std::sin(a));
            out.data[i * dim + half + j] = static_cast<T>(std::cos(a));
        }
}

template <class T>
void add_channel_bias(Tensor<T>& y, const Tensor<T>& b) {
    const std::size_t pl = y.plane();
    for (int i = 0; i < y.n; ++i)
        for (int c = 0; c < y.c; ++c) {
            const T v = b.data[std::size_t(i) * y.c + c];
            T* p = y.channel(i, c);
            for (std::size_t j = 0; j < pl; ++j) p[j] += v;
        }
}

template <class T>
void channel_bias_grad(const Tensor<T>& dy, Tensor<T>& db) {
    db.reshape(dy.n, dy.c, 1, 1);
    const std::size_t pl = dy.plane();
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c) {
            const T* p = dy.channel(i, c);
            T s = 0;
            for (std::size_t j = 0; j < pl; ++j) s += p[j];
            db.data[std::size_t(i) * dy.c + c] = s;
        }
}

template <class T>
void silu(const Tensor<T>& a, Tensor<T>& y) {
    y.reshape(a.n, a.c, a.h, a.w);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T v = a.data[i];
        y.data[i] = v / (T(1) + std::exp(-v));
    }
}

template <class T>
void silu_backward(const Tensor<T>& a, const Tensor<T>& dy, Tensor<T>& da) {
    da.reshape(a.n, a.c, a.h, a.w);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T v = a.data[i];
        const T s = T(1) / (T(1) + std::exp(-v));
        da.data[i] = dy.data[i] * s * (T(1) + v * (T(1) - s));
    }
}

template <class T>
void leaky_relu(const Tensor<T>& a, T slope, Tensor<T>& y) {
    y.reshape(a.n, a.c, a.h, a.w);
    for (std::size_t i = 0; i < a.size(); ++i) y.data[i] = a.data[i] > T(0) ? a.data[i] : slope * a.data[i];
}

template <class T>
void leaky_relu_backward(const Tensor<T>& a, T slope, const Tensor<T>& dy, Tensor<T>& da) {
    da.reshape(a.n, a.c, a.h, a.w);
    for (std::size_t i = 0; i < a.size(); ++i) da.data[i] = a.data[i] > T(0) ? dy.data[i] : slope * dy.data[i];
}

template <class T>
void avgpool2(const Tensor<T>& x, Tensor<T>& y) {
    if (x.h % 2 || x.w % 2) throw ArgumentError("avgpool2 needs even spatial size");
    y.reshape(x.n, x.c, x.h / 2, x.w / 2);
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c) {
            const T* s = x.channel(i, c);
            T* d = y.channel(i, c);
            for (int oy = 0; oy < y.h; ++oy)
                for (int ox = 0; ox < y.w; ++ox) {
                    const T* p = s + std::size_t(2 * oy) * x.w + 2 * ox;
                    d[std::size_t(oy) * y.w + ox] = T(0.25) * (p[0] + p[1] + p[x.w] + p[x.w + 1]);
                }
        }
}

template <class T>
void avgpool2_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.reshape(dy.n, dy.c, dy.h * 2, dy.w * 2);
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c) {
            const T* s = dy.channel(i, c);
            T* d = dx.channel(i, c);
            for (int y = 0; y < dx.h; ++y)
                for (int x = 0; x < dx.w; ++x) d[std::size_t(y) * dx.w + x] = T(0.25) * s[std::size_t(y / 2) * dy.w + x / 2];
        }
}

template <class T>
void upsample2(const Tensor<T>& x, Tensor<T>& y) {
    y.reshape(x.n, x.c, x.h * 2, x.w * 2);
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c) {
            const T* s = x.channel(i, c);
            T* d = y.channel(i, c);
            for (int yy = 0; yy < y.h; ++yy)
                for (int xx = 0; xx < y.w; ++xx) d[std::size_t(yy) * y.w + xx] = s[std::size_t(yy / 2) * x.w + xx / 2];
        }
}

template <class T>
void upsample2_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    dx.reshape(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c) {
            const T* s = dy.channel(i, c);
            T* d = dx.channel(i, c);
            for (int yy = 0; yy < dy.h; ++yy)
                for (int xx = 0; xx < dy.w; ++xx) d[std::size_t(yy / 2) * dx.w + xx / 2] += s[std::size_t(yy) * dy.w + xx];
        }
}

template <class T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) throw ArgumentError("concat: shape mismatch");
    out.reshape(a.n, a.c + b.c, a.h, a.w);
    for (int i = 0; i < a.n; ++i) {
        std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
        std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
    }
}

template <class T>
void split_channels(const Tensor<T>& d, int ca, Tensor<T>& da, Tensor<T>& db) {
    const int cb = d.c - ca;
    da.reshape(d.n, ca, d.h, d.w);
    db.reshape(d.n, cb, d.h, d.w);
    for (int i = 0; i < d.n; ++i) {
        std::copy(d.sample(i), d.sample(i) + da.sample_size(), da.sample(i));
        std::copy(d.sample(i) + da.sample_size(), d.sample(i) + d.sample_size(), db.sample(i));
    }
}

template <class T>
void global_mean(const Tensor<T>& x, Tensor<T>& y) {
    y.reshape(x.n, x.c, 1, 1);
    const std::size_t pl = x.plane();
    for (int i = 0; i < x.n; ++i)
        for (int c = 0; c < x.c; ++c) {
            const T* p = x.channel(i, c);
            T s = 0;
            for (std::size_t j = 0; j < pl; ++j) s += p[j];
            y.data[std::size_t(i) * x.c + c] = s / T(pl);
        }
}

template <class T>
void global_mean_backward(const Tensor<T>& dy, int h, int w, Tensor<T>& dx) {
    dx.reshape(dy.n, dy.c, h, w);
    const std::size_t pl = dx.plane();
    for (int i = 0; i < dy.n; ++i)
        for (int c = 0; c < dy.c; ++c) {
            const T v = dy.data[std::size_t(i) * dy.c + c] / T(pl);
            T* p = dx.channel(i, c);
            std::fill(p, p + pl, v);
        }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

#define FGDM_INSTANTIATE(T)                                                                   \
    template struct Conv2d<T>;                                                                \
    template struct Linear<T>;                                                                \
    template void timestep_embedding<T>(std::span<const int>, int, Tensor<T>&);               \
    template void add_channel_bias<T>(Tensor<T>&, const Tensor<T>&);                          \
    template void channel_bias_grad<T>(const Tensor<T>&, Tensor<T>&);                         \
    template void silu<T>(const Tensor<T>&, Tensor<T>&);                                      \
    template void silu_backward<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);           \
    template void leaky_relu<T>(const Tensor<T>&, T, Tensor<T>&);                             \
    template void leaky_relu_backward<T>(const Tensor<T>&, T, const Tensor<T>&, Tensor<T>&);  \
    template void avgpool2<T>(const Tensor<T>&, Tensor<T>&);                                  \
    template void avgpool2_backward<T>(const Tensor<T>&, Tensor<T>&);                         \
    template void upsample2<T>(const Tensor<T>&, Tensor<T>&);                                 \
    template void upsample2_backward<T>(const Tensor<T>&, Tensor<T>&);                        \
    template void concat_channels<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>&);         \
    template void split_channels<T>(const Tensor<T>&, int, Tensor<T>&, Tensor<T>&);              \
    template void global_mean<T>(const Tensor<T>&, Tensor<T>&);                               \
    template void global_mean_backward<T>(const Tensor<T>&, int, int, Tensor<T>&);

FGDM_INSTANTIATE(float)
FGDM_INSTANTIATE(double)

}  // namespace fgdm::nn

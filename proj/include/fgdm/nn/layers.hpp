// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "fgdm/image.hpp"
#include "fgdm/nn/tensor.hpp"

namespace fgdm::nn {

/// 3x3 convolution, zero padding 1, stride 1 or 2. Weight layout
/// [cout][cin][3][3]; lowered to im2col + GEMM per sample.
template <class T>
struct Conv2d {
    int cin = 0, cout = 0, stride = 1;
    std::size_t w_off = 0, b_off = 0;

    Conv2d() = default;
    Conv2d(ParamStore<T>& ps, const std::string& name, int cin, int cout, int stride = 1);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and bias.
    void init(ParamStore<T>& ps, Rng& rng) const;
    void forward(const ParamStore<T>& ps, const Tensor<T>& x, Tensor<T>& y) const;
    /// Accumulates weight/bias grads; overwrites *dx when given.
    void backward(ParamStore<T>& ps, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) const;
    int out_size(int in) const { return (in + 2 - 3) / stride + 1; }
};

/// y = W x + b on [n, in, 1, 1] tensors.
template <class T>
struct Linear {
    int in = 0, out = 0;
    std::size_t w_off = 0, b_off = 0;

    Linear() = default;
    Linear(ParamStore<T>& ps, const std::string& name, int in, int out);

    void init(ParamStore<T>& ps, Rng& rng) const;
    void forward(const ParamStore<T>& ps, const Tensor<T>& x, Tensor<T>& y) const;
    void backward(ParamStore<T>& ps, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) const;
};

/// Sinusoidal embedding of integer steps: [sin(t w_j), cos(t w_j)] with
/// w_j = 10 * 1000^(-j / (dim/2)).
template <class T>
void timestep_embedding(std::span<const int> t, int dim, Tensor<T>& out);

/// y[n][c][.] += b[n][c]
template <class T>
void add_channel_bias(Tensor<T>& y, const Tensor<T>& b);
/// db[n][c] = sum over the plane of dy[n][c][.]
template <class T>
void channel_bias_grad(const Tensor<T>& dy, Tensor<T>& db);

template <class T>
void silu(const Tensor<T>& a, Tensor<T>& y);
template <class T>
void silu_backward(const Tensor<T>& a, const Tensor<T>& dy, Tensor<T>& da);

template <class T>
void leaky_relu(const Tensor<T>& a, T slope, Tensor<T>& y);
template <class T>
void leaky_relu_backward(const Tensor<T>& a, T slope, const Tensor<T>& dy, Tensor<T>& da);

template <class T>
void avgpool2(const Tensor<T>& x, Tensor<T>& y);
template <class T>
void avgpool2_backward(const Tensor<T>& dy, Tensor<T>& dx);

/// Nearest-neighbour 2x upsampling.
template <class T>
void upsample2(const Tensor<T>& x, Tensor<T>& y);
template <class T>
void upsample2_backward(const Tensor<T>& dy, Tensor<T>& dx);

template <class T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out);
template <class T>
void split_channels(const Tensor<T>& d, int ca, Tensor<T>& da, Tensor<T>& db);

/// Spatial mean per channel: [n,c,h,w] -> [n,c,1,1].
template <class T>
void global_mean(const Tensor<T>& x, Tensor<T>& y);
template <class T>
void global_mean_backward(const Tensor<T>& dy, int h, int w, Tensor<T>& dx);

/// Numerically stable log(1 + exp(x)) and its derivative.
double softplus(double x);
double sigmoid(double x);

}  // namespace fgdm::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fgdm::nn {

/// Dense NCHW activation buffer.
template <class T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(std::size_t(n_) * c_ * h_ * w_, T(0)) {}

    void reshape(int n_, int c_, int h_, int w_) {
        n = n_, c = c_, h = h_, w = w_;
        data.assign(std::size_t(n_) * c_ * h_ * w_, T(0));
    }
    std::size_t plane() const { return std::size_t(h) * w; }
    std::size_t sample_size() const { return std::size_t(c) * h * w; }
    std::size_t size() const { return data.size(); }
    T* sample(int i) { return data.data() + i * sample_size(); }
    const T* sample(int i) const { return data.data() + i * sample_size(); }
    T* channel(int i, int ch) { return sample(i) + ch * plane(); }
    const T* channel(int i, int ch) const { return sample(i) + ch * plane(); }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

/// Named slice of a ParamStore.
struct ParamRef {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// All trainable values of one network in a single flat buffer, so the
/// optimizer and the checkpoint writer see one contiguous blob.
template <class T>
class ParamStore {
public:
    std::size_t add(std::string name, std::size_t n) {
        const std::size_t off = values_.size();
        refs_.push_back({std::move(name), off, n});
        values_.resize(off + n, T(0));
        grads_.resize(off + n, T(0));
        return off;
    }
    T* value(std::size_t off) { return values_.data() + off; }
    const T* value(std::size_t off) const { return values_.data() + off; }
    T* grad(std::size_t off) { return grads_.data() + off; }

    std::span<T> values() { return values_; }
    std::span<const T> values() const { return values_; }
    std::span<T> grads() { return grads_; }
    std::span<const T> grads() const { return grads_; }
    const std::vector<ParamRef>& refs() const { return refs_; }
    std::size_t size() const { return values_.size(); }

    void zero_grad() { std::fill(grads_.begin(), grads_.end(), T(0)); }

private:
    std::vector<T> values_;
    std::vector<T> grads_;
    std::vector<ParamRef> refs_;
};

}  // namespace fgdm::nn

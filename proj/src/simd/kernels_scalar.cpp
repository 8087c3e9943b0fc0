// SPDX-License-Identifier: Apache-2.0
#include "fgdm/simd/kernels.hpp"

#include <cmath>

namespace fgdm::simd::detail {
namespace {

template <class T>
void gemm_ref(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b,
              int ldb, T beta, T* c, int ldc) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        if (beta == T(0)) {
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        } else if (beta != T(1)) {
            for (int j = 0; j < n; ++j) crow[j] *= beta;
        }
        for (int p = 0; p < k; ++p) {
            const T aip = alpha * (ta == Trans::No ? a[static_cast<std::ptrdiff_t>(i) * lda + p]
                                                   : a[static_cast<std::ptrdiff_t>(p) * lda + i]);
            if (aip == T(0)) continue;
            if (tb == Trans::No) {
                const T* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
                for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += aip * b[static_cast<std::ptrdiff_t>(j) * ldb + p];
            }
        }
    }
}

template <class T>
T dot_ref(const T* x, const T* y, std::size_t n) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

template <class T>
void axpy_ref(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void adam_ref(T* w, const T* g, T* m, T* v, std::size_t n, const AdamStep& s) {
    const T b1 = static_cast<T>(s.beta1);
    const T b2 = static_cast<T>(s.beta2);
    const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.step))));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.step))));
    const T lr = static_cast<T>(s.lr);
    const T eps = static_cast<T>(s.eps);
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mh = m[i] * c1;
        const T vh = v[i] * c2;
        w[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

void sobel_row_ref(const double* up, const double* mid, const double* down, int width, double* gx,
                   double* gy) {
    for (int x = 0; x < width; ++x) {
        const double dxu = up[x + 2] - up[x];
        const double dxm = mid[x + 2] - mid[x];
        const double dxd = down[x + 2] - down[x];
        gx[x] = (dxu + 2.0 * dxm) + dxd;
        const double sd = (down[x] + 2.0 * down[x + 1]) + down[x + 2];
        const double su = (up[x] + 2.0 * up[x + 1]) + up[x + 2];
        gy[x] = sd - su;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        &gemm_ref<float>, &gemm_ref<double>, &dot_ref<float>, &dot_ref<double>,
        &axpy_ref<float>, &axpy_ref<double>, &adam_ref<float>, &adam_ref<double>,
        &sobel_row_ref,
    };
    return table;
}

}  // namespace fgdm::simd::detail

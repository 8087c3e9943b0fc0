// SPDX-License-Identifier: Apache-2.0
//
// AVX2/FMA variants. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless avx2_available() is true.
#include "fgdm/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace fgdm::simd::detail {
namespace {

// Thin overload set so the blocked GEMM can be written once for both widths.
inline __m256 vload(const float* p) { return _mm256_loadu_ps(p); }
inline __m256d vload(const double* p) { return _mm256_loadu_pd(p); }
inline void vstore(float* p, __m256 v) { _mm256_storeu_ps(p, v); }
inline void vstore(double* p, __m256d v) { _mm256_storeu_pd(p, v); }
inline __m256 vbroadcast(const float* p) { return _mm256_broadcast_ss(p); }
inline __m256d vbroadcast(const double* p) { return _mm256_broadcast_sd(p); }
inline __m256 vset1(float x) { return _mm256_set1_ps(x); }
inline __m256d vset1(double x) { return _mm256_set1_pd(x); }
inline __m256 vzero(float) { return _mm256_setzero_ps(); }
inline __m256d vzero(double) { return _mm256_setzero_pd(); }
inline __m256 vfmadd(__m256 a, __m256 b, __m256 c) { return _mm256_fmadd_ps(a, b, c); }
inline __m256d vfmadd(__m256d a, __m256d b, __m256d c) { return _mm256_fmadd_pd(a, b, c); }

template <class T>
struct Tile;

template <>
struct Tile<float> {
    using Vec = __m256;
    static constexpr int W = 8;
    static constexpr int MR = 6;
    static constexpr int NR = 16;
};

template <>
struct Tile<double> {
    using Vec = __m256d;
    static constexpr int W = 4;
    static constexpr int MR = 6;
    static constexpr int NR = 8;
};

constexpr int kKC = 256;
constexpr int kMC = 96;
constexpr int kNC = 2048;

template <class T>
void microkernel(int kc, const T* ap, const T* bp, T* c, int ldc, T alpha, int mr, int nr) {
    using Tl = Tile<T>;
    using Vec = typename Tl::Vec;
    constexpr int MR = Tl::MR;
    constexpr int W = Tl::W;
    constexpr int NR = Tl::NR;

    Vec acc[MR][2];
#pragma GCC unroll 6
    for (int r = 0; r < MR; ++r) {
        acc[r][0] = vzero(T{});
        acc[r][1] = vzero(T{});
    }
    for (int p = 0; p < kc; ++p) {
        const Vec b0 = vload(bp + p * NR);
        const Vec b1 = vload(bp + p * NR + W);
#pragma GCC unroll 6
        for (int r = 0; r < MR; ++r) {
            const Vec a = vbroadcast(ap + p * MR + r);
            acc[r][0] = vfmadd(a, b0, acc[r][0]);
            acc[r][1] = vfmadd(a, b1, acc[r][1]);
        }
    }

    const Vec va = vset1(alpha);
    if (mr == MR && nr == NR) {
#pragma GCC unroll 6
        for (int r = 0; r < MR; ++r) {
            T* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
            vstore(crow, vfmadd(va, acc[r][0], vload(crow)));
            vstore(crow + W, vfmadd(va, acc[r][1], vload(crow + W)));
        }
        return;
    }
    alignas(32) T tmp[MR * NR];
    for (int r = 0; r < MR; ++r) {
        vstore(tmp + r * NR, acc[r][0]);
        vstore(tmp + r * NR + W, acc[r][1]);
    }
    for (int r = 0; r < mr; ++r) {
        T* crow = c + static_cast<std::ptrdiff_t>(r) * ldc;
        for (int j = 0; j < nr; ++j) crow[j] += alpha * tmp[r * NR + j];
    }
}

template <class T>
void pack_a(Trans ta, const T* a, int lda, int i0, int mc, int p0, int kc, T* out) {
    constexpr int MR = Tile<T>::MR;
    for (int ib = 0; ib < mc; ib += MR) {
        const int mr = std::min(MR, mc - ib);
        T* dst = out + static_cast<std::ptrdiff_t>(ib) * kc;
        for (int p = 0; p < kc; ++p) {
            for (int r = 0; r < MR; ++r) {
                T v = T(0);
                if (r < mr) {
                    const std::ptrdiff_t i = i0 + ib + r;
                    const std::ptrdiff_t pp = p0 + p;
                    v = ta == Trans::No ? a[i * lda + pp] : a[pp * lda + i];
                }
                dst[p * MR + r] = v;
            }
        }
    }
}

template <class T>
void pack_b(Trans tb, const T* b, int ldb, int p0, int kc, int j0, int nc, T* out) {
    constexpr int NR = Tile<T>::NR;
    for (int jb = 0; jb < nc; jb += NR) {
        const int nr = std::min(NR, nc - jb);
        T* dst = out + static_cast<std::ptrdiff_t>(jb) * kc;
        for (int p = 0; p < kc; ++p) {
            const std::ptrdiff_t pp = p0 + p;
            T* drow = dst + p * NR;
            if (tb == Trans::No) {
                const T* src = b + pp * ldb + j0 + jb;
                int j = 0;
                for (; j < nr; ++j) drow[j] = src[j];
                for (; j < NR; ++j) drow[j] = T(0);
            } else {
                int j = 0;
                for (; j < nr; ++j) drow[j] = b[static_cast<std::ptrdiff_t>(j0 + jb + j) * ldb + pp];
                for (; j < NR; ++j) drow[j] = T(0);
            }
        }
    }
}

template <class T>
void gemm_blocked(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda,
                  const T* b, int ldb, T beta, T* c, int ldc) {
    constexpr int MR = Tile<T>::MR;
    constexpr int NR = Tile<T>::NR;
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
        if (beta == T(0)) {
            std::fill(crow, crow + n, T(0));
        } else if (beta != T(1)) {
            for (int j = 0; j < n; ++j) crow[j] *= beta;
        }
    }
    if (k == 0 || alpha == T(0)) return;

    thread_local std::vector<T> abuf;
    thread_local std::vector<T> bbuf;
    abuf.resize(static_cast<std::size_t>(kKC) * (kMC + MR));
    bbuf.resize(static_cast<std::size_t>(kKC) * (kNC + NR));

    for (int jc = 0; jc < n; jc += kNC) {
        const int nc = std::min(kNC, n - jc);
        for (int pc = 0; pc < k; pc += kKC) {
            const int kc = std::min(kKC, k - pc);
            pack_b(tb, b, ldb, pc, kc, jc, nc, bbuf.data());
            for (int ic = 0; ic < m; ic += kMC) {
                const int mc = std::min(kMC, m - ic);
                pack_a(ta, a, lda, ic, mc, pc, kc, abuf.data());
                for (int jr = 0; jr < nc; jr += NR) {
                    const int nr = std::min(NR, nc - jr);
                    const T* bp = bbuf.data() + static_cast<std::ptrdiff_t>(jr) * kc;
                    for (int ir = 0; ir < mc; ir += MR) {
                        const int mr = std::min(MR, mc - ir);
                        const T* ap = abuf.data() + static_cast<std::ptrdiff_t>(ir) * kc;
                        T* cp = c + static_cast<std::ptrdiff_t>(ic + ir) * ldc + jc + jr;
                        microkernel<T>(kc, ap, bp, cp, ldc, alpha, mr, nr);
                    }
                }
            }
        }
    }
}

float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, lo);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

template <class T>
T dot_avx2(const T* x, const T* y, std::size_t n) {
    using Vec = typename Tile<T>::Vec;
    constexpr std::size_t W = Tile<T>::W;
    Vec s0 = vzero(T{});
    Vec s1 = vzero(T{});
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
        s0 = vfmadd(vload(x + i), vload(y + i), s0);
        s1 = vfmadd(vload(x + i + W), vload(y + i + W), s1);
    }
    for (; i + W <= n; i += W) s0 = vfmadd(vload(x + i), vload(y + i), s0);
    T s = hsum(s0) + hsum(s1);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

template <class T>
void axpy_avx2(T alpha, const T* x, T* y, std::size_t n) {
    constexpr std::size_t W = Tile<T>::W;
    const auto va = vset1(alpha);
    std::size_t i = 0;
    for (; i + W <= n; i += W) vstore(y + i, vfmadd(va, vload(x + i), vload(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_avx2_f(float* w, const float* g, float* m, float* v, std::size_t n, const AdamStep& s) {
    const float b1 = static_cast<float>(s.beta1);
    const float b2 = static_cast<float>(s.beta2);
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.step))));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.step))));
    const float lr = static_cast<float>(s.lr);
    const float eps = static_cast<float>(s.eps);
    const __m256 vb1 = _mm256_set1_ps(b1), vb1c = _mm256_set1_ps(1.0f - b1);
    const __m256 vb2 = _mm256_set1_ps(b2), vb2c = _mm256_set1_ps(1.0f - b2);
    const __m256 vc1 = _mm256_set1_ps(c1), vc2 = _mm256_set1_ps(c2);
    const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 gi = _mm256_loadu_ps(g + i);
        const __m256 mi = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vb1c, gi));
        const __m256 vi = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                                        _mm256_mul_ps(_mm256_mul_ps(vb2c, gi), gi));
        _mm256_storeu_ps(m + i, mi);
        _mm256_storeu_ps(v + i, vi);
        const __m256 mh = _mm256_mul_ps(mi, vc1);
        const __m256 vh = _mm256_mul_ps(vi, vc2);
        const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mh), _mm256_add_ps(_mm256_sqrt_ps(vh), veps));
        _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        w[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

void adam_avx2_d(double* w, const double* g, double* m, double* v, std::size_t n, const AdamStep& s) {
    const double b1 = s.beta1, b2 = s.beta2;
    const double c1 = 1.0 / (1.0 - std::pow(s.beta1, static_cast<double>(s.step)));
    const double c2 = 1.0 / (1.0 - std::pow(s.beta2, static_cast<double>(s.step)));
    const __m256d vb1 = _mm256_set1_pd(b1), vb1c = _mm256_set1_pd(1.0 - b1);
    const __m256d vb2 = _mm256_set1_pd(b2), vb2c = _mm256_set1_pd(1.0 - b2);
    const __m256d vc1 = _mm256_set1_pd(c1), vc2 = _mm256_set1_pd(c2);
    const __m256d vlr = _mm256_set1_pd(s.lr), veps = _mm256_set1_pd(s.eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(vb1c, gi));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(_mm256_mul_pd(vb2c, gi), gi));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(mi, vc1)),
                                          _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, vc2)), veps));
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        w[i] -= s.lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + s.eps);
    }
}

void sobel_row_avx2(const double* up, const double* mid, const double* down, int width, double* gx,
                    double* gy) {
    const __m256d two = _mm256_set1_pd(2.0);
    int x = 0;
    for (; x + 4 <= width; x += 4) {
        const __m256d u0 = _mm256_loadu_pd(up + x), u1 = _mm256_loadu_pd(up + x + 1),
                      u2 = _mm256_loadu_pd(up + x + 2);
        const __m256d m0 = _mm256_loadu_pd(mid + x), m2 = _mm256_loadu_pd(mid + x + 2);
        const __m256d d0 = _mm256_loadu_pd(down + x), d1 = _mm256_loadu_pd(down + x + 1),
                      d2 = _mm256_loadu_pd(down + x + 2);
        const __m256d dxu = _mm256_sub_pd(u2, u0);
        const __m256d dxm = _mm256_sub_pd(m2, m0);
        const __m256d dxd = _mm256_sub_pd(d2, d0);
        _mm256_storeu_pd(gx + x, _mm256_add_pd(_mm256_add_pd(dxu, _mm256_mul_pd(two, dxm)), dxd));
        const __m256d sd = _mm256_add_pd(_mm256_add_pd(d0, _mm256_mul_pd(two, d1)), d2);
        const __m256d su = _mm256_add_pd(_mm256_add_pd(u0, _mm256_mul_pd(two, u1)), u2);
        _mm256_storeu_pd(gy + x, _mm256_sub_pd(sd, su));
    }
    for (; x < width; ++x) {
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

const KernelTable* avx2_table() {
    static const KernelTable table{
        &gemm_blocked<float>, &gemm_blocked<double>, &dot_avx2<float>, &dot_avx2<double>,
        &axpy_avx2<float>,    &axpy_avx2<double>,    &adam_avx2_f,     &adam_avx2_d,
        &sobel_row_avx2,
    };
    return &table;
}

}  // namespace fgdm::simd::detail

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "fgdm/simd/kernels.hpp"

using namespace fgdm::simd;

namespace {

template <class T>
std::vector<T> randv(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<T> v(n);
    for (T& x : v) x = static_cast<T>(u(rng));
    return v;
}

// Triple loop in long double.
template <class T>
void ref_gemm(Trans ta, Trans tb, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb, T beta,
              T* c, int ldc) {
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            long double s = 0;
            for (int p = 0; p < k; ++p) {
                const T av = ta == Trans::No ? a[i * lda + p] : a[p * lda + i];
                const T bv = tb == Trans::No ? b[p * ldb + j] : b[j * ldb + p];
                s += static_cast<long double>(av) * bv;
            }
            c[i * ldc + j] = static_cast<T>(alpha * s + (beta == 0 ? 0 : beta * c[i * ldc + j]));
        }
}

std::vector<Isa> isas() {
    std::vector<Isa> v{Isa::Scalar};
    if (avx2_available()) v.push_back(Isa::Avx2);
    return v;
}

template <class T>
void check_gemm(double tol) {
    const std::array<std::array<int, 3>, 5> shapes{{{1, 1, 1}, {7, 5, 3}, {33, 17, 65}, {64, 128, 36}, {9, 300, 144}}};
    for (Isa isa : isas()) {
        ScopedIsa pin(isa);
        for (auto [m, n, k] : shapes)
            for (Trans ta : {Trans::No, Trans::Yes})
                for (Trans tb : {Trans::No, Trans::Yes}) {
                    const int lda = (ta == Trans::No ? k : m) + 2;
                    const int ldb = (tb == Trans::No ? n : k) + 1;
                    const int rows_a = ta == Trans::No ? m : k, rows_b = tb == Trans::No ? k : n;
                    auto a = randv<T>(static_cast<std::size_t>(rows_a) * lda, 1);
                    auto b = randv<T>(static_cast<std::size_t>(rows_b) * ldb, 2);
                    for (T beta : {T(0), T(0.5)}) {
                        auto c = randv<T>(static_cast<std::size_t>(m) * n, 3);
                        auto r = c;
                        if (beta == 0) std::fill(c.begin(), c.end(), std::nan(""));
                        gemm(ta, tb, m, n, k, T(1.5), a.data(), lda, b.data(), ldb, beta, c.data(), n);
                        ref_gemm(ta, tb, m, n, k, T(1.5), a.data(), lda, b.data(), ldb, beta, r.data(), n);
                        double worst = 0;
                        for (std::size_t i = 0; i < c.size(); ++i)
                            worst = std::max(worst, std::abs(static_cast<double>(c[i] - r[i])));
                        INFO("isa=" << isa_name(isa) << " m=" << m << " n=" << n << " k=" << k);
                        CHECK(worst < tol * std::sqrt(static_cast<double>(k)));
                    }
                }
    }
}

}  // namespace

TEST_SUITE("simd") {
    TEST_CASE("gemm matches the reference in every transpose") {
        check_gemm<float>(1e-5);
        check_gemm<double>(1e-13);
    }

    TEST_CASE("dot and axpy") {
        for (std::size_t n : {0u, 1u, 7u, 8u, 33u, 1000u}) {
            auto xd = randv<double>(n, 4), yd = randv<double>(n, 5);
            auto xf = randv<float>(n, 4), yf = randv<float>(n, 5);
            long double sd = 0, sf = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sd += static_cast<long double>(xd[i]) * yd[i];
                sf += static_cast<long double>(xf[i]) * yf[i];
            }
            for (Isa isa : isas()) {
                ScopedIsa pin(isa);
                CHECK(std::abs(dot(std::span<const double>(xd), std::span<const double>(yd)) - static_cast<double>(sd)) < 1e-12);
                CHECK(std::abs(dot(std::span<const float>(xf), std::span<const float>(yf)) - static_cast<double>(sf)) < 1e-4);
                auto y = yd;
                axpy(0.25, std::span<const double>(xd), std::span<double>(y));
                for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == yd[i] + 0.25 * xd[i]);
            }
        }
    }

    TEST_CASE("adam update against closed form") {
        const AdamStep st{1e-3, 0.9, 0.999, 1e-8, 3};
        auto w0 = randv<double>(37, 6), g = randv<double>(37, 7), m0 = randv<double>(37, 8), v0 = randv<double>(37, 9);
        for (double& x : v0) x = std::abs(x);
        for (Isa isa : isas()) {
            ScopedIsa pin(isa);
            auto w = w0, m = m0, v = v0;
            adam_update(std::span<double>(w), std::span<const double>(g), std::span<double>(m), std::span<double>(v), st);
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double mm = 0.9 * m0[i] + 0.1 * g[i];
                const double vv = 0.999 * v0[i] + 0.001 * g[i] * g[i];
                const double mh = mm / (1 - std::pow(0.9, 3)), vh = vv / (1 - std::pow(0.999, 3));
                CHECK(m[i] == doctest::Approx(mm).epsilon(1e-14));
                CHECK(v[i] == doctest::Approx(vv).epsilon(1e-14));
                CHECK(w[i] == doctest::Approx(w0[i] - 1e-3 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("scalar and avx2 agree") {
        if (!avx2_available()) return;
        const int w = 61;
        auto rows = randv<double>(3 * (w + 2), 10);
        std::vector<double> gx1(w), gy1(w), gx2(w), gy2(w);
        {
            ScopedIsa pin(Isa::Scalar);
            sobel_row(rows.data(), rows.data() + w + 2, rows.data() + 2 * (w + 2), w, gx1.data(), gy1.data());
        }
        {
            ScopedIsa pin(Isa::Avx2);
            sobel_row(rows.data(), rows.data() + w + 2, rows.data() + 2 * (w + 2), w, gx2.data(), gy2.data());
        }
        CHECK(gx1 == gx2);
        CHECK(gy1 == gy2);

        auto a = randv<float>(40 * 70, 11), b = randv<float>(70 * 50, 12);
        std::vector<float> c1(40 * 50), c2(40 * 50);
        {
            ScopedIsa pin(Isa::Scalar);
            gemm(Trans::No, Trans::No, 40, 50, 70, 1.0f, a.data(), 70, b.data(), 50, 0.0f, c1.data(), 50);
        }
        {
            ScopedIsa pin(Isa::Avx2);
            gemm(Trans::No, Trans::No, 40, 50, 70, 1.0f, a.data(), 70, b.data(), 50, 0.0f, c2.data(), 50);
        }
        for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]).epsilon(1e-5));

        auto wf = randv<float>(29, 13), gf = randv<float>(29, 14), mf = randv<float>(29, 15), vf = randv<float>(29, 16);
        for (float& x : vf) x = std::abs(x);
        auto w1 = wf, m1 = mf, v1 = vf, w2 = wf, m2 = mf, v2 = vf;
        const AdamStep st{1e-3, 0.9, 0.999, 1e-8, 5};
        {
            ScopedIsa pin(Isa::Scalar);
            adam_update(std::span<float>(w1), std::span<const float>(gf), std::span<float>(m1), std::span<float>(v1), st);
        }
        {
            ScopedIsa pin(Isa::Avx2);
            adam_update(std::span<float>(w2), std::span<const float>(gf), std::span<float>(m2), std::span<float>(v2), st);
        }
        for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-6));
    }

    TEST_CASE("isa pinning") {
        const Isa before = active_isa();
        {
            ScopedIsa pin(Isa::Scalar);
            CHECK(active_isa() == Isa::Scalar);
        }
        CHECK(active_isa() == before);
        if (!avx2_available()) CHECK_THROWS(set_active_isa(Isa::Avx2));
    }
}

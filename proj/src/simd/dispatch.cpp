// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <stdexcept>

#include "fgdm/simd/kernels.hpp"

namespace fgdm::simd {
namespace detail {
#ifndef FGDM_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool detect_avx2() {
#if defined(FGDM_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
           detail::avx2_table() != nullptr;
#else
    return false;
#endif
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{detect_avx2() ? Isa::Avx2 : Isa::Scalar};
    return isa;
}

const detail::KernelTable& table() {
    return active().load(std::memory_order_relaxed) == Isa::Avx2 ? *detail::avx2_table()
                                                                 : detail::scalar_table();
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
    static const bool ok = detect_avx2();
    return ok;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (isa == Isa::Avx2 && !avx2_available())
        throw std::invalid_argument("AVX2 kernels are not available on this machine");
    active().store(isa, std::memory_order_relaxed);
}

ScopedIsa::ScopedIsa(Isa isa) : previous_(active_isa()) { set_active_isa(isa); }
ScopedIsa::~ScopedIsa() { active().store(previous_, std::memory_order_relaxed); }

void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    table().sgemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(Trans ta, Trans tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
    table().dgemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

float dot(std::span<const float> x, std::span<const float> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
    return table().sdot(x.data(), y.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
    return table().ddot(x.data(), y.data(), x.size());
}

void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    table().saxpy(alpha, x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    table().daxpy(alpha, x.data(), y.data(), x.size());
}

void adam_update(std::span<float> w, std::span<const float> g, std::span<float> m,
                 std::span<float> v, const AdamStep& s) {
    if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size())
        throw std::invalid_argument("adam_update: length mismatch");
    table().sadam(w.data(), g.data(), m.data(), v.data(), w.size(), s);
}

void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, const AdamStep& s) {
    if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size())
        throw std::invalid_argument("adam_update: length mismatch");
    table().dadam(w.data(), g.data(), m.data(), v.data(), w.size(), s);
}

void sobel_row(const double* up, const double* mid, const double* down, int width, double* gx,
               double* gy) {
    table().sobel_row(up, mid, down, width, gx, gy);
}

}  // namespace fgdm::simd

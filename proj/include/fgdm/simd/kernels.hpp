// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used by the filters and the network layers.
//
// Every kernel has a portable scalar reference and an AVX2/FMA variant. The
// variant is picked once at startup from CPUID and can be overridden (tests
// pin both paths and compare them).

namespace fgdm::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// True when the CPU and OS both expose AVX2 and FMA and the variant was built.
bool avx2_available();

Isa active_isa();

/// Throws std::invalid_argument if `isa` is not available on this machine.
void set_active_isa(Isa isa);

/// Pins an ISA for the lifetime of the guard.
class ScopedIsa {
public:
    explicit ScopedIsa(Isa isa);
    ~ScopedIsa();
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

enum class Trans { No, Yes };

/// Row-major C = alpha * op(A) * op(B) + beta * C, op(A) is m x k, op(B) is k x n.
/// beta == 0 overwrites C without reading it.
void gemm(Trans ta, Trans tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void gemm(Trans ta, Trans tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc);

float dot(std::span<const float> x, std::span<const float> y);
double dot(std::span<const double> x, std::span<const double> y);

/// y += alpha * x
void axpy(float alpha, std::span<const float> x, std::span<float> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct AdamStep {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 1;  // 1-based, for bias correction
};

void adam_update(std::span<float> w, std::span<const float> g, std::span<float> m,
                 std::span<float> v, const AdamStep& s);
void adam_update(std::span<double> w, std::span<const double> g, std::span<double> m,
                 std::span<double> v, const AdamStep& s);

/// One output row of the 3x3 Sobel pair. `up`, `mid`, `down` are padded rows of
/// width + 2 samples; gx/gy receive `width` samples. Both ISA variants evaluate
/// the same expression tree, so results are bit-identical.
void sobel_row(const double* up, const double* mid, const double* down, int width, double* gx,
               double* gy);

namespace detail {

struct KernelTable {
    void (*sgemm)(Trans, Trans, int, int, int, float, const float*, int, const float*, int, float,
                  float*, int);
    void (*dgemm)(Trans, Trans, int, int, int, double, const double*, int, const double*, int,
                  double, double*, int);
    float (*sdot)(const float*, const float*, std::size_t);
    double (*ddot)(const double*, const double*, std::size_t);
    void (*saxpy)(float, const float*, float*, std::size_t);
    void (*daxpy)(double, const double*, double*, std::size_t);
    void (*sadam)(float*, const float*, float*, float*, std::size_t, const AdamStep&);
    void (*dadam)(double*, const double*, double*, double*, std::size_t, const AdamStep&);
    void (*sobel_row)(const double*, const double*, const double*, int, double*, double*);
};

const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in

}  // namespace detail
}  // namespace fgdm::simd

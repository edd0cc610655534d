#pragma once

#include <cstddef>
#include <string_view>

// Float kernels for the network's inner loops. Every kernel has a portable scalar
// reference and, on x86-64, an AVX2+FMA variant compiled in its own translation
// unit. The variant is picked once at startup from CPUID and can be forced with
// RFSEI_SIMD=scalar|avx2 (or set_active_isa) for equivalence testing.

namespace rfsei::simd {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
    Isa isa;

    /// C[m x n] += A[m x k] * B[k x n]; row-major with leading dimensions.
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                    const float* b, std::size_t ldb, float* c, std::size_t ldc);

    /// y += a * x
    void (*axpy)(std::size_t n, float a, const float* x, float* y);

    /// sum x[i]*y[i], accumulated in double
    double (*dot)(std::size_t n, const float* x, const float* y);

    /// x = max(x, 0) in place
    void (*relu)(std::size_t n, float* x);

    /// grad *= (activation > 0)
    void (*relu_backward)(std::size_t n, const float* activation, float* grad);

    /// s = decay*s + (1-decay)*g^2 ; w -= lr*g / (sqrt(s) + eps)
    void (*rmsprop)(std::size_t n, float* w, const float* g, float* s, float lr, float decay, float eps);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

/// The table used by the library; resolved on first use.
const KernelTable& kernels() noexcept;

/// Forces a variant. Returns false (and leaves the selection unchanged) if unavailable.
bool set_active_isa(Isa isa) noexcept;

Isa active_isa() noexcept;

}  // namespace rfsei::simd

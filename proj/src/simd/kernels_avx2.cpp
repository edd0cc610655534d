// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace rfsei::simd::detail {

namespace {

constexpr std::size_t kRows = 6;
constexpr std::size_t kCols = 16;
constexpr std::size_t kDepth = 256;  // k-block; a 256 x 16 panel of B stays in L1

inline __m256i tail_mask(std::size_t count)
{
    alignas(32) static constexpr int lanes[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(lanes + 8 - count));
}

// C[R x 16] += A[R x k] * B[k x 16]
template <std::size_t R>
void block16(std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c,
             std::size_t ldc)
{
    __m256 lo[R];
    __m256 hi[R];
    for (std::size_t r = 0; r < R; ++r) {
        lo[r] = _mm256_setzero_ps();
        hi[r] = _mm256_setzero_ps();
    }
    for (std::size_t p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + p * ldb);
        const __m256 b1 = _mm256_loadu_ps(b + p * ldb + 8);
        for (std::size_t r = 0; r < R; ++r) {
            const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
            lo[r] = _mm256_fmadd_ps(av, b0, lo[r]);
            hi[r] = _mm256_fmadd_ps(av, b1, hi[r]);
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        float* cr = c + r * ldc;
        _mm256_storeu_ps(cr, _mm256_add_ps(_mm256_loadu_ps(cr), lo[r]));
        _mm256_storeu_ps(cr + 8, _mm256_add_ps(_mm256_loadu_ps(cr + 8), hi[r]));
    }
}

// C[R x w] += A[R x k] * B[k x w] for w <= 8, masked.
template <std::size_t R>
void block8(std::size_t k, std::size_t w, const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c,
            std::size_t ldc)
{
    const __m256i mask = tail_mask(w);
    __m256 acc[R];
    for (std::size_t r = 0; r < R; ++r)
        acc[r] = _mm256_setzero_ps();
    for (std::size_t p = 0; p < k; ++p) {
        const __m256 bv = _mm256_maskload_ps(b + p * ldb, mask);
        for (std::size_t r = 0; r < R; ++r)
            acc[r] = _mm256_fmadd_ps(_mm256_broadcast_ss(a + r * lda + p), bv, acc[r]);
    }
    for (std::size_t r = 0; r < R; ++r) {
        float* cr = c + r * ldc;
        _mm256_maskstore_ps(cr, mask, _mm256_add_ps(_mm256_maskload_ps(cr, mask), acc[r]));
    }
}

template <std::size_t R>
void row_block(std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb,
               float* c, std::size_t ldc)
{
    std::size_t j = 0;
    for (; j + kCols <= n; j += kCols)
        block16<R>(k, a, lda, b + j, ldb, c + j, ldc);
    while (j < n) {
        const std::size_t w = std::min<std::size_t>(8, n - j);
        block8<R>(k, w, a, lda, b + j, ldb, c + j, ldc);
        j += w;
    }
}

void dispatch_rows(std::size_t rows, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
                   std::size_t ldb, float* c, std::size_t ldc)
{
    switch (rows) {
    case 6: row_block<6>(n, k, a, lda, b, ldb, c, ldc); break;
    case 5: row_block<5>(n, k, a, lda, b, ldb, c, ldc); break;
    case 4: row_block<4>(n, k, a, lda, b, ldb, c, ldc); break;
    case 3: row_block<3>(n, k, a, lda, b, ldb, c, ldc); break;
    case 2: row_block<2>(n, k, a, lda, b, ldb, c, ldc); break;
    case 1: row_block<1>(n, k, a, lda, b, ldb, c, ldc); break;
    default: break;
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
             std::size_t ldb, float* c, std::size_t ldc)
{
    // Column panels outermost so each B panel is reused by every row block while hot.
    constexpr std::size_t kPanel = 256;
    for (std::size_t p0 = 0; p0 < k; p0 += kDepth) {
        const std::size_t kc = std::min(kDepth, k - p0);
        for (std::size_t j0 = 0; j0 < n; j0 += kPanel) {
            const std::size_t nc = std::min(kPanel, n - j0);
            for (std::size_t i = 0; i < m; i += kRows) {
                const std::size_t rows = std::min(kRows, m - i);
                dispatch_rows(rows, nc, kc, a + i * lda + p0, lda, b + p0 * ldb + j0, ldb, c + i * ldc + j0, ldc);
            }
        }
    }
}

void axpy(std::size_t n, float a, const float* x, float* y)
{
    const __m256 av = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i)
        y[i] += a * x[i];
}

double dot(std::size_t n, const float* x, const float* y)
{
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 xv = _mm256_loadu_ps(x + i);
        const __m256 yv = _mm256_loadu_ps(y + i);
        acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(xv)),
                               _mm256_cvtps_pd(_mm256_castps256_ps128(yv)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(xv, 1)),
                               _mm256_cvtps_pd(_mm256_extractf128_ps(yv, 1)), acc1);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

void relu(std::size_t n, float* x)
{
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i)
        x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* act, float* grad)
{
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 live = _mm256_cmp_ps(_mm256_loadu_ps(act + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(grad + i, _mm256_and_ps(live, _mm256_loadu_ps(grad + i)));
    }
    for (; i < n; ++i)
        if (!(act[i] > 0.0f))
            grad[i] = 0.0f;
}

void rmsprop(std::size_t n, float* w, const float* g, float* s, float lr, float decay, float eps)
{
    const float keep = 1.0f - decay;
    const __m256 dv = _mm256_set1_ps(decay);
    const __m256 kv = _mm256_set1_ps(keep);
    const __m256 lv = _mm256_set1_ps(lr);
    const __m256 ev = _mm256_set1_ps(eps);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 gv = _mm256_loadu_ps(g + i);
        const __m256 sv = _mm256_add_ps(_mm256_mul_ps(dv, _mm256_loadu_ps(s + i)), _mm256_mul_ps(kv, _mm256_mul_ps(gv, gv)));
        _mm256_storeu_ps(s + i, sv);
        const __m256 step = _mm256_div_ps(_mm256_mul_ps(lv, gv), _mm256_add_ps(_mm256_sqrt_ps(sv), ev));
        _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), step));
    }
    for (; i < n; ++i) {
        s[i] = decay * s[i] + keep * (g[i] * g[i]);
        w[i] -= lr * g[i] / (std::sqrt(s[i]) + eps);
    }
}

}  // namespace

const KernelTable avx2_table{Isa::Avx2, gemm_nn, axpy, dot, relu, relu_backward, rmsprop};

}  // namespace rfsei::simd::detail

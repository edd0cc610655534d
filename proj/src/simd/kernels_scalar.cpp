#include <cmath>

#include "kernels_impl.hpp"

namespace rfsei::simd::detail {

namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
             std::size_t ldb, float* c, std::size_t ldc)
{
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * lda + p];
            const float* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += av * brow[j];
        }
    }
}

void axpy(std::size_t n, float a, const float* x, float* y)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += a * x[i];
}

double dot(std::size_t n, const float* x, const float* y)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

void relu(std::size_t n, float* x)
{
    for (std::size_t i = 0; i < n; ++i)
        x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* act, float* grad)
{
    for (std::size_t i = 0; i < n; ++i)
        if (!(act[i] > 0.0f))
            grad[i] = 0.0f;
}

void rmsprop(std::size_t n, float* w, const float* g, float* s, float lr, float decay, float eps)
{
    const float keep = 1.0f - decay;
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = decay * s[i] + keep * (g[i] * g[i]);
        w[i] -= lr * g[i] / (std::sqrt(s[i]) + eps);
    }
}

}  // namespace

const KernelTable scalar_table{Isa::Scalar, gemm_nn, axpy, dot, relu, relu_backward, rmsprop};

}  // namespace rfsei::simd::detail

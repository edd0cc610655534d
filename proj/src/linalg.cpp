#include "rfsei/linalg.hpp"

#include <algorithm>
#include <vector>

#include "rfsei/simd/kernels.hpp"

namespace rfsei {

template <typename T>
void transpose(const T* in, std::size_t rows, std::size_t cols, T* out)
{
    constexpr std::size_t tile = 32;
    for (std::size_t r0 = 0; r0 < rows; r0 += tile)
        for (std::size_t c0 = 0; c0 < cols; c0 += tile) {
            const std::size_t r1 = std::min(rows, r0 + tile);
            const std::size_t c1 = std::min(cols, c0 + tile);
            for (std::size_t r = r0; r < r1; ++r)
                for (std::size_t c = c0; c < c1; ++c)
                    out[c * rows + r] = in[r * cols + c];
        }
}

template <>
void gemm<float>(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const float* a, const float* b,
                 float* c, bool accumulate)
{
    if (!accumulate)
        std::fill(c, c + m * n, 0.0f);
    if (m == 0 || n == 0 || k == 0)
        return;
    thread_local std::vector<float> a_buf;
    thread_local std::vector<float> b_buf;
    const float* ap = a;
    const float* bp = b;
    if (ta == Trans::Yes) {
        a_buf.resize(m * k);
        transpose(a, k, m, a_buf.data());
        ap = a_buf.data();
    }
    if (tb == Trans::Yes) {
        b_buf.resize(k * n);
        transpose(b, n, k, b_buf.data());
        bp = b_buf.data();
    }
    simd::kernels().gemm_nn(m, n, k, ap, k, bp, n, c, n);
}

template <>
void gemm<double>(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c, bool accumulate)
{
    if (!accumulate)
        std::fill(c, c + m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta == Trans::No ? a[i * k + p] : a[p * m + i];
            if (tb == Trans::No) {
                const double* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j)
                    c[i * n + j] += av * brow[j];
            } else {
                for (std::size_t j = 0; j < n; ++j)
                    c[i * n + j] += av * b[j * k + p];
            }
        }
}

template void transpose<float>(const float*, std::size_t, std::size_t, float*);
template void transpose<double>(const double*, std::size_t, std::size_t, double*);

}  // namespace rfsei

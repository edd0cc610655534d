#pragma once

#include <cstddef>

namespace rfsei {

enum class Trans { No, Yes };

/// C[m x n] (+)= op(A)[m x k] * op(B)[k x n], all row-major and contiguous.
/// op(A) = A when ta == No (A stored m x k), A^T when ta == Yes (A stored k x m).
/// float routes through the active SIMD kernel table; double uses the scalar path.
template <typename T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
          bool accumulate);

/// out[cols x rows] = in[rows x cols]^T
template <typename T>
void transpose(const T* in, std::size_t rows, std::size_t cols, T* out);

}  // namespace rfsei

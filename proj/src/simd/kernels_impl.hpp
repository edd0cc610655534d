#pragma once

#include "rfsei/simd/kernels.hpp"

namespace rfsei::simd::detail {

extern const KernelTable scalar_table;

#if defined(__x86_64__) || defined(_M_X64)
#define RFSEI_HAVE_AVX2_TU 1
extern const KernelTable avx2_table;
#endif

}  // namespace rfsei::simd::detail

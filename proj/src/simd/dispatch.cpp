#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace rfsei::simd {

namespace {

bool cpu_has_avx2() noexcept
{
#if defined(RFSEI_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* resolve_default() noexcept
{
    const KernelTable* best = avx2_kernels();
    if (const char* env = std::getenv("RFSEI_SIMD")) {
        const std::string_view want(env);
        if (want == "scalar")
            return &scalar_kernels();
        if (want == "avx2" && best)
            return best;
    }
    return best ? best : &scalar_kernels();
}

std::atomic<const KernelTable*>& active()
{
    static std::atomic<const KernelTable*> table{resolve_default()};
    return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable& scalar_kernels() noexcept { return detail::scalar_table; }

const KernelTable* avx2_kernels() noexcept
{
#if defined(RFSEI_HAVE_AVX2_TU)
    static const bool ok = cpu_has_avx2();
    return ok ? &detail::avx2_table : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& kernels() noexcept { return *active().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) noexcept
{
    const KernelTable* t = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
    if (!t)
        return false;
    active().store(t, std::memory_order_relaxed);
    return true;
}

Isa active_isa() noexcept { return kernels().isa; }

}  // namespace rfsei::simd

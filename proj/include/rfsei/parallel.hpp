#pragma once

#include <cstddef>
#include <functional>

namespace rfsei {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency)
/// using a static contiguous partition. The first exception thrown is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned resolve_threads(unsigned threads) noexcept;

}  // namespace rfsei

#pragma once

#include <cstddef>
#include <functional>

namespace ksgan {

/// Worker-thread cap from KSGAN_THREADS (default 1, invalid values fall back
/// to 1).
std::size_t worker_threads();

/// Runs body(begin, end) over [0, n) split into at most `threads` contiguous
/// chunks. Each index is visited exactly once; results must not depend on the
/// split.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ksgan

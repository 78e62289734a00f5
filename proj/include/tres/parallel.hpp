#pragma once

#include <cstddef>
#include <functional>

namespace tres {

/// Upper bound on worker threads used by the library (default 1).
void set_thread_count(unsigned n);
unsigned thread_count();

/// Calls fn(i) for i in [0, n). Work is split into contiguous blocks; every
/// index is processed exactly once, so callers writing only to slot i get
/// results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tres

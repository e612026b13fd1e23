#pragma once

#include <cstddef>
#include <functional>

namespace stressfield {

/// Worker cap from STRESSFIELD_THREADS, else hardware concurrency (>= 1).
int worker_count();

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0: worker_count()).
/// Indices are handed out in blocks; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

/// Keeps large freed blocks on the heap instead of returning them to the OS.
/// The recurrent layers allocate multi-megabyte temporaries per sample, and
/// re-faulting those pages otherwise costs about as much as the arithmetic.
/// No-op outside glibc.
void tune_allocator();

}  // namespace stressfield

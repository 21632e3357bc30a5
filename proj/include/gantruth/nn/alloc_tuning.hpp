#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gantruth::nn {

// Training graphs allocate and free megabyte-sized activation buffers every
// step; with the default glibc mmap threshold each one round-trips through
// the kernel. Raising the threshold keeps them on the heap free lists.
inline void tune_allocator_for_training() {
#if defined(__GLIBC__)
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
}

} // namespace gantruth::nn

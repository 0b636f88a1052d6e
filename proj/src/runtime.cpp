#include "lgrn/runtime.hpp"

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace lgrn {

void configure_allocator() {
#if defined(__GLIBC__) && defined(M_TOP_PAD)
  // Layer buffers are freed and reallocated every step. Keep them on the heap
  // and stop the heap from shrinking and page-faulting back each time.
  // 32 MiB is the largest mmap threshold glibc accepts.
  mallopt(M_MMAP_THRESHOLD, 32 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

}  // namespace lgrn

#pragma once

namespace lgrn {

/// Keep large scratch buffers (im2col, activations) on the heap instead of
/// fresh mmap/munmap pairs per call. Training allocates the same sizes every
/// step, and returning them to the kernel each time cost about a third of the
/// wall time. Call once at program start; no-op outside glibc.
void configure_allocator();

}  // namespace lgrn

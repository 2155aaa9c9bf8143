#pragma once

namespace kolmo {

/// Keeps freed field buffers on the heap instead of returning them to the OS.
/// Spectral fields are a few hundred KB, above glibc's default mmap threshold,
/// so without this every temporary costs fresh page faults. Call once from main().
void tune_allocator();

}  // namespace kolmo

#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <vector>

namespace vcd::fft {

void* aligned_alloc_bytes(std::size_t bytes);
void aligned_free(void* p) noexcept;

/// Allocator returning SIMD-aligned storage so buffers can be handed to
/// pre-planned transforms.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(aligned_alloc_bytes(n * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { aligned_free(p); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using RealBuffer = std::vector<double, AlignedAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

/// Smallest n' >= n whose only prime factors are 2, 3 and 5.
int next_fast_size(int n);

/// Number of complex bins per row of a real-to-complex transform.
constexpr int half_width(int width) noexcept { return width / 2 + 1; }

// Plans are created once per shape under a lock and then executed
// concurrently on caller-owned buffers. Transforms are unnormalized.

/// real (w*h) -> half spectrum ((w/2+1)*h). `in` is preserved.
void forward_real(const double* in, std::complex<double>* out, int width, int height);
/// half spectrum -> real; `in` is overwritten.
void inverse_real(std::complex<double>* in, double* out, int width, int height);
/// Full complex forward transform; `in` and `out` must not alias.
void forward_complex(std::complex<double>* in, std::complex<double>* out, int width, int height);

}  // namespace vcd::fft

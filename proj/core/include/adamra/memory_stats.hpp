#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>

namespace adamra::memory {

// Process-wide counters fed by CountingAllocator. Only Matrix storage is
// tracked, which is what the analytic float-count model describes.
void note_allocate(std::size_t bytes) noexcept;
void note_deallocate(std::size_t bytes) noexcept;

std::int64_t live_bytes() noexcept;
std::int64_t peak_bytes() noexcept;
std::int64_t allocation_count() noexcept;

// Resets the peak to the current live byte count.
void reset_peak() noexcept;

template <class T>
struct CountingAllocator {
  using value_type = T;

  CountingAllocator() noexcept = default;
  template <class U>
  CountingAllocator(const CountingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    note_allocate(n * sizeof(T));
    return p;
  }
  void deallocate(T* p, std::size_t n) noexcept {
    note_deallocate(n * sizeof(T));
    std::allocator<T>{}.deallocate(p, n);
  }

  friend bool operator==(const CountingAllocator&, const CountingAllocator&) noexcept {
    return true;
  }
};

// Measures peak Matrix bytes allocated above the level live at construction.
class PeakScope {
 public:
  PeakScope() noexcept : baseline_(live_bytes()) { reset_peak(); }
  std::int64_t peak_above_baseline() const noexcept { return peak_bytes() - baseline_; }

 private:
  std::int64_t baseline_;
};

}  // namespace adamra::memory

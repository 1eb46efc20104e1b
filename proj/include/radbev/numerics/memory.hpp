// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <new>

namespace radbev {

// Process-wide accounting of bytes held by Tensor storage. Used by the
// kernel benchmark to measure working-set growth; not a general profiler.
class MemoryTracker {
 public:
  static void on_alloc(std::size_t bytes) noexcept;
  static void on_free(std::size_t bytes) noexcept;

  static std::size_t current() noexcept;
  static std::size_t peak() noexcept;
  // Resets the peak to the current level so a subsequent peak() reports
  // the high-water mark of the region that follows.
  static void reset_peak() noexcept;
};

template <typename T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <typename U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    MemoryTracker::on_alloc(n * sizeof(T));
    return static_cast<T*>(::operator new(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    MemoryTracker::on_free(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
};

}  // namespace radbev

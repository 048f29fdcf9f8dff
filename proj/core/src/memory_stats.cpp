#include "adamra/memory_stats.hpp"

#include <atomic>

namespace adamra::memory {
namespace {

std::atomic<std::int64_t> g_live{0};
std::atomic<std::int64_t> g_peak{0};
std::atomic<std::int64_t> g_count{0};

}  // namespace

void note_allocate(std::size_t bytes) noexcept {
  const auto now = g_live.fetch_add(static_cast<std::int64_t>(bytes)) +
                   static_cast<std::int64_t>(bytes);
  g_count.fetch_add(1, std::memory_order_relaxed);
  auto peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

void note_deallocate(std::size_t bytes) noexcept {
  g_live.fetch_sub(static_cast<std::int64_t>(bytes));
}

std::int64_t live_bytes() noexcept { return g_live.load(); }
std::int64_t peak_bytes() noexcept { return g_peak.load(); }
std::int64_t allocation_count() noexcept { return g_count.load(); }

void reset_peak() noexcept { g_peak.store(g_live.load()); }

}  // namespace adamra::memory

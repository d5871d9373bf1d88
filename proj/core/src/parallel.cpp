#include "heavytail/parallel.hpp"

#include <atomic>

namespace heavytail {

namespace {
std::atomic<std::size_t> g_workers{1};
}

std::size_t worker_count() noexcept { return g_workers.load(std::memory_order_relaxed); }

void set_worker_count(std::size_t workers) noexcept {
  g_workers.store(workers == 0 ? 1 : workers, std::memory_order_relaxed);
}

}  // namespace heavytail

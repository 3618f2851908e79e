#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace ceff {

/// Evaluates fn(i) for i in [0, n) on `workers` threads and hands results to
/// sink(i, value) in index order. Work proceeds in windows so memory stays
/// bounded by `window` results. The first exception is rethrown after the
/// window drains.
template <class Fn, class Sink>
void parallel_for_ordered(std::size_t n, unsigned workers, Fn&& fn, Sink&& sink, std::size_t window = 4096) {
  using Value = decltype(fn(std::size_t{}));
  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) sink(i, fn(i));
    return;
  }
  std::vector<std::optional<Value>> slots;
  for (std::size_t base = 0; base < n; base += window) {
    const std::size_t count = std::min(window, n - base);
    slots.assign(count, std::nullopt);
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto run = [&] {
      for (std::size_t k; !failed.load(std::memory_order_relaxed) && (k = cursor.fetch_add(1)) < count;) {
        try {
          slots[k].emplace(fn(base + k));
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    for (std::size_t k = 0; k < count; ++k) sink(base + k, std::move(*slots[k]));
  }
}

/// Ordered map into a vector.
template <class Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  using Value = decltype(fn(std::size_t{}));
  std::vector<Value> out;
  out.reserve(n);
  parallel_for_ordered(n, workers, fn, [&](std::size_t, Value&& v) { out.push_back(std::move(v)); });
  return out;
}

}  // namespace ceff

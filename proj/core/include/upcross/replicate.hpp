#pragma once

// Replicate fan-out. Each replicate's result lands in its own slot, so the
// output does not depend on the worker count or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "upcross/process.hpp"

namespace upcross {

struct SimulationSettings {
  std::size_t replicates = 2000;
  std::uint64_t seed = 20070101;
  unsigned workers = 1;
};

/// Calls fn(r, state) for r in [0, count); `State` is default-constructed
/// once per worker and can hold reusable buffers.
template <class State, class Fn>
auto map_replicates(std::size_t count, unsigned workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t, State&>> {
  using Result = std::invoke_result_t<Fn&, std::size_t, State&>;
  std::vector<Result> out(count);
  if (count == 0) return out;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    State state;
    try {
      for (std::size_t r = next++; r < count; r = next++) out[r] = fn(r, state);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = count;
    }
  };

  const auto threads = static_cast<std::size_t>(std::clamp<std::size_t>(workers, 1, count));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct WindowWorkspace {
  SamplePath path;
  InnovationStream innovations;
};

/// Generates replicate r's window with seed replicate_seed(settings.seed, r)
/// and returns fn(r, path).
template <class Fn>
auto map_windows(const ProcessSpec& spec, std::size_t n, const SimulationSettings& settings,
                 Fn&& fn) {
  return map_replicates<WindowWorkspace>(
      settings.replicates, settings.workers,
      [&](std::size_t r, WindowWorkspace& ws) {
        generate_window_into(spec, n, replicate_seed(settings.seed, r), ws.path,
                             ws.innovations);
        return fn(r, static_cast<const SamplePath&>(ws.path));
      });
}

}  // namespace upcross

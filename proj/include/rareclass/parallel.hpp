// Minimal deterministic work sharing. Results are always written to
// index-addressed slots, so the outcome never depends on the schedule.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rareclass {

// Global cap on worker threads (0 = hardware concurrency). The CLI exposes
// this as --threads; tests use it to prove schedule independence.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, count). Exceptions are rethrown on the caller
// thread (the first one by index order).
void parallel_for_index(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rareclass

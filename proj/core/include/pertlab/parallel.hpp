#pragma once

// Minimal fork-join helper. Work is split into a fixed number of chunks that
// does not depend on the worker count; per-chunk results are combined in
// chunk order, so reductions are identical for every --threads value.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace pertlab {

void set_worker_count(unsigned workers);
unsigned worker_count();

/// Calls body(chunk, begin, end) for contiguous chunks of [0, n).
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunk_count, Body&& body) {
  if (n == 0) return;
  chunk_count = std::max<std::size_t>(1, std::min(chunk_count, n));
  const std::size_t per = (n + chunk_count - 1) / chunk_count;
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(chunk_count));
  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * per;
    const std::size_t end = std::min(n, begin + per);
    if (begin < end) body(c, begin, end);
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunk_count; ++c) run_chunk(c);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunk_count; c += workers) run_chunk(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Ordered reduction: partial results are folded left to right by chunk.
template <class T, class Map, class Fold>
T parallel_reduce(std::size_t n, std::size_t chunk_count, T init, Map&& map, Fold&& fold) {
  chunk_count = std::max<std::size_t>(1, std::min(chunk_count, std::max<std::size_t>(n, 1)));
  std::vector<T> partial(chunk_count, init);
  parallel_chunks(n, chunk_count, [&](std::size_t c, std::size_t b, std::size_t e) {
    partial[c] = map(b, e);
  });
  T acc = init;
  for (auto& p : partial) acc = fold(acc, p);
  return acc;
}

}  // namespace pertlab

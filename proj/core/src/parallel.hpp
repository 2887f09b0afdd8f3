#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "dhl/errors.hpp"

namespace dhl::detail {

// Runs body(chunk, begin, end) over `chunks` contiguous slices of [0, size).
template <typename Body>
void for_each_chunk(std::size_t size, std::uint32_t chunks, unsigned threads, Body body) {
  if (chunks == 0) throw UsageError("chunk count must be >= 1");
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, chunks);
  auto run = [&](std::uint32_t c) {
    const std::size_t begin = size * c / chunks;
    const std::size_t end = size * (c + 1) / chunks;
    body(c, begin, end);
  };
  if (threads <= 1) {
    for (std::uint32_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::uint32_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::uint32_t c = next++; c < chunks; c = next++) {
        try {
          run(c);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// body(i) for i in [0, count), spread over `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  if (count == 0) return;
  const auto chunks = static_cast<std::uint32_t>(std::min<std::size_t>(count, 1u << 16));
  for_each_chunk(count, chunks, threads, [&](std::uint32_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

}  // namespace dhl::detail

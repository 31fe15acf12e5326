// Copyright 2026 The SLF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slf::detail {

// Calls fn(i) for i in [0, n) on up to `workers` threads. The first
// exception stops further work and is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::exception_ptr failure;
  const auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || stop.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  const unsigned count = static_cast<unsigned>(
      std::clamp<std::size_t>(n, 1, std::max(1u, workers)));
  if (count == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < count; ++w) pool.emplace_back(run);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace slf::detail

#include "lfm/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lfm {

namespace {
std::atomic<int> g_threads{0};
}

void set_num_threads(int n) { g_threads = std::max(0, n); }

int num_threads() {
  const int n = g_threads.load();
  if (n > 0) return n;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(Index begin, Index end, const std::function<void(Index)>& fn) {
  const Index count = end - begin;
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<Index>(num_threads(), count));
  if (workers <= 1) {
    for (Index i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{begin};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (Index i = next++; i < end; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = end;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace lfm

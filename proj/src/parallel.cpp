#include "stochfv/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace stochfv {

void parallel_for(std::int64_t count, int workers,
                  const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  if (workers <= 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }

  const int n_threads = static_cast<int>(
      std::min<std::int64_t>(workers, count));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run = [&]() {
    for (;;) {
      const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(run);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stochfv

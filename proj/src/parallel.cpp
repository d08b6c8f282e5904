#include "wkam/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wkam {

int worker_count() {
  if (const char* env = std::getenv("WKAM_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int, int)>& body) {
  if (n <= 0) return;
  constexpr int kChunk = 256;
  const int chunks = (n + kChunk - 1) / kChunk;
  const int workers = std::min(worker_count(), chunks);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        body(c * kChunk, std::min(n, (c + 1) * kChunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wkam

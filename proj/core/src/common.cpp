#include "gerseg/common.hpp"

#include <cstdlib>
#include <thread>
#include <vector>

namespace gerseg {

void throw_invalid(const std::string& msg) { throw std::invalid_argument(msg); }
void throw_shape(const std::string& msg) { throw ShapeError(msg); }

int worker_threads() {
  const char* env = std::getenv("GER_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || v < 1) return 1;
  if (v > 256) v = 256;
  return static_cast<int>(v);
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  const int threads = worker_threads();
  if (threads <= 1 || n <= 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int used = static_cast<int>(std::min<int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (int t = 0; t < used; ++t) {
    pool.emplace_back([&, t]() {
      for (int64_t i = t; i < n; i += used) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace gerseg

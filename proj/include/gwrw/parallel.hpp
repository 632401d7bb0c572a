#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"

namespace gwrw {

class PartialResultError : public Error {
 public:
  PartialResultError(std::size_t completed, const std::string& what)
      : Error(ErrorCode::InvalidArgument, what + " (" + std::to_string(completed) + " replicas completed)"),
        completed_(completed) {}
  std::size_t completed() const { return completed_; }

 private:
  std::size_t completed_;
};

inline unsigned default_workers() {
  if (const char* e = std::getenv("GWRW_WORKERS")) {
    const long w = std::strtol(e, nullptr, 10);
    if (w > 0) return unsigned(w);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs task(i) for i in [0, replicas) on `workers` threads and returns the
// results in replica order. The task must be a pure function of its index, so
// the output does not depend on the worker count or on scheduling.
template <class Task>
auto parallel_map(std::size_t replicas, unsigned workers, Task&& task)
    -> std::vector<decltype(task(std::size_t{}))> {
  using T = decltype(task(std::size_t{}));
  std::vector<T> out(replicas);
  if (replicas == 0) return out;
  if (workers == 0) workers = 1;
  workers = unsigned(std::min<std::size_t>(workers, replicas));
  std::atomic<std::size_t> next{0}, done{0};
  std::exception_ptr first_error;
  std::size_t first_error_index = replicas;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= replicas) return;
      try {
        out[i] = task(i);
        done.fetch_add(1);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (first_error) {
    std::string msg = "replica " + std::to_string(first_error_index) + " failed";
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception& e) {
      msg += ": ";
      msg += e.what();
    } catch (...) {
    }
    throw PartialResultError(done.load(), msg);
  }
  return out;
}

}  // namespace gwrw

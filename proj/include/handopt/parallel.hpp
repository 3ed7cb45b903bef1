#pragma once

#include <cstddef>
#include <functional>

namespace handopt {

/// Fans independent index-addressed jobs out over a fixed number of threads.
/// Callers write results into per-index slots and reduce in index order, so
/// results never depend on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers = 1);

  unsigned workers() const { return workers_; }

  /// Runs fn(i) for i in [0, n). If any job throws, the exception from the
  /// lowest failing index is rethrown after all threads have joined.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) const;

 private:
  unsigned workers_;
};

/// HANDOPT_WORKERS if set and positive, else the hardware concurrency.
unsigned default_worker_count();

}  // namespace handopt

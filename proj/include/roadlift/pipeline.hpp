#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "roadlift/descriptor.hpp"
#include "roadlift/eval.hpp"
#include "roadlift/lifting.hpp"
#include "roadlift/tin_map.hpp"

namespace roadlift {

// Runs fn(0) .. fn(n - 1) on up to `workers` threads. Results land in index order,
// so the output does not depend on scheduling. The first exception (lowest index)
// is rethrown after all workers finish.
template <typename T>
std::vector<T> orderedParallelMap(int n, int workers, const std::function<T(int)>& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto run = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(workers, 1, std::max(1, n));
  if (threads == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct LiftRecord {
  Detection detection;
  std::optional<LiftResult> result;
  std::string error;  // set when lifting failed
};

// Lifts every detection; failures are recorded rather than thrown.
std::vector<LiftRecord> liftDetections(const std::vector<Detection>& detections, const Camera& camera,
                                       const TinMap& map);

std::vector<ScoredBox> scoredBoxes(const std::vector<LiftRecord>& records);

}  // namespace roadlift

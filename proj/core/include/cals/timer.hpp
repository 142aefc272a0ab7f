#pragma once

#include <chrono>

namespace cals
{
  /// Monotonic wall-clock stopwatch, started on construction.
  class Timer
  {
  public:
    Timer() : start_(clock::now()) {}
    void restart() { start_ = clock::now(); }
    [[nodiscard]] double seconds() const { return std::chrono::duration<double>(clock::now() - start_).count(); }

  private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_;
  };
} // namespace cals

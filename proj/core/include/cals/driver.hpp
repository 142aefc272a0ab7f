#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cals/als.hpp"
#include "cals/model.hpp"
#include "cals/multimatrix.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  enum class ExecutionMode
  {
    SequentialAls,     ///< one instance after another, threaded kernels
    ParallelInstances, ///< instances concurrently, single-threaded kernels each
    Cals,              ///< fused concurrent ALS
  };

  std::string_view to_string(ExecutionMode m);
  ExecutionMode parse_execution_mode(std::string_view s);

  /// One timed unit of work: a fused iteration (Cals) or a whole instance (the other modes).
  struct Segment
  {
    std::size_t index{0};
    FlopCount flops{};
    double seconds{0.0};
    index_t width{0};         ///< active width (Cals) or rank
    std::size_t instances{0}; ///< instances advanced in this segment
  };

  struct DriverConfig
  {
    AlsOptions als{};
    CapacityPolicy capacity{};
    ExecutionMode mode{ExecutionMode::Cals};
    int threads{1};
    /// Pin BLAS to one thread and keep FIFO scheduling so results are reproducible bit for bit.
    bool deterministic{false};
    /// Called after every segment; used by the benchmark harness.
    std::function<void(const Segment &)> on_segment{};

    void validate() const;
  };

  struct JobQueues
  {
    std::deque<Model> input;
    std::deque<Model> output;
  };

  struct RunStats
  {
    double seconds{0.0};
    FlopCount flops{};
    std::size_t segments{0};
    std::size_t fused_iterations{0};
    index_t max_active_width{0};
    std::uint64_t columns_moved{0};
  };

  /// Drains `queues.input` and appends every finished model to `queues.output`.
  RunStats run(const DenseTensor &t, JobQueues &queues, const DriverConfig &cfg);
  /// Convenience overload returning the output queue.
  std::deque<Model> run(const DenseTensor &t, std::deque<Model> input, const DriverConfig &cfg,
                        RunStats *stats = nullptr);
} // namespace cals

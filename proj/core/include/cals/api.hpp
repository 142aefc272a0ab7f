#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "cals/driver.hpp"
#include "cals/model.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  std::string version();

  struct CpOptions
  {
    double tol{1e-6};
    int max_iterations{1000};
    index_t r_star{kDefaultRStar};
    bool line_search{false};
    double alpha{0.0}; ///< > 0 selects a constant extrapolation factor instead of ∛iter
    bool non_negative{false};
    ExecutionMode mode{ExecutionMode::Cals};
    int threads{1};
    bool deterministic{false};
    std::uint64_t seed{0};

    [[nodiscard]] DriverConfig driver_config() const;
  };

  /// `per_rank` random starting points for each rank, ids 0, 1, ... in order, each with its
  /// own seed derived from `base_seed`.
  std::deque<Model> make_starting_points(std::span<const index_t> dims, std::span<const index_t> ranks, int per_rank,
                                         std::uint64_t base_seed);

  /// Tensor from a caller-owned buffer. `row_major` means the last index varies fastest (C order)
  /// and triggers a converting copy.
  DenseTensor tensor_from_buffer(std::span<const double> data, std::span<const index_t> dims, bool row_major);

  /// Decomposes `t` once per starting point; results are ordered by instance id.
  std::vector<Model> cp_cals(const DenseTensor &t, std::deque<Model> starting_points, const CpOptions &opts,
                             RunStats *stats = nullptr);
  std::vector<Model> cp_cals(const DenseTensor &t, std::span<const index_t> ranks, int per_rank,
                             const CpOptions &opts, RunStats *stats = nullptr);
} // namespace cals

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cals/tensor.hpp"

namespace cals
{
  using InstanceId = std::uint64_t;

  enum class ModelStatus
  {
    Pending,
    Active,
    Converged,
    IterationCapReached,
    NumericalFailure,
  };

  std::string_view to_string(ModelStatus s);

  /// One CP model: N factor matrices sharing a rank, plus its fitting state.
  struct Model
  {
    InstanceId id{0};
    index_t rank{0};
    std::vector<Matrix> factors;
    double error{0.0}; ///< latest squared residual ‖T − X̂‖²
    double fit{0.0};   ///< latest 1 − ‖T − X̂‖/‖T‖
    int iterations{0};
    ModelStatus status{ModelStatus::Pending};
    std::uint64_t seed{0};
    std::vector<double> error_history;
    std::vector<double> fit_history;
    int line_search_accepted{0};
    int nnls_nonconverged{0}; ///< rows whose active-set search hit its iteration cap
    double seconds{0.0};      ///< wall time from admission to retirement

    [[nodiscard]] index_t order() const { return static_cast<index_t>(factors.size()); }
    [[nodiscard]] std::vector<ConstMatrixView> views() const;
    /// Throws DimensionError unless factor shapes match `dims` and `rank`.
    void check_conforms(std::span<const index_t> dims) const;
  };

  /// Starting point with entries drawn from uniform(0, 1), deterministic per seed.
  Model random_model(std::span<const index_t> dims, index_t rank, std::uint64_t seed, InstanceId id = 0);

  /// Dense reconstruction Σ_r a_r ∘ b_r ∘ … of a model.
  DenseTensor reconstruct(std::span<const index_t> dims, std::span<const Matrix> factors);
} // namespace cals

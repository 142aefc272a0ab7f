#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cals/tensor.hpp"

namespace cals
{
  /// Result of one non-negative least squares solve.
  struct NnlsResult
  {
    std::vector<double> x;
    std::vector<bool> active; ///< variables pinned to zero
    bool converged{true};
    int iterations{0};
  };

  /// Solves min_x xᵀHx − 2xᵀb subject to x ≥ 0 with a Lawson–Hanson active-set search on the
  /// normal equations. `warm_active`, when non-empty, seeds the active set. The outer loop is
  /// capped at 3·n iterations; on hitting the cap the best feasible iterate is returned with
  /// converged = false.
  NnlsResult nnls_solve(ConstMatrixView h, std::span<const double> b, const std::vector<bool> &warm_active = {});

  /// Per-mode, per-row active sets carried between ALS iterations for warm starts.
  class NnlsState
  {
  public:
    NnlsState() = default;
    NnlsState(std::span<const index_t> dims, index_t rank);

    [[nodiscard]] bool empty() const { return active_.empty(); }
    [[nodiscard]] index_t rank() const { return rank_; }
    /// Active flags of `row` in `mode`; empty before the first solve of that row.
    [[nodiscard]] const std::vector<bool> &active(index_t mode, index_t row) const
    {
      return active_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(row)];
    }
    void set_active(index_t mode, index_t row, std::vector<bool> flags)
    {
      active_[static_cast<std::size_t>(mode)][static_cast<std::size_t>(row)] = std::move(flags);
    }

  private:
    index_t rank_{0};
    std::vector<std::vector<std::vector<bool>>> active_; // [mode][row]
  };

  /// Row-wise NNLS factor update: row i of `out` solves the problem with b = m(i, :).
  /// Returns the number of rows whose active-set search did not converge.
  int nnls_update(ConstMatrixView m, ConstMatrixView h, NnlsState &state, index_t mode, MatrixView out);
  Matrix nnls_update(ConstMatrixView m, ConstMatrixView h, NnlsState &state, index_t mode);
} // namespace cals

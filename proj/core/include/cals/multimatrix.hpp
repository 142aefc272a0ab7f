#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cals/model.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  /// Default maximum multi-matrix width R*.
  inline constexpr index_t kDefaultRStar = 4200;

  struct CapacityPolicy
  {
    index_t r_star{kDefaultRStar};
    /// Throws ConfigError if r_star cannot hold a model of `max_rank` columns.
    void validate(index_t max_rank) const;
  };

  /// Placement of one constituent matrix inside a multi-matrix.
  struct Constituent
  {
    InstanceId id{0};
    index_t offset{0};
    index_t rank{0};
    friend bool operator==(const Constituent &, const Constituent &) = default;
  };

  /// Fixed-capacity buffer of rows × capacity doubles holding horizontally concatenated
  /// constituent matrices. The buffer is allocated once and never reallocated.
  class MultiMatrix
  {
  public:
    MultiMatrix(index_t rows, index_t capacity);

    [[nodiscard]] index_t rows() const { return rows_; }
    [[nodiscard]] index_t capacity() const { return capacity_; }
    [[nodiscard]] index_t active_width() const { return active_width_; }
    /// One past the last used column (equals active_width() when compact).
    [[nodiscard]] index_t end_column() const;
    [[nodiscard]] bool is_compact() const { return end_column() == active_width_; }
    [[nodiscard]] const std::vector<Constituent> &layout() const { return layout_; }
    [[nodiscard]] const double *buffer() const { return data_.data(); }

    /// Columns [0, active_width); only meaningful when compact.
    [[nodiscard]] ConstMatrixView active_view() const;
    [[nodiscard]] MatrixView constituent(InstanceId id);
    [[nodiscard]] ConstMatrixView constituent(InstanceId id) const;
    [[nodiscard]] std::optional<std::size_t> find(InstanceId id) const;

    /// Appends after the last constituent. Returns false (no mutation) if it does not fit.
    bool append(InstanceId id, ConstMatrixView m);
    /// Copies the constituent out and drops it from the layout. Leaves a gap.
    Matrix remove(InstanceId id);
    /// Packs constituents left in layout order. Returns the number of columns moved.
    index_t compress();

  private:
    index_t rows_;
    index_t capacity_;
    index_t active_width_{0};
    std::vector<double> data_;
    std::vector<Constituent> layout_;
  };

  /// One multi-matrix per tensor mode, all sharing a layout.
  class MultiMatrixSet
  {
  public:
    MultiMatrixSet(std::span<const index_t> dims, CapacityPolicy policy);

    [[nodiscard]] std::span<const MultiMatrix> modes() const { return multis_; }
    [[nodiscard]] MultiMatrix &mode(index_t n) { return multis_[static_cast<std::size_t>(n)]; }
    [[nodiscard]] const MultiMatrix &mode(index_t n) const { return multis_[static_cast<std::size_t>(n)]; }
    [[nodiscard]] index_t order() const { return static_cast<index_t>(multis_.size()); }
    [[nodiscard]] index_t r_star() const { return policy_.r_star; }
    [[nodiscard]] index_t active_width() const { return multis_.front().active_width(); }
    [[nodiscard]] const std::vector<Constituent> &layout() const { return multis_.front().layout(); }
    [[nodiscard]] std::size_t size() const { return layout().size(); }

    /// Copies the model's factors to the end of every mode's buffer. Returns false without
    /// mutating anything when active_width + rank > R*. Throws ConfigError if rank > R*.
    bool try_insert(const Model &model);
    /// Copies the instance's factors out (one per mode) and frees its columns.
    std::vector<Matrix> remove(InstanceId id);
    /// Compresses every mode. Returns total columns moved across modes.
    index_t compress();
    /// Cumulative number of columns moved by compress() since construction.
    [[nodiscard]] std::uint64_t columns_moved() const { return columns_moved_; }

  private:
    CapacityPolicy policy_;
    std::vector<MultiMatrix> multis_;
    std::uint64_t columns_moved_{0};
  };
} // namespace cals

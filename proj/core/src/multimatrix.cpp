#include "cals/multimatrix.hpp"

#include <algorithm>
#include <string>

#include "cals/error.hpp"

namespace cals
{
  void CapacityPolicy::validate(index_t max_rank) const
  {
    if (r_star < 1) throw ConfigError("r_star must be positive");
    if (max_rank > r_star)
      throw ConfigError("r_star (" + std::to_string(r_star) + ") is smaller than the largest requested rank (" +
                        std::to_string(max_rank) + ")");
  }

  MultiMatrix::MultiMatrix(index_t rows, index_t capacity)
      : rows_(rows), capacity_(capacity), data_(static_cast<std::size_t>(rows * capacity), 0.0)
  {
    if (rows < 1 || capacity < 1) throw ConfigError("multi-matrix extents must be positive");
  }

  index_t MultiMatrix::end_column() const
  {
    return layout_.empty() ? 0 : layout_.back().offset + layout_.back().rank;
  }

  ConstMatrixView MultiMatrix::active_view() const
  {
    return {data_.data(), rows_, active_width_, rows_};
  }

  std::optional<std::size_t> MultiMatrix::find(InstanceId id) const
  {
    for (std::size_t k = 0; k < layout_.size(); k++)
      if (layout_[k].id == id) return k;
    return std::nullopt;
  }

  MatrixView MultiMatrix::constituent(InstanceId id)
  {
    const auto k = find(id);
    if (!k) throw ConfigError("unknown instance id " + std::to_string(id));
    const auto &c = layout_[*k];
    return {data_.data() + c.offset * rows_, rows_, c.rank, rows_};
  }

  ConstMatrixView MultiMatrix::constituent(InstanceId id) const
  {
    const auto k = find(id);
    if (!k) throw ConfigError("unknown instance id " + std::to_string(id));
    const auto &c = layout_[*k];
    return {data_.data() + c.offset * rows_, rows_, c.rank, rows_};
  }

  bool MultiMatrix::append(InstanceId id, ConstMatrixView m)
  {
    if (m.rows != rows_) throw DimensionError("multi-matrix append: row count mismatch");
    if (find(id)) throw ConfigError("instance id " + std::to_string(id) + " already present");
    const index_t offset = end_column();
    if (offset + m.cols > capacity_) return false;
    MatrixView{data_.data() + offset * rows_, rows_, m.cols, rows_}.copy_from(m);
    layout_.push_back({id, offset, m.cols});
    active_width_ += m.cols;
    return true;
  }

  Matrix MultiMatrix::remove(InstanceId id)
  {
    const auto k = find(id);
    if (!k) throw ConfigError("unknown instance id " + std::to_string(id));
    const auto c = layout_[*k];
    Matrix out(ConstMatrixView{data_.data() + c.offset * rows_, rows_, c.rank, rows_});
    layout_.erase(layout_.begin() + static_cast<std::ptrdiff_t>(*k));
    active_width_ -= c.rank;
    return out;
  }

  index_t MultiMatrix::compress()
  {
    index_t next = 0;
    index_t moved = 0;
    for (auto &c : layout_)
    {
      if (c.offset != next)
      {
        // Destination precedes source, so a forward copy is safe for overlapping ranges.
        const double *src = data_.data() + c.offset * rows_;
        std::copy(src, src + c.rank * rows_, data_.data() + next * rows_);
        c.offset = next;
        moved += c.rank;
      }
      next += c.rank;
    }
    return moved;
  }

  // ---------------------------------------------------------------------------------------------

  MultiMatrixSet::MultiMatrixSet(std::span<const index_t> dims, CapacityPolicy policy) : policy_(policy)
  {
    policy_.validate(1);
    multis_.reserve(dims.size());
    for (auto d : dims) multis_.emplace_back(d, policy_.r_star);
  }

  bool MultiMatrixSet::try_insert(const Model &model)
  {
    if (static_cast<index_t>(model.factors.size()) != order())
      throw DimensionError("try_insert: model order does not match the multi-matrix set");
    if (model.rank < 1) throw ConfigError("model " + std::to_string(model.id) + " has no columns");
    if (model.rank > policy_.r_star)
      throw ConfigError("model " + std::to_string(model.id) + " has rank " + std::to_string(model.rank) +
                        " > r_star " + std::to_string(policy_.r_star));
    for (index_t n = 0; n < order(); n++)
    {
      if (model.factors[static_cast<std::size_t>(n)].rows() != mode(n).rows() ||
          model.factors[static_cast<std::size_t>(n)].cols() != model.rank)
        throw DimensionError("try_insert: factor shape does not conform");
    }
    if (active_width() + model.rank > policy_.r_star) return false;
    if (multis_.front().end_column() + model.rank > policy_.r_star) compress();
    for (index_t n = 0; n < order(); n++)
      mode(n).append(model.id, model.factors[static_cast<std::size_t>(n)]);
    return true;
  }

  std::vector<Matrix> MultiMatrixSet::remove(InstanceId id)
  {
    if (!multis_.front().find(id)) throw ConfigError("unknown instance id " + std::to_string(id));
    std::vector<Matrix> out;
    out.reserve(multis_.size());
    for (auto &mm : multis_) out.push_back(mm.remove(id));
    return out;
  }

  index_t MultiMatrixSet::compress()
  {
    index_t moved = 0;
    for (auto &mm : multis_) moved += mm.compress();
    columns_moved_ += static_cast<std::uint64_t>(moved);
    return moved;
  }
} // namespace cals

#include "cals/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "blas.hpp"
#include "cals/error.hpp"

namespace cals
{
  void MatrixView::copy_from(ConstMatrixView src) const
  {
    if (src.rows != rows || src.cols != cols) throw DimensionError("copy_from: shape mismatch");
    for (index_t j = 0; j < cols; j++) std::copy_n(src.data + j * src.ld, rows, data + j * ld);
  }

  void MatrixView::fill(double value) const
  {
    for (index_t j = 0; j < cols; j++) std::fill_n(data + j * ld, rows, value);
  }

  Matrix::Matrix(index_t rows, index_t cols, double value)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), value)
  {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix extent");
  }

  Matrix::Matrix(index_t rows, index_t cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data))
  {
    if (rows < 0 || cols < 0 || static_cast<index_t>(data_.size()) != rows * cols)
      throw DimensionError("matrix data length does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }

  Matrix::Matrix(ConstMatrixView src) : Matrix(src.rows, src.cols)
  {
    view().copy_from(src);
  }

  Matrix Matrix::from_rows(const std::vector<std::vector<double>> &rows)
  {
    const auto m = static_cast<index_t>(rows.size());
    const auto n = m > 0 ? static_cast<index_t>(rows.front().size()) : 0;
    Matrix out(m, n);
    for (index_t i = 0; i < m; i++)
    {
      if (static_cast<index_t>(rows[static_cast<std::size_t>(i)].size()) != n)
        throw DimensionError("from_rows: ragged rows");
      for (index_t j = 0; j < n; j++) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
  }

  Matrix Matrix::identity(index_t n)
  {
    Matrix out(n, n);
    for (index_t i = 0; i < n; i++) out(i, i) = 1.0;
    return out;
  }

  Matrix Matrix::transpose() const
  {
    Matrix out(cols_, rows_);
    for (index_t j = 0; j < cols_; j++)
      for (index_t i = 0; i < rows_; i++) out(j, i) = (*this)(i, j);
    return out;
  }

  double Matrix::frobenius_norm() const
  {
    double s = 0.0;
    for (auto v : data_) s += v * v;
    return std::sqrt(s);
  }

  bool Matrix::all_finite() const
  {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  double relative_frobenius_distance(ConstMatrixView a, ConstMatrixView b)
  {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("relative_frobenius_distance: shape mismatch");
    double diff = 0.0, ref = 0.0;
    for (index_t j = 0; j < a.cols; j++)
      for (index_t i = 0; i < a.rows; i++)
      {
        const double d = a(i, j) - b(i, j);
        diff += d * d;
        ref += b(i, j) * b(i, j);
      }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-300);
  }

  // ---------------------------------------------------------------------------------------------

  namespace
  {
    index_t checked_volume(const std::vector<index_t> &dims)
    {
      if (dims.size() < 2) throw DimensionError("tensor order must be at least 2");
      index_t volume = 1;
      for (auto d : dims)
      {
        if (d < 1) throw DimensionError("tensor extents must be positive");
        volume *= d;
      }
      return volume;
    }
  } // namespace

  DenseTensor::DenseTensor(std::vector<index_t> dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data))
  {
    if (checked_volume(dims_) != static_cast<index_t>(data_.size()))
      throw DimensionError("tensor data length does not match the product of its extents");
    sqnorm_ = std::transform_reduce(data_.begin(), data_.end(), 0.0, std::plus<>(), [](double v) { return v * v; });
  }

  DenseTensor::DenseTensor(std::vector<index_t> dims)
      : DenseTensor(dims, std::vector<double>(static_cast<std::size_t>(checked_volume(dims)), 0.0))
  {
  }

  index_t DenseTensor::linear_index(std::span<const index_t> idx) const
  {
    if (static_cast<index_t>(idx.size()) != order()) throw DimensionError("index arity does not match tensor order");
    index_t lin = 0;
    index_t stride = 1;
    for (std::size_t m = 0; m < dims_.size(); m++)
    {
      if (idx[m] < 0 || idx[m] >= dims_[m]) throw DimensionError("tensor index out of range");
      lin += idx[m] * stride;
      stride *= dims_[m];
    }
    return lin;
  }

  double DenseTensor::at(std::span<const index_t> idx) const
  {
    return data_[static_cast<std::size_t>(linear_index(idx))];
  }

  index_t DenseTensor::leading_size(index_t mode) const
  {
    index_t s = 1;
    for (index_t m = 0; m < mode; m++) s *= dim(m);
    return s;
  }

  index_t DenseTensor::trailing_size(index_t mode) const
  {
    index_t s = 1;
    for (index_t m = mode + 1; m < order(); m++) s *= dim(m);
    return s;
  }

  // ---------------------------------------------------------------------------------------------

  UnfoldingView::UnfoldingView(const DenseTensor &t, index_t mode) : tensor_(&t), mode_(mode)
  {
    if (mode < 0 || mode >= t.order())
      throw DimensionError("unfold: mode " + std::to_string(mode) + " out of range for order " +
                           std::to_string(t.order()));
    rows_ = t.dim(mode);
    leading_ = t.leading_size(mode);
    trailing_ = t.trailing_size(mode);
  }

  double UnfoldingView::operator()(index_t r, index_t c) const
  {
    const index_t l = c % leading_;
    const index_t q = c / leading_;
    return tensor_->data()[static_cast<std::size_t>(l + leading_ * (r + rows_ * q))];
  }

  std::optional<ConstMatrixView> UnfoldingView::as_matrix() const
  {
    if (mode_ != 0) return std::nullopt;
    return ConstMatrixView{tensor_->data().data(), rows_, trailing_, rows_};
  }

  std::optional<ConstMatrixView> UnfoldingView::as_transposed_matrix() const
  {
    if (mode_ != tensor_->order() - 1) return std::nullopt;
    return ConstMatrixView{tensor_->data().data(), leading_, rows_, leading_};
  }

  UnfoldingView unfold_view(const DenseTensor &t, index_t mode)
  {
    return {t, mode};
  }

  // ---------------------------------------------------------------------------------------------

  void khatri_rao_into(ConstMatrixView a, ConstMatrixView b, MatrixView out)
  {
    if (a.cols != b.cols) throw DimensionError("khatri_rao: column counts differ");
    if (out.rows != a.rows * b.rows || out.cols != a.cols) throw DimensionError("khatri_rao: output shape mismatch");
    for (index_t j = 0; j < a.cols; j++)
      for (index_t i = 0; i < a.rows; i++)
      {
        const double s = a(i, j);
        double *dst = out.data + j * out.ld + i * b.rows;
        const double *src = b.data + j * b.ld;
        for (index_t k = 0; k < b.rows; k++) dst[k] = s * src[k];
      }
  }

  Matrix khatri_rao(ConstMatrixView a, ConstMatrixView b)
  {
    if (a.cols != b.cols) throw DimensionError("khatri_rao: column counts differ");
    Matrix out(a.rows * b.rows, a.cols);
    khatri_rao_into(a, b, out.view());
    return out;
  }

  void khatri_rao_except_into(std::span<const ConstMatrixView> factors, index_t skip_mode, MatrixView out)
  {
    index_t rows = 1;
    index_t cols = -1;
    for (std::size_t m = 0; m < factors.size(); m++)
    {
      if (static_cast<index_t>(m) == skip_mode) continue;
      rows *= factors[m].rows;
      if (cols < 0) cols = factors[m].cols;
      else if (cols != factors[m].cols) throw DimensionError("khatri_rao: factors disagree on column count");
    }
    if (cols < 0) throw DimensionError("khatri_rao: no factors");
    if (out.rows != rows || out.cols != cols) throw DimensionError("khatri_rao: output shape mismatch");

    // Built in place per column: start from the fastest factor, then expand block-wise with each
    // slower factor. Blocks are written high to low so the source block 0 is scaled last.
    for (index_t j = 0; j < cols; j++)
    {
      double *col = out.data + j * out.ld;
      index_t len = 0;
      for (std::size_t m = 0; m < factors.size(); m++)
      {
        if (static_cast<index_t>(m) == skip_mode) continue;
        const ConstMatrixView &f = factors[m];
        if (len == 0)
        {
          for (index_t i = 0; i < f.rows; i++) col[i] = f(i, j);
          len = f.rows;
          continue;
        }
        for (index_t i = f.rows - 1; i >= 1; i--)
        {
          const double s = f(i, j);
          double *dst = col + i * len;
          for (index_t k = 0; k < len; k++) dst[k] = s * col[k];
        }
        const double s0 = f(0, j);
        for (index_t k = 0; k < len; k++) col[k] *= s0;
        len *= f.rows;
      }
    }
  }

  Matrix hadamard(ConstMatrixView a, ConstMatrixView b)
  {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("hadamard: shape mismatch");
    Matrix out(a.rows, a.cols);
    for (index_t j = 0; j < a.cols; j++)
      for (index_t i = 0; i < a.rows; i++) out(i, j) = a(i, j) * b(i, j);
    return out;
  }

  Matrix hadamard_fold(std::span<const Matrix> mats)
  {
    if (mats.empty()) throw DimensionError("hadamard_fold: empty list");
    Matrix out = mats.front();
    for (std::size_t k = 1; k < mats.size(); k++) out = hadamard(out, mats[k]);
    return out;
  }

  void gramian_into(ConstMatrixView a, MatrixView out)
  {
    if (out.rows != a.cols || out.cols != a.cols) throw DimensionError("gramian: output shape mismatch");
    const index_t r = a.cols;
    if (r == 0) return;
    if (a.rows == 0)
    {
      out.fill(0.0);
      return;
    }
    cblas_dsyrk(CblasColMajor, CblasUpper, CblasTrans, blas::to_blas(r), blas::to_blas(a.rows), 1.0, a.data,
                blas::to_blas(a.ld), 0.0, out.data, blas::to_blas(out.ld));
    for (index_t j = 0; j < r; j++)
      for (index_t i = j + 1; i < r; i++) out(i, j) = out(j, i);
  }

  Matrix gramian(ConstMatrixView a)
  {
    Matrix out(a.cols, a.cols);
    gramian_into(a, out.view());
    return out;
  }

  double inner_product(ConstMatrixView a, ConstMatrixView b)
  {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("inner_product: shape mismatch");
    double s = 0.0;
    for (index_t j = 0; j < a.cols; j++)
      for (index_t i = 0; i < a.rows; i++) s += a(i, j) * b(i, j);
    return s;
  }

  double sum_all(ConstMatrixView a)
  {
    double s = 0.0;
    for (index_t j = 0; j < a.cols; j++)
      for (index_t i = 0; i < a.rows; i++) s += a(i, j);
    return s;
  }
} // namespace cals

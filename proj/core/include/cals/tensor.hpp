#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cals
{
  using index_t = std::ptrdiff_t;

  /// Read-only column-major matrix view with an explicit leading dimension.
  struct ConstMatrixView
  {
    const double *data{nullptr};
    index_t rows{0};
    index_t cols{0};
    index_t ld{0};

    ConstMatrixView() = default;
    ConstMatrixView(const double *d, index_t r, index_t c, index_t leading)
        : data(d), rows(r), cols(c), ld(leading) {}
    ConstMatrixView(const double *d, index_t r, index_t c) : ConstMatrixView(d, r, c, r > 0 ? r : 1) {}

    [[nodiscard]] double operator()(index_t i, index_t j) const { return data[i + j * ld]; }
    [[nodiscard]] std::span<const double> col(index_t j) const
    {
      return {data + j * ld, static_cast<std::size_t>(rows)};
    }
    [[nodiscard]] ConstMatrixView cols_range(index_t first, index_t count) const
    {
      return {data + first * ld, rows, count, ld};
    }
    [[nodiscard]] bool contiguous() const { return ld == rows || cols <= 1; }
  };

  /// Mutable column-major matrix view.
  struct MatrixView
  {
    double *data{nullptr};
    index_t rows{0};
    index_t cols{0};
    index_t ld{0};

    MatrixView() = default;
    MatrixView(double *d, index_t r, index_t c, index_t leading) : data(d), rows(r), cols(c), ld(leading) {}
    MatrixView(double *d, index_t r, index_t c) : MatrixView(d, r, c, r > 0 ? r : 1) {}

    [[nodiscard]] double &operator()(index_t i, index_t j) const { return data[i + j * ld]; }
    [[nodiscard]] std::span<double> col(index_t j) const { return {data + j * ld, static_cast<std::size_t>(rows)}; }
    [[nodiscard]] MatrixView cols_range(index_t first, index_t count) const
    {
      return {data + first * ld, rows, count, ld};
    }
    operator ConstMatrixView() const { return {data, rows, cols, ld}; } // NOLINT(google-explicit-constructor)

    void copy_from(ConstMatrixView src) const;
    void fill(double value) const;
  };

  /// Owning dense column-major matrix.
  class Matrix
  {
  public:
    Matrix() = default;
    Matrix(index_t rows, index_t cols, double value = 0.0);
    Matrix(index_t rows, index_t cols, std::vector<double> data);
    explicit Matrix(ConstMatrixView src);

    /// Row-major initializer, handy in tests: Matrix::from_rows({{1,2},{3,4}}).
    static Matrix from_rows(const std::vector<std::vector<double>> &rows);
    static Matrix identity(index_t n);

    [[nodiscard]] index_t rows() const { return rows_; }
    [[nodiscard]] index_t cols() const { return cols_; }
    [[nodiscard]] index_t size() const { return rows_ * cols_; }

    [[nodiscard]] double &operator()(index_t i, index_t j) { return data_[i + j * rows_]; }
    [[nodiscard]] double operator()(index_t i, index_t j) const { return data_[i + j * rows_]; }

    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] std::span<const double> data() const { return data_; }

    [[nodiscard]] MatrixView view() { return {data_.data(), rows_, cols_, ld()}; }
    [[nodiscard]] ConstMatrixView view() const { return {data_.data(), rows_, cols_, ld()}; }
    operator ConstMatrixView() const { return view(); } // NOLINT(google-explicit-constructor)

    [[nodiscard]] Matrix transpose() const;
    [[nodiscard]] double frobenius_norm() const;
    [[nodiscard]] bool all_finite() const;

    friend bool operator==(const Matrix &, const Matrix &) = default;

  private:
    [[nodiscard]] index_t ld() const { return rows_ > 0 ? rows_ : 1; }

    index_t rows_{0};
    index_t cols_{0};
    std::vector<double> data_;
  };

  /// ‖a − b‖_F / max(‖b‖_F, tiny). Shapes must agree.
  double relative_frobenius_distance(ConstMatrixView a, ConstMatrixView b);

  /// N-way dense tensor stored with mode 0 varying fastest. Immutable once built.
  class DenseTensor
  {
  public:
    DenseTensor() = default;
    DenseTensor(std::vector<index_t> dims, std::vector<double> data);
    /// Zero-filled tensor.
    explicit DenseTensor(std::vector<index_t> dims);

    [[nodiscard]] index_t order() const { return static_cast<index_t>(dims_.size()); }
    [[nodiscard]] const std::vector<index_t> &dims() const { return dims_; }
    [[nodiscard]] index_t dim(index_t mode) const { return dims_[static_cast<std::size_t>(mode)]; }
    [[nodiscard]] index_t size() const { return static_cast<index_t>(data_.size()); }
    [[nodiscard]] std::span<const double> data() const { return data_; }

    /// Sum of squared entries, computed once at construction.
    [[nodiscard]] double sqnorm() const { return sqnorm_; }

    [[nodiscard]] double at(std::span<const index_t> idx) const;
    [[nodiscard]] index_t linear_index(std::span<const index_t> idx) const;

    /// Product of the extents of modes [0, mode).
    [[nodiscard]] index_t leading_size(index_t mode) const;
    /// Product of the extents of modes (mode, N).
    [[nodiscard]] index_t trailing_size(index_t mode) const;

    friend bool operator==(const DenseTensor &a, const DenseTensor &b)
    {
      return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

  private:
    std::vector<index_t> dims_;
    std::vector<double> data_;
    double sqnorm_{0.0};
  };

  /// Logical mode-n unfolding T_(n) of a tensor: rows are mode-n indices, columns enumerate the
  /// remaining modes with the lowest mode fastest. Never copies tensor data.
  class UnfoldingView
  {
  public:
    UnfoldingView(const DenseTensor &t, index_t mode);

    [[nodiscard]] index_t mode() const { return mode_; }
    [[nodiscard]] index_t rows() const { return rows_; }
    [[nodiscard]] index_t cols() const { return leading_ * trailing_; }
    [[nodiscard]] double operator()(index_t r, index_t c) const;

    /// Mode 0: the tensor data reinterpreted as I_0 × ∏_{i>0} I_i.
    [[nodiscard]] std::optional<ConstMatrixView> as_matrix() const;
    /// Last mode: the ∏_{i<N-1} I_i × I_{N-1} matrix whose transpose is the unfolding.
    [[nodiscard]] std::optional<ConstMatrixView> as_transposed_matrix() const;

  private:
    const DenseTensor *tensor_;
    index_t mode_;
    index_t rows_;
    index_t leading_;
    index_t trailing_;
  };

  /// Modes are zero-based throughout the library.
  UnfoldingView unfold_view(const DenseTensor &t, index_t mode);

  /// Column-wise Kronecker product; column j is kron(a[:,j], b[:,j]).
  Matrix khatri_rao(ConstMatrixView a, ConstMatrixView b);
  void khatri_rao_into(ConstMatrixView a, ConstMatrixView b, MatrixView out);

  /// Khatri-Rao product of all factors except `skip_mode`, taken in descending mode order
  /// (A_{N-1} ⊙ … ⊙ A_{skip+1} ⊙ A_{skip-1} ⊙ … ⊙ A_0) so that A_0's row index varies fastest.
  /// Pass skip_mode = -1 to include every factor.
  void khatri_rao_except_into(std::span<const ConstMatrixView> factors, index_t skip_mode, MatrixView out);

  Matrix hadamard(ConstMatrixView a, ConstMatrixView b);
  Matrix hadamard_fold(std::span<const Matrix> mats);

  /// AᵀA, upper triangle computed and mirrored so the result is exactly symmetric.
  Matrix gramian(ConstMatrixView a);
  void gramian_into(ConstMatrixView a, MatrixView out);

  /// Σ_ij a_ij b_ij.
  double inner_product(ConstMatrixView a, ConstMatrixView b);
  double sum_all(ConstMatrixView a);
} // namespace cals

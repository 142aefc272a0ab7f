#pragma once

#include "cals/tensor.hpp"

namespace cals
{
  enum class SolveMethod
  {
    Cholesky,
    PseudoInverse
  };

  /// Relative eigenvalue cutoff of the pseudoinverse fallback (λ ≤ cutoff·λ_max is dropped).
  inline constexpr double kPseudoInverseCutoff = 1e-12;

  /// Writes out = m·h† for symmetric positive semidefinite h. Tries a Cholesky factorization first
  /// and falls back to an eigendecomposition-based pseudoinverse when h is not numerically
  /// positive definite. `out` may alias `m`.
  SolveMethod solve_normal_equations(ConstMatrixView m, ConstMatrixView h, MatrixView out);

  /// Eigendecomposition-based pseudoinverse of a symmetric matrix.
  Matrix symmetric_pseudo_inverse(ConstMatrixView h, double cutoff = kPseudoInverseCutoff);

  /// Thread count used by the BLAS backend for all subsequent calls (process-wide).
  void set_blas_threads(int threads);
  int blas_threads();

  /// Restores the previous BLAS thread count on scope exit.
  class ScopedBlasThreads
  {
  public:
    explicit ScopedBlasThreads(int threads) : previous_(blas_threads()) { set_blas_threads(threads); }
    ~ScopedBlasThreads() { set_blas_threads(previous_); }
    ScopedBlasThreads(const ScopedBlasThreads &) = delete;
    ScopedBlasThreads &operator=(const ScopedBlasThreads &) = delete;

  private:
    int previous_;
  };
} // namespace cals

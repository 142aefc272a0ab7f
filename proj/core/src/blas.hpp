#pragma once

// Thin private wrappers over the CBLAS/LAPACK symbols exported by OpenBLAS.

#include <cblas.h>

#include <climits>

#include "cals/error.hpp"
#include "cals/tensor.hpp"

extern "C"
{
  void dpotrf_(const char *uplo, const int *n, double *a, const int *lda, int *info);
  void dsyev_(const char *jobz, const char *uplo, const int *n, double *a, const int *lda, double *w, double *work,
              const int *lwork, int *info);
}

namespace cals::blas
{
  inline blasint to_blas(index_t v)
  {
    if (v < 0 || v > INT_MAX) throw DimensionError("matrix extent exceeds the BLAS integer range");
    return static_cast<blasint>(v);
  }

  /// C = alpha * op(A) op(B) + beta * C, all column-major.
  inline void gemm(bool trans_a, bool trans_b, index_t m, index_t n, index_t k, double alpha, const double *a,
                   index_t lda, const double *b, index_t ldb, double beta, double *c, index_t ldc)
  {
    if (m == 0 || n == 0) return;
    cblas_dgemm(CblasColMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                to_blas(m), to_blas(n), to_blas(k), alpha, a, to_blas(lda), b, to_blas(ldb), beta, c, to_blas(ldc));
  }
} // namespace cals::blas

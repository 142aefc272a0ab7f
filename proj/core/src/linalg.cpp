#include "cals/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "blas.hpp"
#include "cals/error.hpp"

namespace cals
{
  namespace
  {
    void check_finite(ConstMatrixView a, const char *what)
    {
      for (index_t j = 0; j < a.cols; j++)
        for (index_t i = 0; i < a.rows; i++)
          if (!std::isfinite(a(i, j))) throw NumericalError(std::string(what) + " contains non-finite values");
    }

    bool cholesky_upper(Matrix &u)
    {
      const int n = static_cast<int>(u.rows());
      int info = 0;
      dpotrf_("U", &n, u.data().data(), &n, &info);
      if (info != 0) return false;
      double dmin = u(0, 0), dmax = u(0, 0);
      for (index_t i = 1; i < n; i++)
      {
        dmin = std::min(dmin, u(i, i));
        dmax = std::max(dmax, u(i, i));
      }
      return dmin > 0.0 && (dmin / dmax) * (dmin / dmax) > kPseudoInverseCutoff;
    }

    // X·UᵀU = B in place, B = x on entry. Column sweeps: Y·U = B, then X·Uᵀ = Y.
    void solve_upper_gram(const Matrix &u, MatrixView x)
    {
      const index_t r = u.rows();
      const index_t rows = x.rows;
      for (index_t j = 0; j < r; j++)
      {
        double *xj = x.col(j).data();
        for (index_t k = 0; k < j; k++)
        {
          const double c = u(k, j);
          const double *xk = x.col(k).data();
          for (index_t i = 0; i < rows; i++) xj[i] -= c * xk[i];
        }
        const double inv = 1.0 / u(j, j);
        for (index_t i = 0; i < rows; i++) xj[i] *= inv;
      }
      for (index_t j = r; j-- > 0;)
      {
        double *xj = x.col(j).data();
        for (index_t k = j + 1; k < r; k++)
        {
          const double c = u(j, k);
          const double *xk = x.col(k).data();
          for (index_t i = 0; i < rows; i++) xj[i] -= c * xk[i];
        }
        const double inv = 1.0 / u(j, j);
        for (index_t i = 0; i < rows; i++) xj[i] *= inv;
      }
    }
  } // namespace

  Matrix symmetric_pseudo_inverse(ConstMatrixView h, double cutoff)
  {
    if (h.rows != h.cols) throw DimensionError("pseudo-inverse of a non-square matrix");
    const int n = static_cast<int>(h.rows);
    if (n == 0) return {};
    Matrix v(h);
    std::vector<double> w(static_cast<std::size_t>(n));
    int info = 0;
    int lwork = -1;
    double query = 0.0;
    dsyev_("V", "U", &n, v.data().data(), &n, w.data(), &query, &lwork, &info);
    lwork = static_cast<int>(query);
    std::vector<double> work(static_cast<std::size_t>(std::max(lwork, 1)));
    dsyev_("V", "U", &n, v.data().data(), &n, w.data(), work.data(), &lwork, &info);
    if (info != 0) throw NumericalError("symmetric eigendecomposition did not converge");

    const double lmax = *std::max_element(w.begin(), w.end());
    // V·diag(1/λ)·Vᵀ over the retained eigenpairs.
    Matrix scaled(n, n);
    for (index_t k = 0; k < n; k++)
    {
      const double lambda = w[static_cast<std::size_t>(k)];
      const double inv = (lmax > 0.0 && lambda > cutoff * lmax) ? 1.0 / lambda : 0.0;
      for (index_t i = 0; i < n; i++) scaled(i, k) = v(i, k) * inv;
    }
    Matrix out(n, n);
    blas::gemm(false, true, n, n, n, 1.0, scaled.data().data(), n, v.data().data(), n, 0.0, out.data().data(), n);
    for (index_t j = 0; j < n; j++)
      for (index_t i = j + 1; i < n; i++)
      {
        const double avg = 0.5 * (out(i, j) + out(j, i));
        out(i, j) = avg;
        out(j, i) = avg;
      }
    return out;
  }

  SolveMethod solve_normal_equations(ConstMatrixView m, ConstMatrixView h, MatrixView out)
  {
    if (h.rows != h.cols) throw DimensionError("update: Gramian Hadamard product is not square");
    if (m.cols != h.rows) throw DimensionError("update: MTTKRP width does not match the Gramian size");
    if (out.rows != m.rows || out.cols != m.cols) throw DimensionError("update: output shape mismatch");
    check_finite(h, "Gramian Hadamard product");
    check_finite(m, "MTTKRP result");

    const index_t r = h.rows;
    if (r == 0 || m.rows == 0) return SolveMethod::Cholesky;

    Matrix u(h);
    if (cholesky_upper(u))
    {
      if (out.data != m.data) out.copy_from(m);
      solve_upper_gram(u, out);
      return SolveMethod::Cholesky;
    }

    const Matrix pinv = symmetric_pseudo_inverse(h);
    const Matrix rhs(m); // out may alias m
    blas::gemm(false, false, m.rows, r, r, 1.0, rhs.data().data(), m.rows, pinv.data().data(), r, 0.0, out.data,
               out.ld);
    return SolveMethod::PseudoInverse;
  }

  void set_blas_threads(int threads)
  {
    openblas_set_num_threads(std::max(threads, 1));
  }

  int blas_threads()
  {
    return openblas_get_num_threads();
  }
} // namespace cals

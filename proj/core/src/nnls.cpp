#include "cals/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cals/error.hpp"
#include "cals/linalg.hpp"

namespace cals
{
  namespace
  {
    // Unconstrained solve restricted to the free variables; zeros elsewhere.
    void solve_free(ConstMatrixView h, std::span<const double> b, const std::vector<bool> &free,
                    std::vector<double> &s)
    {
      const auto n = static_cast<index_t>(b.size());
      std::vector<index_t> idx;
      for (index_t i = 0; i < n; i++)
        if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
      std::fill(s.begin(), s.end(), 0.0);
      if (idx.empty()) return;
      const auto p = static_cast<index_t>(idx.size());
      Matrix hp(p, p);
      Matrix bp(1, p);
      for (index_t j = 0; j < p; j++)
      {
        bp(0, j) = b[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        for (index_t i = 0; i < p; i++) hp(i, j) = h(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      solve_normal_equations(bp, hp, bp.view());
      for (index_t j = 0; j < p; j++) s[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = bp(0, j);
    }

    // w = b − H·x (half the negative gradient).
    void residual(ConstMatrixView h, std::span<const double> b, const std::vector<double> &x, std::vector<double> &w)
    {
      const auto n = static_cast<index_t>(b.size());
      for (index_t i = 0; i < n; i++)
      {
        double acc = b[static_cast<std::size_t>(i)];
        for (index_t j = 0; j < n; j++) acc -= h(i, j) * x[static_cast<std::size_t>(j)];
        w[static_cast<std::size_t>(i)] = acc;
      }
    }

    double tolerance(ConstMatrixView h, std::span<const double> b, const std::vector<double> &x)
    {
      double bmax = 0.0, hmax = 0.0, xmax = 0.0;
      for (auto v : b) bmax = std::max(bmax, std::abs(v));
      for (index_t j = 0; j < h.cols; j++)
        for (index_t i = 0; i < h.rows; i++) hmax = std::max(hmax, std::abs(h(i, j)));
      for (auto v : x) xmax = std::max(xmax, std::abs(v));
      const double scale = std::max(bmax, hmax * xmax);
      return 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(b.size()) * scale;
    }
  } // namespace

  NnlsResult nnls_solve(ConstMatrixView h, std::span<const double> b, const std::vector<bool> &warm_active)
  {
    const auto n = static_cast<index_t>(b.size());
    if (h.rows != n || h.cols != n) throw DimensionError("nnls: H must be n×n with n = len(b)");
    if (!warm_active.empty() && static_cast<index_t>(warm_active.size()) != n)
      throw DimensionError("nnls: warm-start active set has the wrong length");
    for (auto v : b)
      if (!std::isfinite(v)) throw NumericalError("nnls: right-hand side contains non-finite values");

    NnlsResult res;
    const auto un = static_cast<std::size_t>(n);
    std::vector<double> x(un, 0.0), s(un, 0.0), w(un, 0.0);
    std::vector<bool> free(un, false);

    // Warm start: shrink the previous free set until its unconstrained solution is strictly
    // positive, which gives a feasible starting iterate.
    if (!warm_active.empty())
    {
      for (std::size_t i = 0; i < un; i++) free[i] = !warm_active[i];
      while (std::any_of(free.begin(), free.end(), [](bool f) { return f; }))
      {
        solve_free(h, b, free, s);
        bool feasible = true;
        for (std::size_t i = 0; i < un; i++)
          if (free[i] && s[i] <= 0.0)
          {
            free[i] = false;
            feasible = false;
          }
        if (feasible)
        {
          x = s;
          break;
        }
      }
      if (std::none_of(free.begin(), free.end(), [](bool f) { return f; })) std::fill(x.begin(), x.end(), 0.0);
    }

    const int cap = std::max(3 * static_cast<int>(n), 1);
    residual(h, b, x, w);
    while (true)
    {
      const double tol = tolerance(h, b, x);
      index_t enter = -1;
      double wmax = tol;
      for (index_t i = 0; i < n; i++)
        if (!free[static_cast<std::size_t>(i)] && w[static_cast<std::size_t>(i)] > wmax)
        {
          wmax = w[static_cast<std::size_t>(i)];
          enter = i;
        }
      if (enter < 0) break;
      if (res.iterations >= cap)
      {
        res.converged = false;
        break;
      }
      res.iterations++;
      free[static_cast<std::size_t>(enter)] = true;

      while (true)
      {
        solve_free(h, b, free, s);
        index_t blocking = -1;
        double alpha = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < un; i++)
        {
          if (!free[i] || s[i] > 0.0) continue;
          const double denom = x[i] - s[i];
          const double a = denom > 0.0 ? x[i] / denom : 0.0;
          if (a < alpha)
          {
            alpha = a;
            blocking = static_cast<index_t>(i);
          }
        }
        if (blocking < 0) break;
        for (std::size_t i = 0; i < un; i++)
          if (free[i]) x[i] += alpha * (s[i] - x[i]);
        x[static_cast<std::size_t>(blocking)] = 0.0;
        for (std::size_t i = 0; i < un; i++)
          if (free[i] && x[i] <= 0.0)
          {
            free[i] = false;
            x[i] = 0.0;
          }
      }
      x = s;
      residual(h, b, x, w);
    }

    res.x = std::move(x);
    res.active.resize(un);
    for (std::size_t i = 0; i < un; i++) res.active[i] = !free[i];
    return res;
  }

  // ---------------------------------------------------------------------------------------------

  NnlsState::NnlsState(std::span<const index_t> dims, index_t rank) : rank_(rank)
  {
    for (auto d : dims) active_.emplace_back(static_cast<std::size_t>(d));
  }

  int nnls_update(ConstMatrixView m, ConstMatrixView h, NnlsState &state, index_t mode, MatrixView out)
  {
    const index_t r = h.rows;
    if (h.cols != r || m.cols != r) throw DimensionError("nnls_update: shape mismatch between MTTKRP and Gramian");
    if (out.rows != m.rows || out.cols != r) throw DimensionError("nnls_update: output shape mismatch");
    if (state.empty() || state.rank() != r) throw ConfigError("nnls_update: state was built for another rank");

    int failures = 0;
    std::vector<double> b(static_cast<std::size_t>(r));
    for (index_t i = 0; i < m.rows; i++)
    {
      for (index_t j = 0; j < r; j++) b[static_cast<std::size_t>(j)] = m(i, j);
      auto res = nnls_solve(h, b, state.active(mode, i));
      if (!res.converged) failures++;
      for (index_t j = 0; j < r; j++) out(i, j) = res.x[static_cast<std::size_t>(j)];
      state.set_active(mode, i, std::move(res.active));
    }
    return failures;
  }

  Matrix nnls_update(ConstMatrixView m, ConstMatrixView h, NnlsState &state, index_t mode)
  {
    Matrix out(m.rows, m.cols);
    nnls_update(m, h, state, mode, out.view());
    return out;
  }
} // namespace cals

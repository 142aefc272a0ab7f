#include "cals/als.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cals/error.hpp"
#include "cals/linalg.hpp"
#include "cals/timer.hpp"

namespace cals
{
  void ConvergenceConfig::validate() const
  {
    if (!(tol >= 0.0) || !std::isfinite(tol)) throw ConfigError("tolerance must be a finite non-negative number");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  }

  void LineSearchConfig::validate() const
  {
    if (rule == AlphaRule::Constant && !(alpha > 1.0))
      throw ConfigError("line-search extrapolation factor must be greater than 1");
  }

  double LineSearchConfig::alpha_at(int iteration) const
  {
    if (rule == AlphaRule::Constant) return alpha;
    return std::cbrt(static_cast<double>(std::max(iteration, 1)));
  }

  // ---------------------------------------------------------------------------------------------

  GramianCache::GramianCache(std::span<const ConstMatrixView> factors)
  {
    grams_.reserve(factors.size());
    for (const auto &f : factors) grams_.push_back(gramian(f));
  }

  void GramianCache::refresh(index_t mode, ConstMatrixView factor)
  {
    auto &g = grams_[static_cast<std::size_t>(mode)];
    if (g.rows() != factor.cols) g = Matrix(factor.cols, factor.cols);
    gramian_into(factor, g.view());
  }

  void GramianCache::hadamard_except(index_t mode, Matrix &out) const
  {
    const index_t r = rank();
    if (out.rows() != r || out.cols() != r) out = Matrix(r, r);
    std::fill(out.data().begin(), out.data().end(), 1.0);
    for (index_t i = 0; i < order(); i++)
    {
      if (i == mode) continue;
      const auto g = gram(i).data();
      auto o = out.data();
      for (std::size_t k = 0; k < o.size(); k++) o[k] *= g[k];
    }
  }

  Matrix GramianCache::hadamard_except(index_t mode) const
  {
    Matrix out;
    hadamard_except(mode, out);
    return out;
  }

  double GramianCache::model_sqnorm() const
  {
    Matrix all;
    hadamard_except(-1, all);
    return sum_all(all);
  }

  // ---------------------------------------------------------------------------------------------

  Matrix update_factor(ConstMatrixView m, ConstMatrixView h)
  {
    Matrix out(m.rows, m.cols);
    solve_normal_equations(m, h, out.view());
    return out;
  }

  double fast_error(double t_sqnorm, ConstMatrixView last_factor, ConstMatrixView last_mttkrp,
                    const GramianCache &grams)
  {
    const double e = t_sqnorm + grams.model_sqnorm() - 2.0 * inner_product(last_factor, last_mttkrp);
    return std::isnan(e) ? e : std::max(e, 0.0);
  }

  double fit_from_error(double error, double t_sqnorm)
  {
    if (!(t_sqnorm > 0.0)) throw NumericalError("fit is undefined for a zero tensor");
    return 1.0 - std::sqrt(std::max(error, 0.0)) / std::sqrt(t_sqnorm);
  }

  // ---------------------------------------------------------------------------------------------

  AlsState::AlsState(std::span<const ConstMatrixView> factors, std::span<const index_t> dims, const AlsOptions &opts)
      : grams(factors)
  {
    const index_t rank = factors.empty() ? 0 : factors.front().cols;
    if (opts.non_negative) nnls = NnlsState(dims, rank);
  }

  void als_update_mode(ConstMatrixView mttkrp_out, index_t mode, std::span<const MatrixView> factors, AlsState &state,
                       const AlsOptions &opts, Model &model)
  {
    state.grams.hadamard_except(mode, state.hadamard_scratch);
    const MatrixView target = factors[static_cast<std::size_t>(mode)];
    if (opts.non_negative)
      model.nnls_nonconverged += nnls_update(mttkrp_out, state.hadamard_scratch, state.nnls, mode, target);
    else
      solve_normal_equations(mttkrp_out, state.hadamard_scratch, target);
    state.grams.refresh(mode, target);
  }

  LineSearchOutcome line_search_step(const DenseTensor &t, std::span<const Matrix> previous,
                                     std::span<const MatrixView> current, double current_error, double alpha,
                                     GramianCache &grams, MttkrpWorkspace &ws)
  {
    const index_t order = t.order();
    if (static_cast<index_t>(previous.size()) != order || static_cast<index_t>(current.size()) != order)
      throw DimensionError("line search: factor count mismatch");

    std::vector<Matrix> candidate;
    candidate.reserve(current.size());
    for (std::size_t n = 0; n < current.size(); n++)
    {
      const auto &p = previous[n];
      const auto &c = current[n];
      if (p.rows() != c.rows || p.cols() != c.cols) throw DimensionError("line search: factor shape mismatch");
      Matrix f(c.rows, c.cols);
      for (index_t j = 0; j < c.cols; j++)
        for (index_t i = 0; i < c.rows; i++) f(i, j) = p(i, j) + alpha * (c(i, j) - p(i, j));
      candidate.push_back(std::move(f));
    }

    std::vector<ConstMatrixView> views(candidate.begin(), candidate.end());
    GramianCache cand_grams(views);
    const index_t last = order - 1;
    const index_t rank = candidate.front().cols();
    const Matrix m_last = mttkrp(t, views, last, select_variant(t.dims(), last, rank), ws);
    const double cand_error = fast_error(t.sqnorm(), candidate.back(), m_last, cand_grams);

    LineSearchOutcome out{false, alpha, cand_error, current_error};
    if (std::isfinite(cand_error) && cand_error < current_error)
    {
      for (std::size_t n = 0; n < current.size(); n++) current[n].copy_from(candidate[n]);
      grams = std::move(cand_grams);
      out.accepted = true;
      out.error = cand_error;
    }
    return out;
  }

  Model line_search_step(const Model &prev, const Model &curr, const LineSearchConfig &cfg, const DenseTensor &t)
  {
    prev.check_conforms(t.dims());
    curr.check_conforms(t.dims());
    if (prev.rank != curr.rank) throw DimensionError("line search: ranks differ");
    Model out = curr;
    std::vector<MatrixView> views;
    for (auto &f : out.factors) views.push_back(f.view());
    GramianCache grams(curr.views());
    MttkrpWorkspace ws(t.dims(), curr.rank);
    const auto res = line_search_step(t, prev.factors, views, curr.error, cfg.alpha_at(curr.iterations), grams, ws);
    out.error = res.error;
    out.fit = fit_from_error(res.error, t.sqnorm());
    if (res.accepted) out.line_search_accepted++;
    return out;
  }

  bool als_end_iteration(const DenseTensor &t, ConstMatrixView last_mttkrp, std::span<const MatrixView> factors,
                         AlsState &state, const AlsOptions &opts, MttkrpWorkspace &ws, Model &model)
  {
    double error = fast_error(t.sqnorm(), factors.back(), last_mttkrp, state.grams);
    model.iterations++;
    if (!std::isfinite(error))
    {
      model.error = error;
      model.status = ModelStatus::NumericalFailure;
      return true;
    }

    const auto &ls = opts.line_search;
    if (ls.enabled)
    {
      const double alpha = ls.alpha_at(model.iterations);
      if (!state.previous.empty() && alpha > 1.0)
      {
        const auto res = line_search_step(t, state.previous, factors, error, alpha, state.grams, ws);
        if (res.accepted) model.line_search_accepted++;
        error = res.error;
      }
      if (state.previous.size() != factors.size()) state.previous.assign(factors.size(), Matrix{});
      for (std::size_t n = 0; n < factors.size(); n++)
      {
        auto &p = state.previous[n];
        if (p.rows() != factors[n].rows || p.cols() != factors[n].cols) p = Matrix(factors[n]);
        else p.view().copy_from(factors[n]);
      }
    }

    const double fit = fit_from_error(error, t.sqnorm());
    model.error = error;
    model.fit = fit;
    model.error_history.push_back(error);
    model.fit_history.push_back(fit);

    const double tol = opts.convergence.tol;
    const bool converged = tol > 0.0 && fit - state.fit_prev < tol;
    state.fit_prev = fit;
    if (converged)
    {
      model.status = ModelStatus::Converged;
      return true;
    }
    if (model.iterations >= opts.convergence.max_iterations)
    {
      model.status = ModelStatus::IterationCapReached;
      return true;
    }
    return false;
  }

  Model run_single_als(const DenseTensor &t, Model start, const AlsOptions &opts, MttkrpWorkspace *ws)
  {
    opts.validate();
    start.check_conforms(t.dims());
    if (!(t.sqnorm() > 0.0)) throw NumericalError("cannot fit a model to an all-zero tensor");

    std::optional<MttkrpWorkspace> own;
    if (ws == nullptr || ws->max_width() < start.rank || ws->dims() != t.dims())
    {
      own.emplace(t.dims(), start.rank);
      ws = &*own;
    }

    Timer timer;
    Model model = std::move(start);
    model.status = ModelStatus::Active;
    model.iterations = 0;
    model.error_history.clear();
    model.fit_history.clear();

    std::vector<MatrixView> factors;
    for (auto &f : model.factors) factors.push_back(f.view());
    AlsState state(model.views(), t.dims(), opts);

    const index_t order = t.order();
    const index_t rank = model.rank;
    std::vector<ConstMatrixView> cviews(factors.begin(), factors.end());
    try
    {
      bool done = false;
      while (!done)
      {
        MatrixView m_out;
        for (index_t n = 0; n < order; n++)
        {
          m_out = ws->output(n, rank);
          mttkrp_into(t, cviews, n, select_variant(t.dims(), n, rank), *ws, m_out);
          als_update_mode(m_out, n, factors, state, opts, model);
        }
        done = als_end_iteration(t, m_out, factors, state, opts, *ws, model);
      }
    } catch (const NumericalError &)
    {
      model.status = ModelStatus::NumericalFailure;
    }
    model.seconds = timer.seconds();
    return model;
  }
} // namespace cals

#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cals/model.hpp"
#include "cals/mttkrp.hpp"
#include "cals/nnls.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  struct ConvergenceConfig
  {
    /// Retire once F − F_prev < tol. tol = 0 disables the test (fixed iteration count).
    double tol{1e-6};
    int max_iterations{1000};

    void validate() const;
  };

  enum class AlphaRule
  {
    CubeRootIter, ///< α = ∛i for the just-completed iteration i
    Constant,
  };

  struct LineSearchConfig
  {
    bool enabled{false};
    AlphaRule rule{AlphaRule::CubeRootIter};
    double alpha{2.0}; ///< used by AlphaRule::Constant, must be > 1

    void validate() const;
    /// Extrapolation factor after iteration `iteration` (1-based).
    [[nodiscard]] double alpha_at(int iteration) const;
  };

  struct AlsOptions
  {
    ConvergenceConfig convergence{};
    LineSearchConfig line_search{};
    bool non_negative{false};

    void validate() const
    {
      convergence.validate();
      line_search.validate();
    }
  };

  /// Per-mode Gramians AᵢᵀAᵢ of one instance.
  class GramianCache
  {
  public:
    GramianCache() = default;
    explicit GramianCache(std::span<const ConstMatrixView> factors);

    void refresh(index_t mode, ConstMatrixView factor);
    [[nodiscard]] const Matrix &gram(index_t mode) const { return grams_[static_cast<std::size_t>(mode)]; }
    [[nodiscard]] index_t order() const { return static_cast<index_t>(grams_.size()); }
    [[nodiscard]] index_t rank() const { return grams_.empty() ? 0 : grams_.front().rows(); }

    /// H_n = ∗_{i≠n} AᵢᵀAᵢ, written into `out` (rank × rank).
    void hadamard_except(index_t mode, Matrix &out) const;
    [[nodiscard]] Matrix hadamard_except(index_t mode) const;
    /// ‖X̂‖² = Σ(∗_i AᵢᵀAᵢ).
    [[nodiscard]] double model_sqnorm() const;

  private:
    std::vector<Matrix> grams_;
  };

  /// A_n ← M_n·H_n†.
  Matrix update_factor(ConstMatrixView m, ConstMatrixView h);

  /// ‖T‖² + Σ(∗ all Gramians) − 2·Σ(A_last ∗ M_last), clamped at 0. `last_mttkrp` must be the
  /// last-mode MTTKRP computed with the other factors at their current values.
  double fast_error(double t_sqnorm, ConstMatrixView last_factor, ConstMatrixView last_mttkrp,
                    const GramianCache &grams);

  /// F = 1 − √e/√‖T‖².
  double fit_from_error(double error, double t_sqnorm);

  /// Mutable per-instance ALS state that does not live in the factor matrices themselves.
  struct AlsState
  {
    GramianCache grams;
    NnlsState nnls;
    std::vector<Matrix> previous; ///< factors after the previous iteration (line search)
    double fit_prev{-std::numeric_limits<double>::infinity()};
    Matrix hadamard_scratch;

    AlsState() = default;
    AlsState(std::span<const ConstMatrixView> factors, std::span<const index_t> dims, const AlsOptions &opts);
  };

  /// Updates factor `mode` from its MTTKRP and refreshes the Gramian cache.
  void als_update_mode(ConstMatrixView mttkrp_out, index_t mode, std::span<const MatrixView> factors, AlsState &state,
                       const AlsOptions &opts, Model &model);

  /// Error/fit bookkeeping at the end of one iteration, line search included. Updates
  /// model.{error, fit, iterations, histories, status}. Returns true when the instance should be
  /// retired. `ws` is used only for the line-search candidate's MTTKRP.
  bool als_end_iteration(const DenseTensor &t, ConstMatrixView last_mttkrp, std::span<const MatrixView> factors,
                         AlsState &state, const AlsOptions &opts, MttkrpWorkspace &ws, Model &model);

  struct LineSearchOutcome
  {
    bool accepted{false};
    double alpha{1.0};
    double candidate_error{0.0};
    double error{0.0}; ///< error of the point kept
  };

  /// Extrapolates current ← previous + α(current − previous) if that lowers the error. On
  /// acceptance `current` and `grams` are overwritten with the candidate.
  LineSearchOutcome line_search_step(const DenseTensor &t, std::span<const Matrix> previous,
                                     std::span<const MatrixView> current, double current_error, double alpha,
                                     GramianCache &grams, MttkrpWorkspace &ws);

  /// Model-level convenience: returns the point kept (curr, or the accepted extrapolation).
  Model line_search_step(const Model &prev, const Model &curr, const LineSearchConfig &cfg, const DenseTensor &t);

  /// Plain CP-ALS for one starting point. Uses `ws` when provided (must be wide enough).
  Model run_single_als(const DenseTensor &t, Model start, const AlsOptions &opts, MttkrpWorkspace *ws = nullptr);
} // namespace cals

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cals/tensor.hpp"

namespace cals
{
  class MultiMatrix;

  enum class MttkrpVariant
  {
    ExplicitKrpGemm,     ///< materialize the full KRP, then one GEMM per trailing block
    FirstModeGemm,       ///< mode 0 only: T as I_0 × rest, times the KRP
    LastModeGemm,        ///< last mode only: transposed product of the leading view with the KRP
    MiddleModeSliceGemm, ///< order 3, mode 1: per-slice GEMMs, KRP never materialized
  };

  std::string_view to_string(MttkrpVariant v);
  bool variant_valid(index_t order, index_t mode, MttkrpVariant v);

  /// Variant used for each mode of an order-3 tensor. Benchmarks may pass a different table.
  using Order3VariantTable = std::array<MttkrpVariant, 3>;
  inline constexpr Order3VariantTable kOrder3Variants = {MttkrpVariant::FirstModeGemm,
                                                         MttkrpVariant::MiddleModeSliceGemm,
                                                         MttkrpVariant::LastModeGemm};

  MttkrpVariant select_variant(std::span<const index_t> dims, index_t mode, index_t width,
                               const Order3VariantTable &table = kOrder3Variants);

  struct FlopCount
  {
    std::uint64_t flops{0};
    friend auto operator<=>(const FlopCount &, const FlopCount &) = default;
  };

  /// 2·width·∏dims, the MTTKRP flop model (KRP formation not counted).
  FlopCount mttkrp_flops(std::span<const index_t> dims, index_t width);

  /// Scratch buffers for every MTTKRP of a run, sized once. Kernels never allocate.
  class MttkrpWorkspace
  {
  public:
    MttkrpWorkspace() = default;
    MttkrpWorkspace(std::span<const index_t> dims, index_t max_width);

    [[nodiscard]] index_t max_width() const { return max_width_; }
    [[nodiscard]] const std::vector<index_t> &dims() const { return dims_; }

    /// KRP buffer shaped for `mode` and `width`.
    [[nodiscard]] MatrixView krp(index_t mode, index_t width);
    /// I_0 × width scratch for the slice variant.
    [[nodiscard]] MatrixView slice_scratch(index_t width);
    /// Output buffer I_mode × width.
    [[nodiscard]] MatrixView output(index_t mode, index_t width);

    /// Number of times a kernel materialized a permuted copy of the tensor. Always 0 for the
    /// variants implemented here; exported so tests can assert it.
    [[nodiscard]] std::uint64_t permuted_copies() const { return permuted_copies_; }
    /// Flops accumulated by all kernel calls that used this workspace.
    [[nodiscard]] FlopCount flops() const { return flops_; }
    void add_flops(FlopCount f) { flops_.flops += f.flops; }
    void reset_flops() { flops_ = {}; }

  private:
    void check_width(index_t width) const;

    std::vector<index_t> dims_;
    index_t max_width_{0};
    std::vector<double> krp_;
    std::vector<double> scratch_;
    std::vector<double> output_;
    std::uint64_t permuted_copies_{0};
    FlopCount flops_{};
  };

  /// out = T_(mode) · (⊙_{i≠mode} factors[i]) for the given variant. factors[mode] is ignored
  /// (it may be an empty view). Does not allocate.
  void mttkrp_into(const DenseTensor &t, std::span<const ConstMatrixView> factors, index_t mode,
                   MttkrpVariant variant, MttkrpWorkspace &ws, MatrixView out);

  Matrix mttkrp(const DenseTensor &t, std::span<const ConstMatrixView> factors, index_t mode, MttkrpVariant variant,
                MttkrpWorkspace &ws);
  Matrix mttkrp(const DenseTensor &t, std::span<const Matrix> factors, index_t mode, MttkrpVariant variant,
                MttkrpWorkspace &ws);

  /// Fused MTTKRP over the active width of one multi-matrix per mode; the result lives in the
  /// workspace output buffer and its column blocks follow the multi-matrix layout.
  MatrixView fused_mttkrp(const DenseTensor &t, std::span<const MultiMatrix> multis, index_t mode,
                          MttkrpWorkspace &ws);
  MatrixView fused_mttkrp(const DenseTensor &t, std::span<const MultiMatrix> multis, index_t mode,
                          MttkrpVariant variant, MttkrpWorkspace &ws);
} // namespace cals

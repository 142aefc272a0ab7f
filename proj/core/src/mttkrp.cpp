#include "cals/mttkrp.hpp"

#include <algorithm>
#include <string>

#include "blas.hpp"
#include "cals/error.hpp"
#include "cals/multimatrix.hpp"

namespace cals
{
  std::string_view to_string(MttkrpVariant v)
  {
    switch (v)
    {
    case MttkrpVariant::ExplicitKrpGemm: return "explicit_krp_gemm";
    case MttkrpVariant::FirstModeGemm: return "first_mode_gemm";
    case MttkrpVariant::LastModeGemm: return "last_mode_gemm";
    case MttkrpVariant::MiddleModeSliceGemm: return "middle_mode_slice_gemm";
    }
    return "unknown";
  }

  bool variant_valid(index_t order, index_t mode, MttkrpVariant v)
  {
    if (mode < 0 || mode >= order) return false;
    switch (v)
    {
    case MttkrpVariant::ExplicitKrpGemm: return true;
    case MttkrpVariant::FirstModeGemm: return mode == 0;
    case MttkrpVariant::LastModeGemm: return mode == order - 1;
    case MttkrpVariant::MiddleModeSliceGemm: return order == 3 && mode == 1;
    }
    return false;
  }

  MttkrpVariant select_variant(std::span<const index_t> dims, index_t mode, index_t /*width*/,
                               const Order3VariantTable &table)
  {
    const auto order = static_cast<index_t>(dims.size());
    if (mode < 0 || mode >= order) throw DimensionError("select_variant: mode out of range");
    if (order == 3) return table[static_cast<std::size_t>(mode)];
    if (order == 2) return mode == 0 ? MttkrpVariant::FirstModeGemm : MttkrpVariant::LastModeGemm;
    return MttkrpVariant::ExplicitKrpGemm;
  }

  FlopCount mttkrp_flops(std::span<const index_t> dims, index_t width)
  {
    std::uint64_t volume = 1;
    for (auto d : dims) volume *= static_cast<std::uint64_t>(d);
    return {2ull * static_cast<std::uint64_t>(width) * volume};
  }

  // ---------------------------------------------------------------------------------------------

  MttkrpWorkspace::MttkrpWorkspace(std::span<const index_t> dims, index_t max_width)
      : dims_(dims.begin(), dims.end()), max_width_(max_width)
  {
    if (max_width < 0) throw ConfigError("workspace width must be non-negative");
    index_t volume = 1;
    for (auto d : dims_) volume *= d;
    index_t krp_rows = 0, out_rows = 0;
    for (auto d : dims_)
    {
      krp_rows = std::max(krp_rows, volume / d);
      out_rows = std::max(out_rows, d);
    }
    krp_.resize(static_cast<std::size_t>(krp_rows * max_width));
    scratch_.resize(dims_.size() == 3 ? static_cast<std::size_t>(dims_[0] * max_width) : 0);
    output_.resize(static_cast<std::size_t>(out_rows * max_width));
  }

  void MttkrpWorkspace::check_width(index_t width) const
  {
    if (width < 0 || width > max_width_)
      throw ConfigError("MTTKRP width " + std::to_string(width) + " exceeds workspace capacity " +
                        std::to_string(max_width_));
  }

  MatrixView MttkrpWorkspace::krp(index_t mode, index_t width)
  {
    check_width(width);
    index_t rows = 1;
    for (std::size_t m = 0; m < dims_.size(); m++)
      if (static_cast<index_t>(m) != mode) rows *= dims_[m];
    if (rows * width > static_cast<index_t>(krp_.size())) throw ConfigError("KRP buffer too small for this mode");
    return {krp_.data(), rows, width, std::max<index_t>(rows, 1)};
  }

  MatrixView MttkrpWorkspace::slice_scratch(index_t width)
  {
    check_width(width);
    if (dims_.size() != 3) throw ConfigError("slice scratch is only available for order-3 tensors");
    return {scratch_.data(), dims_[0], width, dims_[0]};
  }

  MatrixView MttkrpWorkspace::output(index_t mode, index_t width)
  {
    check_width(width);
    const index_t rows = dims_[static_cast<std::size_t>(mode)];
    return {output_.data(), rows, width, rows};
  }

  // ---------------------------------------------------------------------------------------------

  namespace
  {
    void check_operands(const DenseTensor &t, std::span<const ConstMatrixView> factors, index_t mode,
                        MttkrpVariant variant, const MttkrpWorkspace &ws, MatrixView out, index_t &width)
    {
      const index_t order = t.order();
      if (mode < 0 || mode >= order) throw DimensionError("mttkrp: mode out of range");
      if (static_cast<index_t>(factors.size()) != order)
        throw DimensionError("mttkrp: expected one factor per tensor mode");
      if (!variant_valid(order, mode, variant))
        throw ConfigError("mttkrp: variant " + std::string(to_string(variant)) + " is not valid for mode " +
                          std::to_string(mode) + " of an order-" + std::to_string(order) + " tensor");
      if (ws.dims() != t.dims()) throw DimensionError("mttkrp: workspace was sized for a different tensor");
      width = -1;
      for (index_t m = 0; m < order; m++)
      {
        if (m == mode) continue;
        const auto &f = factors[static_cast<std::size_t>(m)];
        if (f.rows != t.dim(m))
          throw DimensionError("mttkrp: factor " + std::to_string(m) + " has " + std::to_string(f.rows) +
                               " rows, tensor extent is " + std::to_string(t.dim(m)));
        if (width < 0) width = f.cols;
        else if (f.cols != width) throw DimensionError("mttkrp: factors disagree on column count");
      }
      if (out.rows != t.dim(mode) || out.cols != width) throw DimensionError("mttkrp: output shape mismatch");
    }

    // T_(0) · K with the tensor read in place as I_0 × rest.
    void first_mode(const DenseTensor &t, ConstMatrixView krp, MatrixView out)
    {
      const index_t rows = t.dim(0);
      const index_t inner = t.size() / rows;
      blas::gemm(false, false, rows, out.cols, inner, 1.0, t.data().data(), rows, krp.data, krp.ld, 0.0, out.data,
                 out.ld);
    }

    // (leading × I_last)ᵀ · K.
    void last_mode(const DenseTensor &t, ConstMatrixView krp, MatrixView out)
    {
      const index_t rows = t.dim(t.order() - 1);
      const index_t lead = t.size() / rows;
      blas::gemm(true, false, rows, out.cols, lead, 1.0, t.data().data(), lead, krp.data, krp.ld, 0.0, out.data,
                 out.ld);
    }

    // Interior mode with an explicit KRP: the tensor is a sequence of `trailing` column-major
    // blocks of shape leading × I_mode; block q pairs with KRP rows [q·leading, (q+1)·leading).
    void blocked_interior(const DenseTensor &t, index_t mode, ConstMatrixView krp, MatrixView out)
    {
      const index_t rows = t.dim(mode);
      const index_t lead = t.leading_size(mode);
      const index_t trail = t.trailing_size(mode);
      const double *base = t.data().data();
      for (index_t q = 0; q < trail; q++)
        blas::gemm(true, false, rows, out.cols, lead, 1.0, base + q * lead * rows, lead, krp.data + q * lead, krp.ld,
                   q == 0 ? 0.0 : 1.0, out.data, out.ld);
    }

    // Order 3, mode 1: out = Σ_k T(:,:,k)ᵀ · (A_0 scaled column-wise by A_2(k,:)), k ascending.
    void middle_slices(const DenseTensor &t, std::span<const ConstMatrixView> factors, MttkrpWorkspace &ws,
                       MatrixView out)
    {
      const index_t i0 = t.dim(0), i1 = t.dim(1), i2 = t.dim(2);
      const ConstMatrixView a0 = factors[0];
      const ConstMatrixView a2 = factors[2];
      const MatrixView scaled = ws.slice_scratch(out.cols);
      const double *base = t.data().data();
      for (index_t k = 0; k < i2; k++)
      {
        for (index_t r = 0; r < out.cols; r++)
        {
          const double s = a2(k, r);
          const double *src = a0.data + r * a0.ld;
          double *dst = scaled.data + r * scaled.ld;
          for (index_t i = 0; i < i0; i++) dst[i] = s * src[i];
        }
        blas::gemm(true, false, i1, out.cols, i0, 1.0, base + k * i0 * i1, i0, scaled.data, scaled.ld,
                   k == 0 ? 0.0 : 1.0, out.data, out.ld);
      }
    }
  } // namespace

  void mttkrp_into(const DenseTensor &t, std::span<const ConstMatrixView> factors, index_t mode,
                   MttkrpVariant variant, MttkrpWorkspace &ws, MatrixView out)
  {
    index_t width = 0;
    check_operands(t, factors, mode, variant, ws, out, width);
    if (width == 0) return;

    if (variant == MttkrpVariant::MiddleModeSliceGemm)
    {
      middle_slices(t, factors, ws, out);
    } else
    {
      const MatrixView krp = ws.krp(mode, width);
      khatri_rao_except_into(factors, mode, krp);
      if (mode == 0) first_mode(t, krp, out);
      else if (mode == t.order() - 1) last_mode(t, krp, out);
      else blocked_interior(t, mode, krp, out);
    }
    ws.add_flops(mttkrp_flops(t.dims(), width));
  }

  Matrix mttkrp(const DenseTensor &t, std::span<const ConstMatrixView> factors, index_t mode, MttkrpVariant variant,
                MttkrpWorkspace &ws)
  {
    if (mode < 0 || mode >= t.order()) throw DimensionError("mttkrp: mode out of range");
    if (static_cast<index_t>(factors.size()) != t.order())
      throw DimensionError("mttkrp: expected one factor per tensor mode");
    const index_t width = factors[mode == 0 ? 1 : 0].cols;
    Matrix out(t.dim(mode), width);
    mttkrp_into(t, factors, mode, variant, ws, out.view());
    return out;
  }

  Matrix mttkrp(const DenseTensor &t, std::span<const Matrix> factors, index_t mode, MttkrpVariant variant,
                MttkrpWorkspace &ws)
  {
    std::vector<ConstMatrixView> views(factors.begin(), factors.end());
    return mttkrp(t, views, mode, variant, ws);
  }

  MatrixView fused_mttkrp(const DenseTensor &t, std::span<const MultiMatrix> multis, index_t mode,
                          MttkrpVariant variant, MttkrpWorkspace &ws)
  {
    if (static_cast<index_t>(multis.size()) != t.order())
      throw DimensionError("fused_mttkrp: expected one multi-matrix per tensor mode");
    const index_t width = multis.front().active_width();
    std::array<ConstMatrixView, 16> small{};
    std::vector<ConstMatrixView> large;
    std::span<ConstMatrixView> views;
    if (multis.size() <= small.size()) views = std::span(small.data(), multis.size());
    else
    {
      large.resize(multis.size());
      views = large;
    }
    for (std::size_t m = 0; m < multis.size(); m++)
    {
      if (multis[m].active_width() != width) throw DimensionError("fused_mttkrp: multi-matrix widths differ");
      if (!multis[m].is_compact()) throw DimensionError("fused_mttkrp: multi-matrix must be compressed first");
      views[m] = multis[m].active_view();
    }
    const MatrixView out = ws.output(mode, width);
    mttkrp_into(t, views, mode, variant, ws, out);
    return out;
  }

  MatrixView fused_mttkrp(const DenseTensor &t, std::span<const MultiMatrix> multis, index_t mode,
                          MttkrpWorkspace &ws)
  {
    const index_t width = multis.empty() ? 0 : multis.front().active_width();
    return fused_mttkrp(t, multis, mode, select_variant(t.dims(), mode, width), ws);
  }
} // namespace cals

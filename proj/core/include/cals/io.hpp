#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cals/driver.hpp"
#include "cals/model.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  // Binary tensor file, all integers little endian:
  //   "CALS1" | scalar code (u8, 1 = float64) | layout (u8, 0 = mode-0 fastest) | reserved (u8)
  //   | order (u32) | dims (u64 × order) | entries (f64 × ∏dims)
  inline constexpr std::string_view kTensorMagic = "CALS1";

  void write_tensor(std::ostream &os, const DenseTensor &t);
  void write_tensor(const std::filesystem::path &path, const DenseTensor &t);
  DenseTensor read_tensor(std::istream &is);
  DenseTensor read_tensor(const std::filesystem::path &path);

  /// Lines "i0,i1,...,value" with zero-based indices; '#' starts a comment. Missing entries are
  /// zero. Dimensions default to 1 + the largest index seen in each mode.
  DenseTensor read_csv_entries(std::istream &is, std::optional<std::vector<index_t>> dims = std::nullopt);
  DenseTensor read_csv_entries(const std::filesystem::path &path,
                               std::optional<std::vector<index_t>> dims = std::nullopt);

  /// Low-rank tensor with uniform(0,1) factors plus Gaussian noise scaled to
  /// noise · ‖signal‖ in Frobenius norm.
  DenseTensor generate_synthetic(std::span<const index_t> dims, index_t true_rank, double noise, std::uint64_t seed);

  /// "8,6,4" or "8x6x4".
  std::vector<index_t> parse_dims(std::string_view s);
  /// "5", "1..20" or "1,3,7".
  std::vector<index_t> parse_ranks(std::string_view s);

  /// Everything needed to reproduce a decomposition run.
  struct RunConfig
  {
    std::string tensor_path;
    std::vector<index_t> dims;
    std::vector<index_t> ranks;
    int per_rank{1};
    std::uint64_t seed{0};
    DriverConfig driver{};

    void validate() const;
  };

  std::string config_to_json(const RunConfig &cfg);
  RunConfig config_from_json(std::string_view text);

  /// Results document: metadata, config, and per model its id, rank, seed, status, fit, error,
  /// iteration count, wall time and (optionally) factors.
  std::string results_to_json(const RunConfig &cfg, std::span<const Model> models, const RunStats &stats,
                              bool include_factors = true);
} // namespace cals

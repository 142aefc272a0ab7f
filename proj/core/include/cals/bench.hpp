#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cals/driver.hpp"
#include "cals/mttkrp.hpp"
#include "cals/tensor.hpp"

namespace cals
{
  /// Theoretical peak performance parameters of a host.
  struct TppModel
  {
    double freq_ghz{0.0};
    int threads{1};
    int doubles_per_register{8}; ///< nd
    int fma_units{2};            ///< nv
  };

  /// TPP = 2·freq·nt·nd·nv in GFlops/s. Throws ConfigError on non-positive parameters.
  double tpp(const TppModel &m);

  /// Reference-machine preset (24-core AVX-512 Xeon; 1, 12 or 24 threads). Labelled as such in
  /// reports; real hosts should supply their own numbers.
  TppModel reference_tpp(int threads);

  /// flops / seconds / TPP.
  double efficiency(FlopCount flops, double seconds, double tpp_gflops);

  struct BenchRecord
  {
    std::string label;
    std::string mode; ///< execution mode or "mttkrp"
    std::string variant;
    int threads{1};
    index_t width{0};
    FlopCount flops{};
    double seconds{0.0}; ///< best (sweeps) or measured (segments)
    double seconds_mean{0.0};
    double seconds_stddev{0.0};
    int reps{1};
    double efficiency{0.0};
    std::size_t segment{0};
    double progress_fraction{0.0}; ///< cumulative flops share at the end of this segment
  };

  /// Per width and tensor mode: the fastest valid MTTKRP variant over `reps` timed runs (after
  /// one warm-up call), plus an "all-modes" record summing the best per-mode times.
  std::vector<BenchRecord> bench_mttkrp_sweep(const DenseTensor &t, std::span<const index_t> widths, int threads,
                                              int reps, const TppModel &tpp_model, std::uint64_t seed = 1);

  struct SpeedupRow
  {
    index_t rank{0};
    int instances{0};
    double als_seconds{0.0};
    double cals_seconds{0.0};
    double speedup{0.0};
    FlopCount flops{};
  };

  struct SpeedupReport
  {
    std::vector<SpeedupRow> rows;
    double geometric_mean{0.0};
    int iterations{0};
    int threads{1};
    std::uint64_t seed{0};
  };

  /// For every rank: `per_rank` random starting points run for exactly `iterations` iterations
  /// by SequentialAls and by Cals; speedup = time(ALS) / time(CALS).
  SpeedupReport bench_speedup(const DenseTensor &t, std::span<const index_t> ranks, int per_rank, int iterations,
                              int threads, std::uint64_t seed, index_t r_star = kDefaultRStar);

  struct EfficiencyTrace
  {
    std::string mode;
    std::vector<BenchRecord> segments;
    FlopCount total_flops{};
    double total_seconds{0.0};
    std::vector<double> transitions; ///< progress fractions where the rank being processed changes
  };

  /// Runs `workload` for exactly `iterations` iterations in `mode` and records one efficiency
  /// segment per fused iteration (Cals) or per instance (other modes).
  EfficiencyTrace bench_efficiency_trace(const DenseTensor &t, std::deque<Model> workload, ExecutionMode mode,
                                         int iterations, int threads, const TppModel &tpp_model,
                                         index_t r_star = kDefaultRStar);

  struct GemmBand
  {
    index_t p{0};
    int samples{0};
    double mean{0.0};
    double median{0.0};
    double stddev{0.0};
  };

  /// Efficiency statistics of `samples` square p×p matrix products.
  GemmBand bench_gemm_reference(index_t p, int samples, int threads, const TppModel &tpp_model);

  void write_records_csv(std::ostream &os, const std::vector<BenchRecord> &records);
  std::string records_to_json(const std::vector<BenchRecord> &records);
  std::string speedup_to_json(const SpeedupReport &report);
  void write_speedup_csv(std::ostream &os, const SpeedupReport &report);
  std::string trace_to_json(const EfficiencyTrace &trace, const GemmBand *band = nullptr);
} // namespace cals

#include "cals/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "blas.hpp"
#include "cals/api.hpp"
#include "cals/error.hpp"
#include "cals/linalg.hpp"
#include "cals/timer.hpp"

namespace cals
{
  using nlohmann::json;

  double tpp(const TppModel &m)
  {
    if (!(m.freq_ghz > 0.0) || m.threads < 1 || m.doubles_per_register < 1 || m.fma_units < 1)
      throw ConfigError("TPP parameters must be positive");
    return 2.0 * m.freq_ghz * m.threads * m.doubles_per_register * m.fma_units;
  }

  TppModel reference_tpp(int threads)
  {
    // Nominal frequencies of the reference machine: turbo single core, one socket, both sockets.
    const double freq = threads <= 1 ? 3.5 : threads <= 12 ? 2.6 : 2.0;
    return {freq, threads, 8, 2};
  }

  double efficiency(FlopCount flops, double seconds, double tpp_gflops)
  {
    if (seconds <= 0.0 || tpp_gflops <= 0.0) return 0.0;
    return static_cast<double>(flops.flops) / seconds / (tpp_gflops * 1e9);
  }

  namespace
  {
    struct Stats
    {
      double min{0.0}, mean{0.0}, stddev{0.0};
    };

    Stats summarize(const std::vector<double> &xs)
    {
      Stats s;
      if (xs.empty()) return s;
      s.min = *std::min_element(xs.begin(), xs.end());
      s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
      double var = 0.0;
      for (auto x : xs) var += (x - s.mean) * (x - s.mean);
      s.stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
      return s;
    }

    std::vector<Matrix> random_factors(const DenseTensor &t, index_t width, std::uint64_t seed)
    {
      return random_model(t.dims(), width, seed).factors;
    }
  } // namespace

  std::vector<BenchRecord> bench_mttkrp_sweep(const DenseTensor &t, std::span<const index_t> widths, int threads,
                                              int reps, const TppModel &tpp_model, std::uint64_t seed)
  {
    std::vector<BenchRecord> out;
    if (reps <= 0 || widths.empty()) return out;
    const double peak = tpp(tpp_model);
    ScopedBlasThreads blas(threads);
    const index_t max_width = *std::max_element(widths.begin(), widths.end());
    MttkrpWorkspace ws(t.dims(), max_width);

    for (const index_t width : widths)
    {
      const auto factors = random_factors(t, width, seed);
      std::vector<ConstMatrixView> views(factors.begin(), factors.end());
      const FlopCount flops = mttkrp_flops(t.dims(), width);
      BenchRecord all{"all-modes", "mttkrp", "best", threads, width};
      all.reps = reps;
      for (index_t n = 0; n < t.order(); n++)
      {
        BenchRecord best;
        best.seconds = std::numeric_limits<double>::infinity();
        for (auto v : {MttkrpVariant::FirstModeGemm, MttkrpVariant::MiddleModeSliceGemm, MttkrpVariant::LastModeGemm,
                       MttkrpVariant::ExplicitKrpGemm})
        {
          if (!variant_valid(t.order(), n, v)) continue;
          const MatrixView o = ws.output(n, width);
          mttkrp_into(t, views, n, v, ws, o); // warm-up
          std::vector<double> times;
          for (int r = 0; r < reps; r++)
          {
            Timer timer;
            mttkrp_into(t, views, n, v, ws, o);
            times.push_back(timer.seconds());
          }
          const auto s = summarize(times);
          if (s.min < best.seconds)
          {
            best.label = "mode-" + std::to_string(n);
            best.mode = "mttkrp";
            best.variant = std::string(to_string(v));
            best.threads = threads;
            best.width = width;
            best.flops = flops;
            best.seconds = s.min;
            best.seconds_mean = s.mean;
            best.seconds_stddev = s.stddev;
            best.reps = reps;
            best.efficiency = efficiency(flops, s.min, peak);
          }
        }
        all.flops.flops += best.flops.flops;
        all.seconds += best.seconds;
        all.seconds_mean += best.seconds_mean;
        all.seconds_stddev = std::hypot(all.seconds_stddev, best.seconds_stddev);
        out.push_back(std::move(best));
      }
      all.efficiency = efficiency(all.flops, all.seconds, peak);
      out.push_back(std::move(all));
    }
    return out;
  }

  SpeedupReport bench_speedup(const DenseTensor &t, std::span<const index_t> ranks, int per_rank, int iterations,
                              int threads, std::uint64_t seed, index_t r_star)
  {
    SpeedupReport report;
    report.iterations = iterations;
    report.threads = threads;
    report.seed = seed;
    if (ranks.empty() || per_rank <= 0) return report;

    DriverConfig cfg;
    cfg.als.convergence.tol = 0.0;
    cfg.als.convergence.max_iterations = iterations;
    cfg.threads = threads;
    cfg.capacity.r_star = r_star;

    double log_sum = 0.0;
    for (const index_t rank : ranks)
    {
      const std::vector<index_t> one{rank};
      const auto workload = make_starting_points(t.dims(), one, per_rank, seed + static_cast<std::uint64_t>(rank));

      // Warm-up (excluded): one iteration of each mode on the same workload.
      {
        DriverConfig warm = cfg;
        warm.als.convergence.max_iterations = 1;
        warm.mode = ExecutionMode::SequentialAls;
        (void)run(t, workload, warm);
        warm.mode = ExecutionMode::Cals;
        (void)run(t, workload, warm);
      }

      SpeedupRow row{rank, per_rank};
      RunStats stats;
      cfg.mode = ExecutionMode::SequentialAls;
      (void)run(t, workload, cfg, &stats);
      row.als_seconds = stats.seconds;
      row.flops = stats.flops;
      cfg.mode = ExecutionMode::Cals;
      (void)run(t, workload, cfg, &stats);
      row.cals_seconds = stats.seconds;
      row.speedup = row.cals_seconds > 0.0 ? row.als_seconds / row.cals_seconds : 0.0;
      log_sum += std::log(row.speedup);
      report.rows.push_back(row);
    }
    report.geometric_mean = std::exp(log_sum / static_cast<double>(report.rows.size()));
    return report;
  }

  EfficiencyTrace bench_efficiency_trace(const DenseTensor &t, std::deque<Model> workload, ExecutionMode mode,
                                         int iterations, int threads, const TppModel &tpp_model, index_t r_star)
  {
    EfficiencyTrace trace;
    trace.mode = std::string(to_string(mode));
    const double peak = tpp(tpp_model);
    if (mode == ExecutionMode::SequentialAls)
      std::stable_sort(workload.begin(), workload.end(),
                       [](const Model &a, const Model &b) { return a.rank < b.rank; });

    DriverConfig cfg;
    cfg.mode = mode;
    cfg.threads = threads;
    cfg.capacity.r_star = r_star;
    cfg.als.convergence.tol = 0.0;
    cfg.als.convergence.max_iterations = iterations;
    cfg.on_segment = [&](const Segment &s) {
      BenchRecord r;
      r.label = "segment";
      r.mode = trace.mode;
      r.threads = threads;
      r.width = s.width;
      r.flops = s.flops;
      r.seconds = s.seconds;
      r.seconds_mean = s.seconds;
      r.efficiency = efficiency(s.flops, s.seconds, peak);
      r.segment = s.index;
      trace.segments.push_back(r);
    };
    RunStats stats;
    (void)run(t, std::move(workload), cfg, &stats);

    std::uint64_t cumulative = 0;
    for (const auto &s : trace.segments) trace.total_flops.flops += s.flops.flops;
    index_t last_width = -1;
    for (auto &s : trace.segments)
    {
      if (mode == ExecutionMode::SequentialAls && last_width >= 0 && s.width != last_width)
        trace.transitions.push_back(static_cast<double>(cumulative) / static_cast<double>(trace.total_flops.flops));
      last_width = s.width;
      cumulative += s.flops.flops;
      s.progress_fraction = static_cast<double>(cumulative) / static_cast<double>(trace.total_flops.flops);
    }
    trace.total_seconds = stats.seconds;
    return trace;
  }

  GemmBand bench_gemm_reference(index_t p, int samples, int threads, const TppModel &tpp_model)
  {
    GemmBand band{p, samples};
    if (samples <= 0 || p <= 0) return band;
    const double peak = tpp(tpp_model);
    ScopedBlasThreads blas(threads);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(p * p)), b(a.size()), c(a.size());
    for (auto &v : a) v = dist(gen);
    for (auto &v : b) v = dist(gen);
    const FlopCount flops{2ull * static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(p) *
                          static_cast<std::uint64_t>(p)};
    std::vector<double> effs;
    blas::gemm(false, false, p, p, p, 1.0, a.data(), p, b.data(), p, 0.0, c.data(), p); // warm-up
    for (int s = 0; s < samples; s++)
    {
      Timer timer;
      blas::gemm(false, false, p, p, p, 1.0, a.data(), p, b.data(), p, 0.0, c.data(), p);
      effs.push_back(efficiency(flops, timer.seconds(), peak));
    }
    const auto st = summarize(effs);
    band.mean = st.mean;
    band.stddev = st.stddev;
    std::sort(effs.begin(), effs.end());
    const auto n = effs.size();
    band.median = n % 2 ? effs[n / 2] : 0.5 * (effs[n / 2 - 1] + effs[n / 2]);
    return band;
  }

  // ---------------------------------------------------------------------------------------------

  namespace
  {
    json record_json(const BenchRecord &r)
    {
      return {{"label", r.label},
              {"mode", r.mode},
              {"variant", r.variant},
              {"threads", r.threads},
              {"width", r.width},
              {"flops", r.flops.flops},
              {"seconds", r.seconds},
              {"seconds_mean", r.seconds_mean},
              {"seconds_stddev", r.seconds_stddev},
              {"reps", r.reps},
              {"efficiency", r.efficiency},
              {"segment", r.segment},
              {"progress_fraction", r.progress_fraction}};
    }
  } // namespace

  void write_records_csv(std::ostream &os, const std::vector<BenchRecord> &records)
  {
    os << "label,mode,variant,threads,width,flops,seconds,seconds_mean,seconds_stddev,reps,efficiency,segment,"
          "progress_fraction\n";
    for (const auto &r : records)
      os << r.label << ',' << r.mode << ',' << r.variant << ',' << r.threads << ',' << r.width << ',' << r.flops.flops
         << ',' << r.seconds << ',' << r.seconds_mean << ',' << r.seconds_stddev << ',' << r.reps << ','
         << r.efficiency << ',' << r.segment << ',' << r.progress_fraction << '\n';
  }

  std::string records_to_json(const std::vector<BenchRecord> &records)
  {
    json j = json::array();
    for (const auto &r : records) j.push_back(record_json(r));
    return json{{"schema", "cals.bench.records/1"}, {"records", j}}.dump(2);
  }

  std::string speedup_to_json(const SpeedupReport &report)
  {
    json rows = json::array();
    for (const auto &r : report.rows)
      rows.push_back({{"rank", r.rank},
                      {"instances", r.instances},
                      {"als_seconds", r.als_seconds},
                      {"cals_seconds", r.cals_seconds},
                      {"speedup", r.speedup},
                      {"flops", r.flops.flops}});
    return json{{"schema", "cals.bench.speedup/1"},
                {"iterations", report.iterations},
                {"threads", report.threads},
                {"seed", report.seed},
                {"geometric_mean_speedup", report.geometric_mean},
                {"rows", rows}}
        .dump(2);
  }

  void write_speedup_csv(std::ostream &os, const SpeedupReport &report)
  {
    os << "rank,instances,threads,iterations,als_seconds,cals_seconds,speedup,flops\n";
    for (const auto &r : report.rows)
      os << r.rank << ',' << r.instances << ',' << report.threads << ',' << report.iterations << ',' << r.als_seconds
         << ',' << r.cals_seconds << ',' << r.speedup << ',' << r.flops.flops << '\n';
  }

  std::string trace_to_json(const EfficiencyTrace &trace, const GemmBand *band)
  {
    json segs = json::array();
    for (const auto &r : trace.segments) segs.push_back(record_json(r));
    json j{{"schema", "cals.bench.efficiency/1"},
           {"mode", trace.mode},
           {"total_flops", trace.total_flops.flops},
           {"total_seconds", trace.total_seconds},
           {"transitions", trace.transitions},
           {"segments", segs}};
    if (band)
      j["gemm_reference"] = {{"p", band->p},
                             {"samples", band->samples},
                             {"mean", band->mean},
                             {"median", band->median},
                             {"stddev", band->stddev}};
    return j.dump(2);
  }
} // namespace cals

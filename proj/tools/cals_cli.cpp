#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cals/api.hpp"
#include "cals/bench.hpp"
#include "cals/error.hpp"
#include "cals/io.hpp"

using namespace cals;
using nlohmann::json;

namespace
{
  int exit_code(std::string_view kind)
  {
    if (kind == "config") return 2;
    if (kind == "format") return 3;
    if (kind == "dimension") return 4;
    if (kind == "numerical") return 5;
    return 1;
  }

  int report_error(std::string_view kind, std::string_view message)
  {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << std::endl;
    return exit_code(kind);
  }

  int default_threads()
  {
    if (const char *env = std::getenv("CALS_THREADS"))
    {
      try
      {
        const int n = std::stoi(env);
        if (n >= 1) return n;
      }
      catch (...)
      {
      }
      throw ConfigError(std::string("CALS_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
  }

  void write_text(const std::string &path, const std::string &text)
  {
    if (path.empty() || path == "-")
    {
      std::cout << text << '\n';
      return;
    }
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os << text << '\n';
  }

  struct TensorSource
  {
    std::string path;
    std::string dims;
    index_t true_rank{5};
    double noise{0.0};
    std::uint64_t seed{0};

    void add_options(CLI::App *app, bool allow_file)
    {
      if (allow_file) app->add_option("--tensor", path, "Tensor file (CALS1 binary or .csv entries)");
      app->add_option("--dims", dims, "Synthetic tensor dimensions, e.g. 100,100,100");
      app->add_option("--true-rank", true_rank, "Rank of the synthetic tensor");
      app->add_option("--noise", noise, "Relative noise level of the synthetic tensor");
      app->add_option("--tensor-seed", seed, "Seed of the synthetic tensor");
    }

    DenseTensor load() const
    {
      if (!path.empty())
      {
        if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return read_csv_entries(path);
        return read_tensor(path);
      }
      if (dims.empty()) throw ConfigError("either --tensor or --dims is required");
      const auto d = parse_dims(dims);
      return generate_synthetic(d, true_rank, noise, seed);
    }
  };

  TppModel tpp_for(double freq_ghz, int threads, json &meta)
  {
    if (freq_ghz > 0.0)
    {
      meta = {{"source", "user"}, {"freq_ghz", freq_ghz}, {"threads", threads}};
      return {freq_ghz, threads, 8, 2};
    }
    const auto m = reference_tpp(threads);
    meta = {{"source", "reference-machine"}, {"freq_ghz", m.freq_ghz}, {"threads", threads}};
    return m;
  }

  std::string with_meta(const std::string &doc, const json &extra)
  {
    auto j = json::parse(doc);
    for (auto &[k, v] : extra.items()) j[k] = v;
    return j.dump(2);
  }
} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Concurrent ALS for CP decomposition of dense tensors"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  // gen
  auto *gen = app.add_subcommand("gen", "Generate a synthetic low-rank tensor file");
  TensorSource gen_src;
  std::string gen_out;
  gen_src.add_options(gen, false);
  gen->add_option("--out", gen_out, "Output tensor file")->required();

  // decompose
  auto *dec = app.add_subcommand("decompose", "Fit many CP models to one tensor");
  TensorSource dec_src;
  dec_src.add_options(dec, true);
  std::string ranks = "1..5", mode = "cals", out, config_path;
  int per_rank = 1, max_iters = 1000, threads = 0;
  double tol = 1e-6, alpha = 0.0;
  index_t r_star = kDefaultRStar;
  std::uint64_t seed = 0;
  bool line_search = false, nonneg = false, deterministic = false, no_factors = false;
  dec->add_option("--config", config_path, "JSON run config; command-line flags are ignored when given");
  dec->add_option("--ranks", ranks, "Ranks: N, A..B or a comma list");
  dec->add_option("--per-rank", per_rank, "Starting points per rank");
  dec->add_option("--mode", mode, "Execution mode: als, omp-als or cals");
  dec->add_option("--tol", tol, "Fit-change tolerance; 0 runs exactly --max-iters iterations");
  dec->add_option("--max-iters", max_iters, "Iteration cap");
  dec->add_option("--r-star", r_star, "Fused-width cap of the multi-matrix");
  dec->add_option("--seed", seed, "Base seed of the starting points");
  dec->add_option("--threads", threads, "Thread count (default: CALS_THREADS or 1)");
  dec->add_flag("--line-search", line_search, "Enable line-search extrapolation");
  dec->add_option("--alpha", alpha, "Constant line-search factor (default: cube root of the iteration)");
  dec->add_flag("--nonneg", nonneg, "Non-negative factors");
  dec->add_flag("--deterministic", deterministic, "Bit-reproducible run (single-threaded BLAS)");
  dec->add_flag("--no-factors", no_factors, "Omit factor matrices from the results");
  dec->add_option("--out", out, "Results JSON (default: stdout)");

  // bench
  auto *bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  TensorSource b_src;
  std::string b_json, b_csv, b_widths = "1,10,100,1000", b_ranks = "1..20", b_mode = "cals";
  int b_reps = 5, b_threads = 0, b_per_rank = 20, b_iters = 50, b_gemm_samples = 0;
  double b_freq = 0.0;
  std::uint64_t b_seed = 0;
  index_t b_r_star = kDefaultRStar;
  auto common = [&](CLI::App *sub) {
    b_src.add_options(sub, true);
    sub->add_option("--threads", b_threads, "Thread count (default: CALS_THREADS or 1)");
    sub->add_option("--json", b_json, "JSON report path (default: stdout)");
    sub->add_option("--csv", b_csv, "CSV report path");
  };
  auto *b_mttkrp = bench->add_subcommand("mttkrp", "MTTKRP efficiency across widths");
  common(b_mttkrp);
  b_mttkrp->add_option("--widths", b_widths, "Comma list of widths");
  b_mttkrp->add_option("--reps", b_reps, "Timed repetitions per point");
  b_mttkrp->add_option("--freq-ghz", b_freq, "Core frequency for the TPP model (default: reference machine)");
  auto *b_speed = bench->add_subcommand("speedup", "CALS versus ALS time per rank");
  common(b_speed);
  b_speed->add_option("--ranks", b_ranks, "Ranks");
  b_speed->add_option("--per-rank", b_per_rank, "Models per rank");
  b_speed->add_option("--iters", b_iters, "Iterations per model");
  b_speed->add_option("--seed", b_seed, "Base seed");
  b_speed->add_option("--r-star", b_r_star, "Fused-width cap");
  auto *b_eff = bench->add_subcommand("efficiency", "Per-segment efficiency trace of a workload");
  common(b_eff);
  b_eff->add_option("--ranks", b_ranks, "Ranks");
  b_eff->add_option("--per-rank", b_per_rank, "Models per rank");
  b_eff->add_option("--iters", b_iters, "Iterations per model");
  b_eff->add_option("--mode", b_mode, "Execution mode: als, omp-als or cals");
  b_eff->add_option("--seed", b_seed, "Base seed");
  b_eff->add_option("--r-star", b_r_star, "Fused-width cap");
  b_eff->add_option("--freq-ghz", b_freq, "Core frequency for the TPP model (default: reference machine)");
  b_eff->add_option("--gemm-samples", b_gemm_samples, "Samples of the square GEMM reference band (0: skip)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::CallForVersion &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    report_error("usage", e.what());
    return 2;
  }

  try
  {
    if (*gen)
    {
      write_tensor(gen_out, gen_src.load());
      return 0;
    }

    if (*dec)
    {
      RunConfig cfg;
      if (!config_path.empty())
      {
        std::ifstream is(config_path);
        if (!is) throw FormatError("cannot open " + config_path);
        std::stringstream ss;
        ss << is.rdbuf();
        cfg = config_from_json(ss.str());
      }
      else
      {
        cfg.tensor_path = dec_src.path;
        cfg.ranks = parse_ranks(ranks);
        cfg.per_rank = per_rank;
        cfg.seed = seed;
        CpOptions o;
        o.tol = tol;
        o.max_iterations = max_iters;
        o.r_star = r_star;
        o.line_search = line_search;
        o.alpha = alpha;
        o.non_negative = nonneg;
        o.mode = parse_execution_mode(mode);
        o.threads = threads > 0 ? threads : default_threads();
        o.deterministic = deterministic;
        cfg.driver = o.driver_config();
      }
      if (!cfg.tensor_path.empty()) dec_src.path = cfg.tensor_path;
      const DenseTensor t = dec_src.load();
      cfg.dims = t.dims();
      cfg.validate();

      RunStats stats;
      const auto starts = make_starting_points(t.dims(), cfg.ranks, cfg.per_rank, cfg.seed);
      auto done = run(t, starts, cfg.driver, &stats);
      std::vector<Model> models(done.begin(), done.end());
      std::sort(models.begin(), models.end(), [](const Model &a, const Model &b) { return a.id < b.id; });
      write_text(out, results_to_json(cfg, models, stats, !no_factors));
      return 0;
    }

    const int nt = b_threads > 0 ? b_threads : default_threads();
    const DenseTensor t = b_src.load();
    json meta{{"dims", t.dims()}};

    if (*b_mttkrp)
    {
      json tpp_meta;
      const auto model = tpp_for(b_freq, nt, tpp_meta);
      meta["tpp"] = tpp_meta;
      std::vector<index_t> widths;
      for (auto w : parse_ranks(b_widths)) widths.push_back(w);
      const auto recs = bench_mttkrp_sweep(t, widths, nt, b_reps, model);
      write_text(b_json, with_meta(records_to_json(recs), meta));
      if (!b_csv.empty())
      {
        std::ofstream os(b_csv);
        write_records_csv(os, recs);
      }
      return 0;
    }

    if (*b_speed)
    {
      const auto rs = parse_ranks(b_ranks);
      const auto rep = bench_speedup(t, rs, b_per_rank, b_iters, nt, b_seed, b_r_star);
      write_text(b_json, with_meta(speedup_to_json(rep), meta));
      if (!b_csv.empty())
      {
        std::ofstream os(b_csv);
        write_speedup_csv(os, rep);
      }
      return 0;
    }

    if (*b_eff)
    {
      json tpp_meta;
      const auto model = tpp_for(b_freq, nt, tpp_meta);
      meta["tpp"] = tpp_meta;
      const auto rs = parse_ranks(b_ranks);
      auto workload = make_starting_points(t.dims(), rs, b_per_rank, b_seed);
      const auto trace =
          bench_efficiency_trace(t, std::move(workload), parse_execution_mode(b_mode), b_iters, nt, model, b_r_star);
      GemmBand band;
      if (b_gemm_samples > 0)
      {
        index_t total = 1;
        for (auto d : t.dims()) total *= d;
        band = bench_gemm_reference(static_cast<index_t>(std::llround(std::sqrt(static_cast<double>(total)))),
                                    b_gemm_samples, nt, model);
      }
      write_text(b_json, with_meta(trace_to_json(trace, b_gemm_samples > 0 ? &band : nullptr), meta));
      if (!b_csv.empty())
      {
        std::ofstream os(b_csv);
        write_records_csv(os, trace.segments);
      }
      return 0;
    }
  }
  catch (const Error &e)
  {
    return report_error(e.kind(), e.what());
  }
  catch (const std::exception &e)
  {
    return report_error("internal", e.what());
  }
  return 0;
}

#include "cals/api.hpp"

#include <algorithm>

#include "cals/error.hpp"

namespace cals
{
  std::string version() { return "0.1.0"; }

  DriverConfig CpOptions::driver_config() const
  {
    DriverConfig cfg;
    cfg.als.convergence.tol = tol;
    cfg.als.convergence.max_iterations = max_iterations;
    cfg.als.line_search.enabled = line_search;
    if (alpha > 0.0)
    {
      cfg.als.line_search.rule = AlphaRule::Constant;
      cfg.als.line_search.alpha = alpha;
    }
    cfg.als.non_negative = non_negative;
    cfg.capacity.r_star = r_star;
    cfg.mode = mode;
    cfg.threads = threads;
    cfg.deterministic = deterministic;
    return cfg;
  }

  namespace
  {
    std::uint64_t splitmix64(std::uint64_t x)
    {
      x += 0x9e3779b97f4a7c15ull;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
      return x ^ (x >> 31);
    }
  } // namespace

  std::deque<Model> make_starting_points(std::span<const index_t> dims, std::span<const index_t> ranks, int per_rank,
                                         std::uint64_t base_seed)
  {
    if (per_rank < 0) throw ConfigError("per_rank must be non-negative");
    std::deque<Model> out;
    InstanceId id = 0;
    for (const index_t r : ranks)
    {
      if (r < 1) throw ConfigError("ranks must be positive");
      for (int k = 0; k < per_rank; k++, id++)
        out.push_back(random_model(dims, r, splitmix64(base_seed ^ splitmix64(id)), id));
    }
    return out;
  }

  DenseTensor tensor_from_buffer(std::span<const double> data, std::span<const index_t> dims, bool row_major)
  {
    std::vector<index_t> d(dims.begin(), dims.end());
    if (!row_major) return DenseTensor(d, std::vector<double>(data.begin(), data.end()));

    index_t total = 1;
    for (auto x : d) total *= x;
    if (static_cast<index_t>(data.size()) != total) throw DimensionError("buffer size does not match dims");
    std::vector<double> out(data.size());
    const auto order = d.size();
    std::vector<index_t> idx(order, 0);
    // Walk the source in C order while tracking the column-major destination offset.
    std::vector<index_t> stride(order, 1);
    for (std::size_t i = 1; i < order; i++) stride[i] = stride[i - 1] * d[i - 1];
    index_t dst = 0;
    for (index_t src = 0; src < total; src++)
    {
      out[static_cast<std::size_t>(dst)] = data[static_cast<std::size_t>(src)];
      for (std::size_t m = order; m-- > 0;)
      {
        idx[m]++;
        dst += stride[m];
        if (idx[m] < d[m]) break;
        dst -= stride[m] * d[m];
        idx[m] = 0;
      }
    }
    return DenseTensor(std::move(d), std::move(out));
  }

  std::vector<Model> cp_cals(const DenseTensor &t, std::deque<Model> starting_points, const CpOptions &opts,
                             RunStats *stats)
  {
    auto done = run(t, std::move(starting_points), opts.driver_config(), stats);
    std::vector<Model> out(std::make_move_iterator(done.begin()), std::make_move_iterator(done.end()));
    std::stable_sort(out.begin(), out.end(), [](const Model &a, const Model &b) { return a.id < b.id; });
    return out;
  }

  std::vector<Model> cp_cals(const DenseTensor &t, std::span<const index_t> ranks, int per_rank,
                             const CpOptions &opts, RunStats *stats)
  {
    return cp_cals(t, make_starting_points(t.dims(), ranks, per_rank, opts.seed), opts, stats);
  }
} // namespace cals

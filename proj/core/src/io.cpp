#include "cals/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cals/api.hpp"
#include "cals/error.hpp"

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

namespace cals
{
  using nlohmann::json;

  namespace
  {
    template <typename T> void put(std::ostream &os, T v) { os.write(reinterpret_cast<const char *>(&v), sizeof v); }

    template <typename T> T get(std::istream &is)
    {
      T v{};
      if (!is.read(reinterpret_cast<char *>(&v), sizeof v)) throw FormatError("truncated tensor file");
      return v;
    }

    constexpr std::uint8_t kFloat64 = 1;
    constexpr std::uint8_t kColumnMajor = 0;
    constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 40;
  } // namespace

  void write_tensor(std::ostream &os, const DenseTensor &t)
  {
    os.write(kTensorMagic.data(), static_cast<std::streamsize>(kTensorMagic.size()));
    put<std::uint8_t>(os, kFloat64);
    put<std::uint8_t>(os, kColumnMajor);
    put<std::uint8_t>(os, 0);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(t.order()));
    for (auto d : t.dims()) put<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char *>(t.data().data()),
             static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    if (!os) throw FormatError("failed writing tensor");
  }

  void write_tensor(const std::filesystem::path &path, const DenseTensor &t)
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    write_tensor(os, t);
  }

  DenseTensor read_tensor(std::istream &is)
  {
    char magic[5]{};
    if (!is.read(magic, 5) || std::string_view(magic, 5) != kTensorMagic) throw FormatError("bad tensor magic");
    if (get<std::uint8_t>(is) != kFloat64) throw FormatError("unsupported scalar type");
    if (get<std::uint8_t>(is) != kColumnMajor) throw FormatError("unsupported layout");
    (void)get<std::uint8_t>(is);
    const auto order = get<std::uint32_t>(is);
    if (order < 2 || order > 64) throw FormatError("unsupported tensor order " + std::to_string(order));
    std::vector<index_t> dims(order);
    std::uint64_t total = 1;
    for (auto &d : dims)
    {
      const auto v = get<std::uint64_t>(is);
      if (v == 0 || v > kMaxEntries || total > kMaxEntries / v) throw FormatError("invalid tensor dimensions");
      total *= v;
      d = static_cast<index_t>(v);
    }
    std::vector<double> data(total);
    if (!is.read(reinterpret_cast<char *>(data.data()), static_cast<std::streamsize>(total * sizeof(double))))
      throw FormatError("truncated tensor data");
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after tensor data");
    return DenseTensor(std::move(dims), std::move(data));
  }

  DenseTensor read_tensor(const std::filesystem::path &path)
  {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_tensor(is);
  }

  namespace
  {
    std::string_view trim(std::string_view s)
    {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    }

    template <typename T> T parse_number(std::string_view s, const char *what)
    {
      s = trim(s);
      T v{};
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size())
        throw FormatError(std::string("cannot parse ") + what + " '" + std::string(s) + "'");
      return v;
    }

    std::vector<std::string_view> split(std::string_view s, std::string_view seps)
    {
      std::vector<std::string_view> out;
      std::size_t start = 0;
      while (true)
      {
        const auto pos = s.find_first_of(seps, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
      }
      return out;
    }
  } // namespace

  DenseTensor read_csv_entries(std::istream &is, std::optional<std::vector<index_t>> dims)
  {
    std::vector<std::pair<std::vector<index_t>, double>> entries;
    std::size_t order = dims ? dims->size() : 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line))
    {
      lineno++;
      std::string_view sv = line;
      if (auto h = sv.find('#'); h != std::string_view::npos) sv = sv.substr(0, h);
      sv = trim(sv);
      if (sv.empty()) continue;
      const auto fields = split(sv, ",");
      if (fields.size() < 3) throw FormatError("line " + std::to_string(lineno) + ": expected indices and a value");
      if (order == 0) order = fields.size() - 1;
      if (fields.size() != order + 1) throw FormatError("line " + std::to_string(lineno) + ": inconsistent order");
      std::vector<index_t> idx(order);
      for (std::size_t m = 0; m < order; m++)
      {
        idx[m] = parse_number<index_t>(fields[m], "index");
        if (idx[m] < 0) throw FormatError("line " + std::to_string(lineno) + ": negative index");
      }
      entries.emplace_back(std::move(idx), parse_number<double>(fields[order], "value"));
    }
    if (order == 0) throw FormatError("no entries");
    std::vector<index_t> d = dims ? *dims : std::vector<index_t>(order, 0);
    if (!dims)
      for (const auto &e : entries)
        for (std::size_t m = 0; m < order; m++) d[m] = std::max(d[m], e.first[m] + 1);
    index_t total = 1;
    for (auto x : d) total *= x;
    std::vector<double> data(static_cast<std::size_t>(total), 0.0);
    for (const auto &e : entries)
    {
      index_t li = 0, stride = 1;
      for (std::size_t m = 0; m < order; m++)
      {
        if (e.first[m] >= d[m]) throw FormatError("entry index out of range");
        li += e.first[m] * stride;
        stride *= d[m];
      }
      data[static_cast<std::size_t>(li)] = e.second;
    }
    return DenseTensor(std::move(d), std::move(data));
  }

  DenseTensor read_csv_entries(const std::filesystem::path &path, std::optional<std::vector<index_t>> dims)
  {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_csv_entries(is, std::move(dims));
  }

  DenseTensor generate_synthetic(std::span<const index_t> dims, index_t true_rank, double noise, std::uint64_t seed)
  {
    if (true_rank < 1) throw ConfigError("true rank must be positive");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise level must be non-negative");
    const auto m = random_model(dims, true_rank, seed);
    const DenseTensor signal = reconstruct(dims, m.factors);
    std::vector<double> data(signal.data().begin(), signal.data().end());
    if (noise > 0.0)
    {
      std::mt19937_64 gen(seed ^ 0x5bd1e995ull);
      std::normal_distribution<double> dist(0.0, 1.0);
      std::vector<double> g(data.size());
      double gnorm = 0.0;
      for (auto &v : g)
      {
        v = dist(gen);
        gnorm += v * v;
      }
      const double scale = noise * std::sqrt(signal.sqnorm()) / std::sqrt(gnorm);
      for (std::size_t i = 0; i < data.size(); i++) data[i] += scale * g[i];
    }
    return DenseTensor(std::vector<index_t>(dims.begin(), dims.end()), std::move(data));
  }

  std::vector<index_t> parse_dims(std::string_view s)
  {
    std::vector<index_t> out;
    for (auto f : split(trim(s), ",x"))
    {
      const auto v = parse_number<index_t>(f, "dimension");
      if (v < 1) throw ConfigError("dimensions must be positive");
      out.push_back(v);
    }
    if (out.size() < 2) throw ConfigError("a tensor needs at least two modes");
    return out;
  }

  std::vector<index_t> parse_ranks(std::string_view s)
  {
    s = trim(s);
    std::vector<index_t> out;
    if (auto dots = s.find(".."); dots != std::string_view::npos)
    {
      const auto lo = parse_number<index_t>(s.substr(0, dots), "rank");
      const auto hi = parse_number<index_t>(s.substr(dots + 2), "rank");
      if (lo < 1 || hi < lo) throw ConfigError("invalid rank range");
      for (index_t r = lo; r <= hi; r++) out.push_back(r);
      return out;
    }
    for (auto f : split(s, ","))
    {
      const auto v = parse_number<index_t>(f, "rank");
      if (v < 1) throw ConfigError("ranks must be positive");
      out.push_back(v);
    }
    return out;
  }

  void RunConfig::validate() const
  {
    if (ranks.empty()) throw ConfigError("no ranks given");
    for (auto r : ranks)
      if (r < 1) throw ConfigError("ranks must be positive");
    if (per_rank < 1) throw ConfigError("per_rank must be at least 1");
    driver.validate();
  }

  std::string config_to_json(const RunConfig &cfg)
  {
    const auto &d = cfg.driver;
    json j{{"tensor", cfg.tensor_path},
           {"dims", cfg.dims},
           {"ranks", cfg.ranks},
           {"per_rank", cfg.per_rank},
           {"seed", cfg.seed},
           {"mode", std::string(to_string(d.mode))},
           {"threads", d.threads},
           {"deterministic", d.deterministic},
           {"r_star", d.capacity.r_star},
           {"tol", d.als.convergence.tol},
           {"max_iterations", d.als.convergence.max_iterations},
           {"line_search", d.als.line_search.enabled},
           {"alpha_rule", d.als.line_search.rule == AlphaRule::Constant ? "constant" : "cbrt-iter"},
           {"alpha", d.als.line_search.alpha},
           {"non_negative", d.als.non_negative}};
    return j.dump(2);
  }

  RunConfig config_from_json(std::string_view text)
  {
    json j;
    try
    {
      j = json::parse(text);
    }
    catch (const json::exception &e)
    {
      throw FormatError(std::string("invalid config JSON: ") + e.what());
    }
    RunConfig cfg;
    try
    {
      cfg.tensor_path = j.value("tensor", std::string{});
      cfg.dims = j.value("dims", std::vector<index_t>{});
      cfg.ranks = j.value("ranks", std::vector<index_t>{});
      cfg.per_rank = j.value("per_rank", 1);
      cfg.seed = j.value("seed", std::uint64_t{0});
      auto &d = cfg.driver;
      d.mode = parse_execution_mode(j.value("mode", std::string("cals")));
      d.threads = j.value("threads", 1);
      d.deterministic = j.value("deterministic", false);
      d.capacity.r_star = j.value("r_star", kDefaultRStar);
      d.als.convergence.tol = j.value("tol", 1e-6);
      d.als.convergence.max_iterations = j.value("max_iterations", 1000);
      d.als.line_search.enabled = j.value("line_search", false);
      d.als.line_search.rule = j.value("alpha_rule", std::string("cbrt-iter")) == "constant" ? AlphaRule::Constant
                                                                                              : AlphaRule::CubeRootIter;
      d.als.line_search.alpha = j.value("alpha", 2.0);
      d.als.non_negative = j.value("non_negative", false);
    }
    catch (const json::exception &e)
    {
      throw FormatError(std::string("invalid config field: ") + e.what());
    }
    return cfg;
  }

  std::string results_to_json(const RunConfig &cfg, std::span<const Model> models, const RunStats &stats,
                              bool include_factors)
  {
    json jm = json::array();
    for (const auto &m : models)
    {
      json e{{"id", m.id},
             {"rank", m.rank},
             {"seed", m.seed},
             {"status", std::string(to_string(m.status))},
             {"fit", std::isfinite(m.fit) ? json(m.fit) : json(nullptr)},
             {"error", std::isfinite(m.error) ? json(m.error) : json(nullptr)},
             {"iterations", m.iterations},
             {"seconds", m.seconds},
             {"line_search_accepted", m.line_search_accepted},
             {"nnls_nonconverged", m.nnls_nonconverged}};
      if (include_factors)
      {
        json fs = json::array();
        for (const auto &f : m.factors)
        {
          // Row-major nested arrays are the most convenient shape for consumers.
          json rows = json::array();
          for (index_t i = 0; i < f.rows(); i++)
          {
            json row = json::array();
            for (index_t r = 0; r < f.cols(); r++) row.push_back(f(i, r));
            rows.push_back(std::move(row));
          }
          fs.push_back(std::move(rows));
        }
        e["factors"] = std::move(fs);
      }
      jm.push_back(std::move(e));
    }
    const auto now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json j{{"schema", "cals.results/1"},
           {"version", version()},
           {"created", stamp},
           {"config", json::parse(config_to_json(cfg))},
           {"stats",
            {{"seconds", stats.seconds},
             {"flops", stats.flops.flops},
             {"segments", stats.segments},
             {"fused_iterations", stats.fused_iterations},
             {"max_active_width", stats.max_active_width},
             {"columns_moved", stats.columns_moved}}},
           {"models", jm}};
    return j.dump(2);
  }
} // namespace cals

#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "cals/api.hpp"
#include "cals/bench.hpp"
#include "cals/error.hpp"
#include "cals/io.hpp"
#include "oracles.hpp"

using namespace cals;

TEST(Bench, TppTable)
{
  EXPECT_EQ(tpp({3.5, 1, 8, 2}), 112.0);
  EXPECT_NEAR(tpp({2.6, 12, 8, 2}), 998.4, 1e-9);
  EXPECT_THROW(tpp({0.0, 1, 8, 2}), ConfigError);
  EXPECT_THROW(tpp({1.0, 0, 8, 2}), ConfigError);
  EXPECT_EQ(reference_tpp(1).freq_ghz, 3.5);
  EXPECT_EQ(reference_tpp(12).freq_ghz, 2.6);
}

TEST(Bench, Efficiency)
{
  EXPECT_DOUBLE_EQ(efficiency(FlopCount{112'000'000'000ull}, 2.0, 112.0), 0.5);
  EXPECT_EQ(efficiency(FlopCount{1}, 0.0, 1.0), 0.0);
}

TEST(Bench, MttkrpSweepShape)
{
  const auto t = oracle::random_tensor({12, 10, 8}, 1);
  const std::vector<index_t> widths{1, 4};
  const auto recs = bench_mttkrp_sweep(t, widths, 1, 2, TppModel{3.0, 1, 8, 2});
  ASSERT_EQ(recs.size(), widths.size() * 4);
  for (const auto &r : recs)
  {
    EXPECT_GT(r.seconds, 0.0);
    EXPECT_GT(r.efficiency, 0.0);
    EXPECT_EQ(r.reps, 2);
  }
  EXPECT_EQ(recs[3].label, "all-modes");
  EXPECT_EQ(recs[3].flops.flops, 3 * mttkrp_flops(t.dims(), 1).flops);
  EXPECT_TRUE(bench_mttkrp_sweep(t, widths, 1, 0, TppModel{3.0, 1, 8, 2}).empty());

  std::ostringstream csv;
  write_records_csv(csv, recs);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
  const auto j = nlohmann::json::parse(records_to_json(recs));
  EXPECT_EQ(j["records"].size(), 8u);
}

TEST(Bench, SpeedupReport)
{
  const auto t = generate_synthetic(std::vector<index_t>{10, 10, 10}, 2, 0.0, 1);
  const std::vector<index_t> ranks{1, 2};
  const auto rep = bench_speedup(t, ranks, 3, 2, 1, 5);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto &r : rep.rows)
  {
    EXPECT_GT(r.als_seconds, 0.0);
    EXPECT_GT(r.cals_seconds, 0.0);
    EXPECT_DOUBLE_EQ(r.speedup, r.als_seconds / r.cals_seconds);
  }
  EXPECT_NEAR(rep.geometric_mean, std::sqrt(rep.rows[0].speedup * rep.rows[1].speedup), 1e-12);
  const auto j = nlohmann::json::parse(speedup_to_json(rep));
  EXPECT_EQ(j["rows"].size(), 2u);
}

TEST(Bench, EfficiencyTrace)
{
  const auto t = generate_synthetic(std::vector<index_t>{8, 8, 8}, 2, 0.0, 1);
  const std::vector<index_t> ranks{1, 2, 3};
  const TppModel tpp_model{3.0, 1, 8, 2};

  auto trace = bench_efficiency_trace(t, make_starting_points(t.dims(), ranks, 2, 1), ExecutionMode::SequentialAls,
                                      3, 1, tpp_model);
  ASSERT_EQ(trace.segments.size(), 6u);
  EXPECT_EQ(trace.transitions.size(), 2u);
  EXPECT_DOUBLE_EQ(trace.segments.back().progress_fraction, 1.0);
  for (std::size_t i = 1; i < trace.segments.size(); i++)
    EXPECT_GE(trace.segments[i].progress_fraction, trace.segments[i - 1].progress_fraction);

  trace = bench_efficiency_trace(t, make_starting_points(t.dims(), ranks, 2, 1), ExecutionMode::Cals, 3, 1,
                                 tpp_model);
  ASSERT_EQ(trace.segments.size(), 3u);
  EXPECT_EQ(trace.segments.front().width, 12);
  const auto band = bench_gemm_reference(16, 5, 1, tpp_model);
  EXPECT_EQ(band.samples, 5);
  EXPECT_GT(band.median, 0.0);
  const auto j = nlohmann::json::parse(trace_to_json(trace, &band));
  EXPECT_EQ(j["gemm_reference"]["p"], 16);
}

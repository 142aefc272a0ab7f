#include <gtest/gtest.h>

#include "cals/api.hpp"
#include "cals/error.hpp"
#include "cals/io.hpp"
#include "oracles.hpp"

using namespace cals;

TEST(Api, StartingPointsAreDeterministic)
{
  const std::vector<index_t> dims{4, 3, 2}, ranks{1, 3};
  const auto a = make_starting_points(dims, ranks, 2, 7);
  const auto b = make_starting_points(dims, ranks, 2, 7);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < a.size(); k++)
  {
    EXPECT_EQ(a[k].id, k);
    EXPECT_EQ(a[k].factors, b[k].factors);
  }
  EXPECT_EQ(a[2].rank, 3);
  EXPECT_NE(a[0].seed, a[1].seed);
  EXPECT_NE(a[0].factors, make_starting_points(dims, ranks, 2, 8)[0].factors);
  EXPECT_THROW(make_starting_points(dims, std::vector<index_t>{0}, 1, 1), ConfigError);
}

TEST(Api, RowMajorBufferIsConverted)
{
  // C-order 2×3: element (i, j) at i*3 + j.
  const std::vector<double> c{0, 1, 2, 10, 11, 12};
  const std::vector<index_t> dims{2, 3};
  const auto t = tensor_from_buffer(c, dims, true);
  for (index_t i = 0; i < 2; i++)
    for (index_t j = 0; j < 3; j++) EXPECT_EQ(t.at(std::vector<index_t>{i, j}), 10.0 * i + j);
  const auto f = tensor_from_buffer(c, dims, false);
  EXPECT_EQ(f.at(std::vector<index_t>{1, 0}), 1.0);

  std::vector<double> c3(24);
  for (int i = 0; i < 24; i++) c3[i] = i;
  const auto t3 = tensor_from_buffer(c3, std::vector<index_t>{2, 3, 4}, true);
  EXPECT_EQ(t3.at(std::vector<index_t>{1, 2, 3}), 1 * 12 + 2 * 4 + 3);
  EXPECT_THROW(tensor_from_buffer(c3, std::vector<index_t>{2, 3}, true), DimensionError);
}

TEST(Api, CpCalsOptionsAreHonoured)
{
  const auto t = generate_synthetic(std::vector<index_t>{6, 5, 4}, 2, 0.05, 3);
  const std::vector<index_t> ranks{1, 2, 3};
  CpOptions o;
  o.tol = 0.0;
  o.max_iterations = 7;
  o.non_negative = true;
  o.seed = 11;
  const auto models = cp_cals(t, ranks, 2, o);
  ASSERT_EQ(models.size(), 6u);
  for (std::size_t k = 0; k < models.size(); k++)
  {
    EXPECT_EQ(models[k].id, k);
    EXPECT_EQ(models[k].iterations, 7);
    for (const auto &f : models[k].factors)
      for (auto v : f.data()) EXPECT_GE(v, 0.0);
  }
  const auto again = cp_cals(t, ranks, 2, o);
  for (std::size_t k = 0; k < models.size(); k++) EXPECT_EQ(models[k].fit, again[k].fit);
  EXPECT_FALSE(version().empty());
}

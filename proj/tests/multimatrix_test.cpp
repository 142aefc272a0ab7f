#include <gtest/gtest.h>

#include <cstring>
#include <map>

#include "cals/error.hpp"
#include "cals/multimatrix.hpp"
#include "oracles.hpp"

using namespace cals;

namespace
{
  Model make_model(InstanceId id, index_t rank, const std::vector<index_t> &dims, std::mt19937_64 &gen)
  {
    Model m;
    m.id = id;
    m.rank = rank;
    m.factors = oracle::random_factors(dims, rank, gen);
    return m;
  }

  bool bitwise_equal(ConstMatrixView a, const Matrix &b)
  {
    if (a.rows != b.rows() || a.cols != b.cols()) return false;
    for (index_t j = 0; j < a.cols; j++)
      if (std::memcmp(a.col(j).data(), b.view().col(j).data(), sizeof(double) * a.rows) != 0) return false;
    return true;
  }
} // namespace

TEST(MultiMatrix, AppendRemoveCompress)
{
  MultiMatrix mm(3, 10);
  std::mt19937_64 gen(1);
  const auto a = oracle::random_matrix(3, 4, gen);
  const auto b = oracle::random_matrix(3, 2, gen);
  const auto c = oracle::random_matrix(3, 5, gen);
  EXPECT_TRUE(mm.append(1, a));
  EXPECT_TRUE(mm.append(2, b));
  EXPECT_FALSE(mm.append(3, c)); // 6 + 5 > 10
  EXPECT_EQ(mm.active_width(), 6);
  const double *buf = mm.buffer();
  EXPECT_EQ(mm.remove(1), a);
  EXPECT_FALSE(mm.is_compact());
  EXPECT_EQ(mm.end_column(), 6);
  EXPECT_EQ(mm.compress(), 2);
  EXPECT_TRUE(mm.is_compact());
  EXPECT_EQ(mm.layout().front(), (Constituent{2, 0, 2}));
  EXPECT_TRUE(bitwise_equal(mm.constituent(2), b));
  EXPECT_TRUE(mm.append(3, c));
  EXPECT_EQ(mm.buffer(), buf);
  EXPECT_THROW((void)mm.remove(42), ConfigError);
}

TEST(MultiMatrixSet, CapacityRules)
{
  const std::vector<index_t> dims{4, 3, 2};
  std::mt19937_64 gen(2);
  MultiMatrixSet set(dims, CapacityPolicy{5});
  EXPECT_TRUE(set.try_insert(make_model(0, 3, dims, gen)));
  EXPECT_FALSE(set.try_insert(make_model(1, 3, dims, gen)));
  EXPECT_EQ(set.size(), 1u);
  EXPECT_THROW((void)set.try_insert(make_model(2, 6, dims, gen)), ConfigError);
  EXPECT_TRUE(set.try_insert(make_model(3, 2, dims, gen)));
  EXPECT_EQ(set.active_width(), 5);
  EXPECT_THROW((void)set.try_insert(make_model(3, 0, dims, gen)), ConfigError);
}

TEST(MultiMatrixSet, FuzzPreservesLayoutAndContent)
{
  const std::vector<index_t> dims{5, 3, 4};
  std::mt19937_64 gen(77);
  MultiMatrixSet set(dims, CapacityPolicy{24});
  std::map<InstanceId, Model> shadow;
  InstanceId next = 0;
  std::uniform_int_distribution<int> op(0, 2), rank(1, 7);
  for (int step = 0; step < 1000; step++)
  {
    switch (op(gen))
    {
    case 0: {
      auto m = make_model(next++, rank(gen), dims, gen);
      const bool fits = set.active_width() + m.rank <= 24;
      ASSERT_EQ(set.try_insert(m), fits);
      if (fits) shadow.emplace(m.id, std::move(m));
      break;
    }
    case 1:
      if (!shadow.empty())
      {
        auto it = shadow.begin();
        std::advance(it, std::uniform_int_distribution<std::size_t>(0, shadow.size() - 1)(gen));
        const auto out = set.remove(it->first);
        ASSERT_EQ(out.size(), dims.size());
        for (std::size_t n = 0; n < dims.size(); n++) ASSERT_TRUE(bitwise_equal(out[n], it->second.factors[n]));
        shadow.erase(it);
      }
      break;
    default: set.compress(); ASSERT_TRUE(set.mode(0).is_compact());
    }

    index_t width = 0;
    for (const auto &[id, m] : shadow) width += m.rank;
    ASSERT_EQ(set.active_width(), width);
    ASSERT_EQ(set.size(), shadow.size());
    for (index_t n = 0; n < set.order(); n++)
    {
      const auto &mm = set.mode(n);
      ASSERT_EQ(mm.layout(), set.layout());
      index_t end = 0;
      for (const auto &c : mm.layout())
      {
        ASSERT_GE(c.offset, end);
        end = c.offset + c.rank;
        ASSERT_LE(end, 24);
        ASSERT_TRUE(bitwise_equal(mm.constituent(c.id), shadow.at(c.id).factors[n]));
      }
    }
  }
}

#include <gtest/gtest.h>

#include "cals/error.hpp"
#include "cals/multimatrix.hpp"
#include "cals/mttkrp.hpp"
#include "oracles.hpp"

using namespace cals;

namespace
{
  constexpr MttkrpVariant kAll[] = {MttkrpVariant::ExplicitKrpGemm, MttkrpVariant::FirstModeGemm,
                                    MttkrpVariant::LastModeGemm, MttkrpVariant::MiddleModeSliceGemm};

  const std::vector<std::vector<index_t>> kShapes = {{2, 3}, {5, 1}, {4, 3, 2}, {1, 6, 3}, {3, 1, 4},
                                                     {2, 3, 2, 2}, {8, 8, 8}, {2, 2, 2, 2, 2}};
} // namespace

TEST(Mttkrp, EveryValidVariantMatchesOracle)
{
  std::mt19937_64 gen(21);
  for (const auto &dims : kShapes)
  {
    const auto t = oracle::random_tensor(dims, gen());
    for (index_t w : {1, 3, 8})
    {
      const auto f = oracle::random_factors(dims, w, gen);
      MttkrpWorkspace ws(dims, w);
      for (index_t n = 0; n < t.order(); n++)
      {
        const auto ref = oracle::mttkrp(t, f, n);
        for (auto v : kAll)
        {
          if (!variant_valid(t.order(), n, v)) continue;
          const auto got = mttkrp(t, f, n, v, ws);
          EXPECT_LE(oracle::rel_diff(got, ref), 1e-12) << to_string(v) << " mode " << n << " w " << w;
        }
      }
      EXPECT_EQ(ws.permuted_copies(), 0u);
    }
  }
}

TEST(Mttkrp, InvalidVariantIsRejected)
{
  const auto t = oracle::random_tensor({3, 4, 5}, 1);
  std::mt19937_64 gen(1);
  const auto f = oracle::random_factors(t.dims(), 2, gen);
  MttkrpWorkspace ws(t.dims(), 2);
  EXPECT_THROW(mttkrp(t, f, 1, MttkrpVariant::FirstModeGemm, ws), ConfigError);
  EXPECT_THROW(mttkrp(t, f, 0, MttkrpVariant::MiddleModeSliceGemm, ws), ConfigError);
  EXPECT_THROW(mttkrp(t, f, 3, MttkrpVariant::ExplicitKrpGemm, ws), DimensionError);
  MttkrpWorkspace narrow(t.dims(), 1);
  EXPECT_THROW(mttkrp(t, f, 0, MttkrpVariant::FirstModeGemm, narrow), ConfigError);
}

TEST(Mttkrp, SelectVariantTable)
{
  const std::vector<index_t> d3{4, 4, 4}, d2{4, 4}, d4{2, 2, 2, 2};
  EXPECT_EQ(select_variant(d3, 0, 5), MttkrpVariant::FirstModeGemm);
  EXPECT_EQ(select_variant(d3, 1, 5), MttkrpVariant::MiddleModeSliceGemm);
  EXPECT_EQ(select_variant(d3, 2, 5), MttkrpVariant::LastModeGemm);
  EXPECT_EQ(select_variant(d2, 1, 5), MttkrpVariant::LastModeGemm);
  EXPECT_EQ(select_variant(d4, 2, 5), MttkrpVariant::ExplicitKrpGemm);
  for (index_t n = 0; n < 4; n++) EXPECT_TRUE(variant_valid(4, n, select_variant(d4, n, 1)));
}

TEST(Mttkrp, FlopModel)
{
  const std::vector<index_t> d{10, 20, 30};
  EXPECT_EQ(mttkrp_flops(d, 7).flops, 2u * 7u * 6000u);
  const auto t = oracle::random_tensor(d, 2);
  std::mt19937_64 gen(2);
  const auto f = oracle::random_factors(d, 7, gen);
  MttkrpWorkspace ws(d, 7);
  (void)mttkrp(t, f, 1, MttkrpVariant::MiddleModeSliceGemm, ws);
  (void)mttkrp(t, f, 2, MttkrpVariant::LastModeGemm, ws);
  EXPECT_EQ(ws.flops().flops, 2u * 2u * 7u * 6000u);
}

TEST(Mttkrp, FusedBlocksEqualIndividualResults)
{
  std::mt19937_64 gen(33);
  const std::vector<index_t> dims{6, 5, 4};
  const auto t = oracle::random_tensor(dims, 4);
  const std::vector<index_t> ranks{3, 1, 4, 2};
  std::vector<std::vector<Matrix>> models;
  MultiMatrixSet set(dims, CapacityPolicy{10});
  for (std::size_t k = 0; k < ranks.size(); k++)
  {
    Model m;
    m.id = k;
    m.rank = ranks[k];
    m.factors = oracle::random_factors(dims, ranks[k], gen);
    models.push_back(m.factors);
    ASSERT_TRUE(set.try_insert(m));
  }
  MttkrpWorkspace ws(dims, 10);
  MttkrpWorkspace single(dims, 4);
  for (index_t n = 0; n < 3; n++)
  {
    const MatrixView fused = fused_mttkrp(t, set.modes(), n, ws);
    for (std::size_t k = 0; k < ranks.size(); k++)
    {
      const auto &c = set.layout()[k];
      const auto ref = mttkrp(t, models[k], n, select_variant(dims, n, ranks[k]), single);
      for (index_t j = 0; j < c.rank; j++)
        for (index_t i = 0; i < dims[n]; i++) EXPECT_LE(std::abs(fused(i, c.offset + j) - ref(i, j)), 1e-13);
    }
  }
}

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <new>

#include "cals/mttkrp.hpp"
#include "oracles.hpp"

namespace
{
  std::atomic<long> g_allocations{0};
}

void *operator new(std::size_t n)
{
  g_allocations++;
  if (void *p = std::malloc(n ? n : 1)) return p;
  throw std::bad_alloc();
}
void operator delete(void *p) noexcept { std::free(p); }
void operator delete(void *p, std::size_t) noexcept { std::free(p); }

using namespace cals;

TEST(Alloc, MttkrpIntoDoesNotAllocate)
{
  const std::vector<index_t> dims{6, 5, 4};
  const auto t = oracle::random_tensor(dims, 3);
  std::mt19937_64 gen(3);
  const auto f = oracle::random_factors(dims, 4, gen);
  std::vector<ConstMatrixView> views(f.begin(), f.end());
  MttkrpWorkspace ws(dims, 4);
  for (index_t n = 0; n < 3; n++)
  {
    const auto out = ws.output(n, 4);
    mttkrp_into(t, views, n, select_variant(dims, n, 4), ws, out); // warm up the BLAS
    const long before = g_allocations.load();
    for (auto v : {MttkrpVariant::ExplicitKrpGemm, select_variant(dims, n, 4)})
      mttkrp_into(t, views, n, v, ws, out);
    EXPECT_EQ(g_allocations.load() - before, 0) << "mode " << n;
  }
}

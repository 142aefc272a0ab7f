#include <gtest/gtest.h>

#include "cals/error.hpp"
#include "cals/tensor.hpp"
#include "oracles.hpp"

using namespace cals;

TEST(Tensor, LayoutIsModeZeroFastest)
{
  std::vector<double> data(24);
  for (int i = 0; i < 24; i++) data[i] = i;
  DenseTensor t({2, 3, 4}, data);
  const std::vector<index_t> idx{1, 2, 3};
  EXPECT_EQ(t.linear_index(idx), 1 + 2 * 2 + 3 * 6);
  EXPECT_DOUBLE_EQ(t.at(idx), 23.0);
  EXPECT_EQ(t.leading_size(1), 2);
  EXPECT_EQ(t.trailing_size(1), 4);
  EXPECT_DOUBLE_EQ(t.sqnorm(), 23.0 * 24.0 * 47.0 / 6.0);
}

TEST(Tensor, RejectsBadShapes)
{
  EXPECT_THROW(DenseTensor({4}, std::vector<double>(4)), DimensionError);
  EXPECT_THROW(DenseTensor({2, 0}, {}), DimensionError);
  EXPECT_THROW(DenseTensor({2, 2}, std::vector<double>(3)), DimensionError);
  DenseTensor t({2, 2}, std::vector<double>(4));
  const std::vector<index_t> bad{2, 0};
  EXPECT_THROW((void)t.at(bad), DimensionError);
}

TEST(Tensor, UnfoldingViewMatchesExplicitUnfolding)
{
  const auto t = oracle::random_tensor({3, 4, 2, 5}, 11);
  for (index_t n = 0; n < t.order(); n++)
  {
    const auto ref = oracle::unfold(t, n);
    const auto u = unfold_view(t, n);
    ASSERT_EQ(u.rows(), ref.rows());
    ASSERT_EQ(u.cols(), ref.cols());
    for (index_t c = 0; c < u.cols(); c++)
      for (index_t r = 0; r < u.rows(); r++) EXPECT_EQ(u(r, c), ref(r, c));
  }
  const auto u0 = unfold_view(t, 0).as_matrix();
  ASSERT_TRUE(u0.has_value());
  EXPECT_EQ(u0->data, t.data().data());
  EXPECT_FALSE(unfold_view(t, 1).as_matrix().has_value());
  const auto ul = unfold_view(t, 3).as_transposed_matrix();
  ASSERT_TRUE(ul.has_value());
  EXPECT_EQ(ul->rows, 24);
  EXPECT_EQ(ul->cols, 5);
}

TEST(Tensor, KhatriRaoMatchesKroneckerColumns)
{
  std::mt19937_64 gen(3);
  const auto a = oracle::random_matrix(3, 4, gen);
  const auto b = oracle::random_matrix(5, 4, gen);
  const auto k = khatri_rao(a, b);
  ASSERT_EQ(k.rows(), 15);
  for (index_t j = 0; j < 4; j++)
    for (index_t i = 0; i < 3; i++)
      for (index_t l = 0; l < 5; l++) EXPECT_DOUBLE_EQ(k(i * 5 + l, j), a(i, j) * b(l, j));
}

TEST(Tensor, KhatriRaoExceptMatchesOracle)
{
  std::mt19937_64 gen(5);
  const std::vector<index_t> dims{3, 2, 4, 3};
  const auto f = oracle::random_factors(dims, 3, gen);
  std::vector<ConstMatrixView> views(f.begin(), f.end());
  for (index_t n = 0; n < 4; n++)
  {
    const auto ref = oracle::krp_except(f, n);
    Matrix out(ref.rows(), ref.cols());
    khatri_rao_except_into(views, n, out.view());
    EXPECT_LE(oracle::rel_diff(out, ref), 1e-15);
  }
}

TEST(Tensor, GramianIsSymmetric)
{
  std::mt19937_64 gen(9);
  const auto a = oracle::random_matrix(17, 6, gen);
  const auto g = gramian(a);
  const auto ref = oracle::matmul(a.transpose(), a);
  EXPECT_LE(oracle::rel_diff(g, ref), 1e-14);
  for (index_t i = 0; i < 6; i++)
    for (index_t j = 0; j < 6; j++) EXPECT_EQ(g(i, j), g(j, i));
}

TEST(Tensor, HadamardAndReductions)
{
  const auto a = Matrix::from_rows({{1, 2}, {3, 4}});
  const auto b = Matrix::from_rows({{2, 0}, {1, -1}});
  const auto h = hadamard(a, b);
  EXPECT_EQ(h, Matrix::from_rows({{2, 0}, {3, -4}}));
  EXPECT_DOUBLE_EQ(inner_product(a, b), 1.0);
  EXPECT_DOUBLE_EQ(sum_all(a), 10.0);
  EXPECT_THROW(hadamard(a, Matrix(3, 2)), DimensionError);
}

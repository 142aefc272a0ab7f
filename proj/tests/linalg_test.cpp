#include <gtest/gtest.h>

#include "cals/als.hpp"
#include "cals/error.hpp"
#include "cals/linalg.hpp"
#include "oracles.hpp"

using namespace cals;

TEST(Linalg, CholeskySolveMatchesInverse)
{
  std::mt19937_64 gen(4);
  const auto a = oracle::random_matrix(30, 5, gen);
  const auto h = gramian(a);
  const auto m = oracle::random_matrix(12, 5, gen);
  Matrix out(12, 5);
  EXPECT_EQ(solve_normal_equations(m, h, out.view()), SolveMethod::Cholesky);
  // out·h must reproduce m
  EXPECT_LE(oracle::rel_diff(oracle::matmul(out, h), m), 1e-12);
}

TEST(Linalg, OutputMayAliasInput)
{
  std::mt19937_64 gen(5);
  const auto h = gramian(oracle::random_matrix(20, 4, gen));
  auto m = oracle::random_matrix(7, 4, gen);
  const Matrix copy = m;
  solve_normal_equations(m, h, m.view());
  EXPECT_LE(oracle::rel_diff(oracle::matmul(m, h), copy), 1e-12);
}

TEST(Linalg, SingularGramianUsesMinimumNormSolution)
{
  const auto h = Matrix::from_rows({{1, 1}, {1, 1}});
  const auto m = Matrix::from_rows({{2, 2}});
  Matrix out(1, 2);
  EXPECT_EQ(solve_normal_equations(m, h, out.view()), SolveMethod::PseudoInverse);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(out(0, 1), 1.0, 1e-12);
}

TEST(Linalg, UpdateFactorIdentityGramian)
{
  const auto m = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(update_factor(m, Matrix::identity(2)), m);
}

TEST(Linalg, NonFiniteInputIsANumericalError)
{
  auto h = Matrix::identity(2);
  h(0, 1) = std::nan("");
  Matrix out(1, 2);
  EXPECT_THROW(solve_normal_equations(Matrix(1, 2, 1.0), h, out.view()), NumericalError);
}

TEST(Linalg, PseudoInverseProperties)
{
  std::mt19937_64 gen(8);
  const auto a = oracle::random_matrix(6, 3, gen);
  // rank-3 PSD 5×5 matrix
  Matrix b(3, 5);
  for (index_t j = 0; j < 5; j++)
    for (index_t i = 0; i < 3; i++) b(i, j) = a(i, 0) * (j + 1) + a(i, 1) * j * j - a(i, 2);
  const auto h = gramian(b);
  const auto p = symmetric_pseudo_inverse(h);
  const auto hph = oracle::matmul(oracle::matmul(h, p), h);
  EXPECT_LE(oracle::rel_diff(hph, h), 1e-8);
}

TEST(Linalg, ScopedBlasThreadsRestores)
{
  const int before = blas_threads();
  {
    ScopedBlasThreads s(1);
    EXPECT_EQ(blas_threads(), 1);
  }
  EXPECT_EQ(blas_threads(), before);
}

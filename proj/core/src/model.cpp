#include "cals/model.hpp"

#include <string>

#include "blas.hpp"
#include "cals/error.hpp"

namespace cals
{
  std::string_view to_string(ModelStatus s)
  {
    switch (s)
    {
    case ModelStatus::Pending: return "pending";
    case ModelStatus::Active: return "active";
    case ModelStatus::Converged: return "converged";
    case ModelStatus::IterationCapReached: return "iteration_cap_reached";
    case ModelStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
  }

  std::vector<ConstMatrixView> Model::views() const
  {
    return {factors.begin(), factors.end()};
  }

  void Model::check_conforms(std::span<const index_t> dims) const
  {
    if (factors.size() != dims.size())
      throw DimensionError("model " + std::to_string(id) + " has " + std::to_string(factors.size()) +
                           " factors for an order-" + std::to_string(dims.size()) + " tensor");
    if (rank < 1) throw ConfigError("model " + std::to_string(id) + " has rank < 1");
    for (std::size_t n = 0; n < dims.size(); n++)
      if (factors[n].rows() != dims[n] || factors[n].cols() != rank)
        throw DimensionError("model " + std::to_string(id) + ": factor " + std::to_string(n) + " is " +
                             std::to_string(factors[n].rows()) + "x" + std::to_string(factors[n].cols()) +
                             ", expected " + std::to_string(dims[n]) + "x" + std::to_string(rank));
  }

  Model random_model(std::span<const index_t> dims, index_t rank, std::uint64_t seed, InstanceId id)
  {
    if (rank < 1) throw ConfigError("rank must be at least 1");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Model m;
    m.id = id;
    m.rank = rank;
    m.seed = seed;
    for (auto d : dims)
    {
      Matrix f(d, rank);
      for (auto &v : f.data()) v = dist(gen);
      m.factors.push_back(std::move(f));
    }
    return m;
  }

  DenseTensor reconstruct(std::span<const index_t> dims, std::span<const Matrix> factors)
  {
    if (factors.size() != dims.size() || dims.size() < 2) throw DimensionError("reconstruct: factor count mismatch");
    std::vector<ConstMatrixView> views(factors.begin(), factors.end());
    const index_t rank = factors.front().cols();
    // T_(0) = A_0 · (A_{N-1} ⊙ … ⊙ A_1)ᵀ, and T_(0) is the raw data layout.
    index_t rest = 1;
    for (std::size_t n = 1; n < dims.size(); n++) rest *= dims[n];
    Matrix krp(rest, rank);
    khatri_rao_except_into(views, 0, krp.view());
    std::vector<double> data(static_cast<std::size_t>(dims[0] * rest));
    blas::gemm(false, true, dims[0], rest, rank, 1.0, factors[0].data().data(), std::max<index_t>(dims[0], 1),
               krp.data().data(), std::max<index_t>(rest, 1), 0.0, data.data(), std::max<index_t>(dims[0], 1));
    return {std::vector<index_t>(dims.begin(), dims.end()), std::move(data)};
  }
} // namespace cals

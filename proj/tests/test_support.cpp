#include "test_support.hpp"

#include <algorithm>
#include <cmath>

namespace layertess::testing {

Dense random_dense(std::mt19937_64& gen, int rows, int cols, double density, double lo, double hi)
{
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> value(lo, hi);
  Dense d(rows, std::vector<double>(cols, 0.0));
  for (auto& row : d)
    for (double& x : row)
      if (coin(gen) < density)
        x = value(gen);
  return d;
}

Dense dense_multiply(const Dense& a, const Dense& b)
{
  const std::size_t n = a.size();
  const std::size_t m = b.empty() ? 0 : b[0].size();
  Dense c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < m; ++j)
        c[i][j] += a[i][k] * b[k][j];
  return c;
}

double max_relative_error(const Dense& a, const Dense& b)
{
  double scale = 1.0;
  for (const auto& row : b)
    for (const double x : row)
      scale = std::max(scale, std::abs(x));
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      err = std::max(err, std::abs(a[i][j] - b[i][j]));
  return err / scale;
}

std::vector<Index> uniform_seeds(const TriMesh& mesh, std::size_t count, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Index> pick(0, mesh.n_vertices() - 1);
  std::vector<Index> seeds;
  while (seeds.size() < count) {
    const Index v = pick(gen);
    if (std::find(seeds.begin(), seeds.end(), v) == seeds.end())
      seeds.push_back(v);
  }
  return seeds;
}

} // namespace layertess::testing

#pragma once

#include "layertess/mesh.hpp"
#include "layertess/sparse.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace layertess::testing {

using Dense = std::vector<std::vector<double>>;

/// Random dense matrix with the given fill density and values in [lo, hi].
Dense random_dense(std::mt19937_64& gen, int rows, int cols, double density, double lo = -1.0,
                   double hi = 1.0);
Dense dense_multiply(const Dense& a, const Dense& b);
/// Largest |a - b| divided by max(1, largest |b|).
double max_relative_error(const Dense& a, const Dense& b);

/// `count` distinct vertices chosen uniformly.
std::vector<Index> uniform_seeds(const TriMesh& mesh, std::size_t count, std::uint64_t seed);

} // namespace layertess::testing

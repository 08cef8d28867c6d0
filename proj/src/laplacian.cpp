#include "layertess/error.hpp"
#include "layertess/mesh.hpp"

#include <algorithm>
#include <map>

namespace layertess {

namespace {

double cotangent(const Vec3& apex, const Vec3& a, const Vec3& b)
{
  const Vec3 u = a - apex;
  const Vec3 v = b - apex;
  const double s = norm(cross(u, v));
  return s > 0.0 ? dot(u, v) / s : 0.0;
}

// Rows with diagonal -1 and off-diagonal weights normalized to sum 1.
SparseMat assemble(Index nv, const std::vector<std::map<Index, double>>& weights)
{
  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index i = 0; i < nv; ++i) {
    double total = 0.0;
    for (const auto& [j, w] : weights[i])
      total += w;
    if (!(total > 0.0))
      throw Error("isolated-vertex", "vertex " + std::to_string(i) + " has no weighted neighbor");
    entries.emplace_back(i, i, -1.0);
    for (const auto& [j, w] : weights[i])
      entries.emplace_back(i, j, w / total);
  }
  return SparseMat::from_triplets(nv, nv, entries);
}

} // namespace

Laplacian build_laplacian(const TriMesh& mesh, LaplacianScheme scheme)
{
  const Index nv = mesh.n_vertices();
  std::vector<std::map<Index, double>> weights(nv);

  if (scheme == LaplacianScheme::uniform) {
    const auto nbrs = mesh.vertex_neighbors();
    for (Index i = 0; i < nv; ++i)
      for (Index j : nbrs[i])
        weights[i][j] = 1.0;
  } else {
    std::map<std::array<Index, 2>, double> cot;
    for (Index f = 0; f < mesh.n_faces(); ++f) {
      const auto p = mesh.corners(f);
      const Face& t = mesh.faces[f];
      for (int k = 0; k < 3; ++k) {
        const Index a = t[(k + 1) % 3];
        const Index b = t[(k + 2) % 3];
        cot[{std::min(a, b), std::max(a, b)}] += 0.5 * cotangent(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
      }
    }
    for (const auto& [e, w] : cot) {
      if (w <= 0.0)
        continue;
      weights[e[0]][e[1]] = w;
      weights[e[1]][e[0]] = w;
    }
  }

  Laplacian lap;
  lap.scheme = scheme;
  lap.L = assemble(nv, weights);
  lap.Lt = transpose(lap.L);
  return lap;
}

} // namespace layertess

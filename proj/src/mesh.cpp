#include "layertess/mesh.hpp"

#include "layertess/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace layertess {

Vec3 TriMesh::min_image(const Vec3& d) const
{
  if (!periodic)
    return d;
  // Fractional coordinates in the (u, v) lattice basis, xy-plane only.
  const double det = period_u.x * period_v.y - period_u.y * period_v.x;
  const double a = (d.x * period_v.y - d.y * period_v.x) / det;
  const double b = (period_u.x * d.y - period_u.y * d.x) / det;
  const double ra = std::round(a);
  const double rb = std::round(b);
  Vec3 best = d;
  double best_len = std::numeric_limits<double>::infinity();
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const Vec3 cand = d - (ra + i) * period_u - (rb + j) * period_v;
      const double len = cand.x * cand.x + cand.y * cand.y;
      if (len < best_len) {
        best_len = len;
        best = cand;
      }
    }
  }
  return best;
}

Vec3 TriMesh::unwrap(Index v, const Vec3& anchor) const
{
  return anchor + min_image(positions[v] - anchor);
}

std::array<Vec3, 3> TriMesh::corners(Index f) const
{
  return corners(f, positions[faces[f][0]]);
}

std::array<Vec3, 3> TriMesh::corners(Index f, const Vec3& anchor) const
{
  const Face& t = faces[f];
  if (!periodic)
    return {positions[t[0]], positions[t[1]], positions[t[2]]};
  const Vec3 p0 = unwrap(t[0], anchor);
  return {p0, unwrap(t[1], p0), unwrap(t[2], p0)};
}

Vec3 TriMesh::wrap_point(const Vec3& p) const
{
  if (!periodic)
    return p;
  const double det = period_u.x * period_v.y - period_u.y * period_v.x;
  const double a = (p.x * period_v.y - p.y * period_v.x) / det;
  const double b = (period_u.x * p.y - period_u.y * p.x) / det;
  return p - std::floor(a) * period_u - std::floor(b) * period_v;
}

double TriMesh::diagonal() const
{
  if (periodic)
    return norm(period_u + period_v);
  if (positions.empty())
    return 0.0;
  Vec3 lo = positions.front();
  Vec3 hi = positions.front();
  for (const Vec3& p : positions) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  return distance(lo, hi);
}

double TriMesh::mean_edge_length() const
{
  const auto e = edges();
  if (e.empty())
    return 0.0;
  double sum = 0.0;
  for (const auto& [a, b] : e)
    sum += norm(min_image(positions[b] - positions[a]));
  return sum / static_cast<double>(e.size());
}

double TriMesh::total_area() const
{
  double sum = 0.0;
  for (double a : face_area)
    sum += a;
  return sum;
}

std::vector<std::vector<Index>> TriMesh::vertex_neighbors() const
{
  std::vector<std::vector<Index>> nbrs(positions.size());
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      nbrs[f[k]].push_back(f[(k + 1) % 3]);
      nbrs[f[k]].push_back(f[(k + 2) % 3]);
    }
  }
  for (auto& n : nbrs) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nbrs;
}

std::vector<std::array<Index, 2>> TriMesh::edges() const
{
  std::vector<std::array<Index, 2>> e;
  e.reserve(faces.size() * 3);
  for (const Face& f : faces)
    for (int k = 0; k < 3; ++k)
      e.push_back({std::min(f[k], f[(k + 1) % 3]), std::max(f[k], f[(k + 1) % 3])});
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

long TriMesh::euler_characteristic() const
{
  return static_cast<long>(positions.size()) - static_cast<long>(edges().size()) +
         static_cast<long>(faces.size());
}

namespace {

void finalize(TriMesh& mesh)
{
  const Index nv = mesh.n_vertices();
  const Index nf = mesh.n_faces();
  for (Index f = 0; f < nf; ++f) {
    const Face& t = mesh.faces[f];
    for (Index v : t)
      if (v < 0 || v >= nv)
        throw Error("parse", "face " + std::to_string(f) + " references missing vertex " +
                                 std::to_string(v));
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw Error("degenerate-face", "face " + std::to_string(f) + " repeats a vertex");
  }

  mesh.face_area.assign(nf, 0.0);
  mesh.face_normal.assign(nf, Vec3{});
  mesh.vertex_area.assign(nv, 0.0);
  for (Index f = 0; f < nf; ++f) {
    const auto [a, b, c] = mesh.corners(f);
    const Vec3 n = cross(b - a, c - a);
    const double len = norm(n);
    mesh.face_area[f] = 0.5 * len;
    mesh.face_normal[f] = len > 0.0 ? n / len : Vec3{};
    for (Index v : mesh.faces[f])
      mesh.vertex_area[v] += mesh.face_area[f] / 3.0;
  }

  SparseMat m(nv, nf);
  m.row_idx.resize(static_cast<std::size_t>(nf) * 3);
  m.values.assign(static_cast<std::size_t>(nf) * 3, 1.0);
  for (Index f = 0; f < nf; ++f) {
    Face sorted = mesh.faces[f];
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 3; ++k)
      m.row_idx[3 * f + k] = sorted[k];
    m.col_ptr[f + 1] = 3 * (f + 1);
  }
  mesh.incidence = std::move(m);

  std::map<std::array<Index, 2>, int> edge_faces;
  for (const Face& t : mesh.faces)
    for (int k = 0; k < 3; ++k)
      ++edge_faces[{std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])}];
  std::size_t non_manifold = 0;
  for (const auto& [e, count] : edge_faces)
    if (count > 2)
      ++non_manifold;
  if (non_manifold > 0)
    mesh.warnings.push_back(std::to_string(non_manifold) + " non-manifold edge(s)");
}

} // namespace

TriMesh make_mesh(std::vector<Vec3> positions, std::vector<Face> faces)
{
  TriMesh mesh;
  mesh.positions = std::move(positions);
  mesh.faces = std::move(faces);
  finalize(mesh);
  return mesh;
}

TriMesh make_periodic_mesh(std::vector<Vec3> positions, std::vector<Face> faces, Vec3 period_u,
                           Vec3 period_v)
{
  TriMesh mesh;
  mesh.positions = std::move(positions);
  mesh.faces = std::move(faces);
  mesh.periodic = true;
  mesh.period_u = period_u;
  mesh.period_v = period_v;
  finalize(mesh);
  return mesh;
}

TriMesh gen_periodic_grid(Index nx, Index ny, double spacing)
{
  if (nx < 3 || ny < 3)
    throw Error("size", "periodic grid needs at least 3x3 vertices");
  if (!(spacing > 0.0))
    throw Error("size", "grid spacing must be positive");
  const double row_height = spacing * std::numbers::sqrt3 / 2.0;
  std::vector<Vec3> pos;
  pos.reserve(static_cast<std::size_t>(nx) * ny);
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i)
      pos.emplace_back((i + 0.5 * j) * spacing, j * row_height, 0.0);

  auto id = [&](Index i, Index j) { return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx); };
  std::vector<Face> faces;
  faces.reserve(static_cast<std::size_t>(2) * nx * ny);
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      faces.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
      faces.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  const Vec3 u{nx * spacing, 0.0, 0.0};
  const Vec3 v{0.5 * ny * spacing, ny * row_height, 0.0};
  return make_periodic_mesh(std::move(pos), std::move(faces), u, v);
}

TriMesh gen_icosphere(int subdiv)
{
  if (subdiv < 0 || subdiv > 7)
    throw Error("size", "icosphere subdivision must be in [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> pos = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                           {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                           {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : pos)
    p = normalized(p);
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdiv; ++level) {
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end())
        return it->second;
      pos.push_back(normalized(0.5 * (pos[a] + pos[b])));
      const auto id = static_cast<Index>(pos.size() - 1);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const Index ab = mid(f[0], f[1]);
      const Index bc = mid(f[1], f[2]);
      const Index ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return make_mesh(std::move(pos), std::move(faces));
}

} // namespace layertess

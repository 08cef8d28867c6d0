#include "layertess/dual.hpp"

#include "layertess/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>
#include <set>

namespace layertess {

namespace {

using Point2 = std::array<double, 2>;

// Error-free transformations for the exact orientation sign.
void two_sum(double a, double b, double& s, double& err)
{
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  err = (a - av) + (b - bv);
}

void two_product(double a, double b, double& p, double& err)
{
  p = a * b;
  err = std::fma(a, b, -p);
}

// Adds `b` to a nonoverlapping expansion kept in increasing magnitude order.
void grow_expansion(std::vector<double>& e, double b)
{
  double q = b;
  std::vector<double> out;
  out.reserve(e.size() + 1);
  for (const double x : e) {
    double sum = 0.0;
    double err = 0.0;
    two_sum(q, x, sum, err);
    if (err != 0.0)
      out.push_back(err);
    q = sum;
  }
  if (q != 0.0)
    out.push_back(q);
  e.swap(out);
}

// Sign of det[[bx-ax, by-ay], [cx-ax, cy-ay]], computed exactly.
int orientation(const Point2& a, const Point2& b, const Point2& c)
{
  const double d[4][2] = {{b[0], -a[0]}, {c[1], -a[1]}, {b[1], -a[1]}, {c[0], -a[0]}};
  double diff[4][2];
  for (int k = 0; k < 4; ++k)
    two_sum(d[k][0], d[k][1], diff[k][0], diff[k][1]);
  std::vector<double> e;
  auto add_products = [&](const double* x, const double* y, double sign) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double p = 0.0;
        double err = 0.0;
        two_product(x[i], y[j], p, err);
        grow_expansion(e, sign * p);
        grow_expansion(e, sign * err);
      }
  };
  add_products(diff[0], diff[1], 1.0);
  add_products(diff[2], diff[3], -1.0);
  for (auto it = e.rbegin(); it != e.rend(); ++it)
    if (*it != 0.0)
      return *it > 0.0 ? 1 : -1;
  return 0;
}

bool on_segment(const Point2& p, const Point2& q, const Point2& r)
{
  return std::min(p[0], q[0]) <= r[0] && r[0] <= std::max(p[0], q[0]) && std::min(p[1], q[1]) <= r[1] &&
         r[1] <= std::max(p[1], q[1]);
}

SparseMat boolean_product(const SparseMat& a, const SparseMat& b)
{
  SparseMat c = spgemm(a, b);
  for (double& v : c.values)
    v = 1.0;
  return c;
}

SparseMat drop_diagonal(const SparseMat& a)
{
  SparseMat out(a.n_rows, a.n_cols);
  for (Index c = 0; c < a.n_cols; ++c) {
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      if (a.row_idx[p] == c)
        continue;
      out.row_idx.push_back(a.row_idx[p]);
      out.values.push_back(a.values[p]);
    }
    out.col_ptr[c + 1] = static_cast<Index>(out.row_idx.size());
  }
  return out;
}

AdjacencyMatrix make_adjacency(SparseMat a, Provenance kind)
{
  AdjacencyMatrix adj;
  adj.A = drop_diagonal(a);
  adj.provenance.assign(adj.A.nnz(), kind);
  return adj;
}

SparseMat cell_face_matrix(const LayeredField& field, const TriMesh& mesh, double threshold)
{
  if (field.phi.n_cols != mesh.n_vertices())
    throw Error("shape", "field and mesh vertex counts differ");
  return boolean_product(thresholded_cells(field, threshold), mesh.incidence);
}

void check_threshold(double threshold)
{
  if (!(threshold > 0.0 && threshold < 0.5))
    throw Error("config", "adjacency threshold must lie in (0, 0.5)");
}

// Level-set segment of one cell inside a face, in the face's barycentric frame.
std::optional<std::array<Point2, 2>> isoline_segment(const std::array<double, 3>& value, double threshold)
{
  static constexpr Point2 corner[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  Point2 pts[3];
  int n = 0;
  for (int k = 0; k < 3; ++k) {
    const int l = (k + 1) % 3;
    const bool in_k = value[k] >= threshold;
    const bool in_l = value[l] >= threshold;
    if (in_k == in_l)
      continue;
    const double t = (threshold - value[k]) / (value[l] - value[k]);
    pts[n++] = {corner[k][0] + t * (corner[l][0] - corner[k][0]), corner[k][1] + t * (corner[l][1] - corner[k][1])};
  }
  if (n != 2)
    return std::nullopt;
  return std::array<Point2, 2>{pts[0], pts[1]};
}

std::vector<Index> sorted_intersection(std::span<const Index> a, std::span<const Index> b)
{
  std::vector<Index> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::array<Index, 2> edge_key(Index a, Index b)
{
  return a < b ? std::array<Index, 2>{a, b} : std::array<Index, 2>{b, a};
}

DualTriangle sorted_triangle(Index a, Index b, Index c)
{
  DualTriangle t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

std::map<std::array<Index, 2>, std::vector<std::size_t>> edge_map(const std::vector<DualTriangle>& tris)
{
  std::map<std::array<Index, 2>, std::vector<std::size_t>> edges;
  for (std::size_t t = 0; t < tris.size(); ++t)
    for (int k = 0; k < 3; ++k)
      edges[edge_key(tris[t][k], tris[t][(k + 1) % 3])].push_back(t);
  return edges;
}

// True when triangle `t` traverses the directed edge a -> b.
bool has_directed(const DualTriangle& t, Index a, Index b)
{
  for (int k = 0; k < 3; ++k)
    if (t[k] == a && t[(k + 1) % 3] == b)
      return true;
  return false;
}

SparseMat contact_strength(const LayeredField& field, const SparseMat& pattern)
{
  SparseMat contact = pattern;
  std::fill(contact.values.begin(), contact.values.end(), 0.0);
  const SparseMat& phi = field.phi;
  for (Index v = 0; v < phi.n_cols; ++v) {
    const Index begin = phi.col_ptr[v];
    const Index end = phi.col_ptr[v + 1];
    for (Index p = begin; p < end; ++p) {
      if (phi.row_idx[p] == base_row)
        continue;
      for (Index q = begin; q < end; ++q) {
        if (q == p || phi.row_idx[q] == base_row)
          continue;
        const Index i = phi.row_idx[p] - 1;
        const Index j = phi.row_idx[q] - 1;
        const auto rows = contact.rows(j);
        const auto it = std::lower_bound(rows.begin(), rows.end(), i);
        if (it == rows.end() || *it != i)
          continue;
        double& c = contact.values[static_cast<std::size_t>(contact.col_ptr[j] + (it - rows.begin()))];
        c = std::max(c, std::min(phi.values[p], phi.values[q]));
      }
    }
  }
  return contact;
}

} // namespace

const char* to_string(Provenance p)
{
  switch (p) {
  case Provenance::vertex_shared:
    return "vertex-shared";
  case Provenance::triangle_confirmed:
    return "triangle-confirmed";
  case Provenance::dropped:
    return "dropped";
  }
  return "unknown";
}

Provenance AdjacencyMatrix::provenance_of(Index i, Index j) const
{
  const auto rows = A.rows(j);
  const auto it = std::lower_bound(rows.begin(), rows.end(), i);
  if (it != rows.end() && *it == i)
    return provenance[static_cast<std::size_t>(A.col_ptr[j] + (it - rows.begin()))];
  return Provenance::dropped;
}

SparseMat thresholded_cells(const LayeredField& field, double threshold)
{
  const SparseMat& phi = field.phi;
  SparseMat out(field.n_cells(), phi.n_cols);
  for (Index c = 0; c < phi.n_cols; ++c) {
    for (Index p = phi.col_ptr[c]; p < phi.col_ptr[c + 1]; ++p) {
      if (phi.row_idx[p] == base_row || !(phi.values[p] >= threshold))
        continue;
      out.row_idx.push_back(phi.row_idx[p] - 1);
      out.values.push_back(1.0);
    }
    out.col_ptr[c + 1] = static_cast<Index>(out.row_idx.size());
  }
  return out;
}

AdjacencyMatrix vertex_adjacency(const LayeredField& field, double threshold)
{
  check_threshold(threshold);
  const SparseMat bar = thresholded_cells(field, threshold);
  return make_adjacency(boolean_product(bar, transpose(bar)), Provenance::vertex_shared);
}

AdjacencyMatrix triangle_adjacency(const LayeredField& field, const TriMesh& mesh, double threshold)
{
  check_threshold(threshold);
  const SparseMat b = cell_face_matrix(field, mesh, threshold);
  return make_adjacency(boolean_product(b, transpose(b)), Provenance::triangle_confirmed);
}

bool segments_intersect(const Point2& p0, const Point2& p1, const Point2& q0, const Point2& q1)
{
  const int o1 = orientation(p0, p1, q0);
  const int o2 = orientation(p0, p1, q1);
  const int o3 = orientation(q0, q1, p0);
  const int o4 = orientation(q0, q1, p1);
  if (o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0)
    return true;
  if (o1 == 0 && on_segment(p0, p1, q0))
    return true;
  if (o2 == 0 && on_segment(p0, p1, q1))
    return true;
  if (o3 == 0 && on_segment(q0, q1, p0))
    return true;
  if (o4 == 0 && on_segment(q0, q1, p1))
    return true;
  return false;
}

AdjacencyMatrix confirm_candidates(const LayeredField& field, const TriMesh& mesh, const AdjacencyMatrix& a_v,
                                   const AdjacencyMatrix& a_t, double threshold)
{
  check_threshold(threshold);
  const Index n = field.n_cells();
  if (a_v.n_cells() != n || a_t.n_cells() != n)
    throw Error("shape", "adjacency matrices do not match the field");

  const SparseMat faces_of = transpose(cell_face_matrix(field, mesh, threshold));

  std::vector<std::set<Index>> confirmed(n);
  for (Index j = 0; j < n; ++j)
    for (const Index i : a_v.neighbors(j))
      confirmed[j].insert(i);

  std::vector<std::array<Index, 2>> candidates;
  for (Index j = 0; j < n; ++j)
    for (const Index i : a_t.neighbors(j))
      if (i < j && !a_v.adjacent(i, j))
        candidates.push_back({i, j});
  std::sort(candidates.begin(), candidates.end());

  AdjacencyMatrix out;
  auto cell_values = [&](Index cell, Index f) {
    std::array<double, 3> v{};
    for (int k = 0; k < 3; ++k)
      v[k] = field.phi.at(cell + 1, mesh.faces[f][k]);
    return v;
  };

  for (const auto& [i, j] : candidates) {
    bool crossing = false;
    for (const Index f : sorted_intersection(faces_of.rows(i), faces_of.rows(j))) {
      const auto c = mesh.corners(f);
      if (!(mesh.face_area[f] > 0.0) || distance(c[0], c[1]) == 0.0 || distance(c[1], c[2]) == 0.0 ||
          distance(c[2], c[0]) == 0.0) {
        out.warnings.push_back("skipped degenerate face " + std::to_string(f));
        continue;
      }
      const auto si = isoline_segment(cell_values(i, f), threshold);
      const auto sj = isoline_segment(cell_values(j, f), threshold);
      if (si && sj && segments_intersect((*si)[0], (*si)[1], (*sj)[0], (*sj)[1])) {
        crossing = true;
        break;
      }
    }
    if (!crossing) {
      out.dropped.push_back({i, j, "no-crossing"});
      continue;
    }
    std::size_t shared = 0;
    for (const Index k : confirmed[i])
      shared += confirmed[j].count(k);
    if (shared >= 2) {
      out.dropped.push_back({i, j, "shared-neighbors"});
      continue;
    }
    confirmed[i].insert(j);
    confirmed[j].insert(i);
  }

  out.face_support = faces_of;
  out.A = SparseMat(n, n);
  for (Index j = 0; j < n; ++j) {
    for (const Index i : confirmed[j]) {
      out.A.row_idx.push_back(i);
      out.A.values.push_back(1.0);
      out.provenance.push_back(a_v.adjacent(i, j) ? Provenance::vertex_shared : Provenance::triangle_confirmed);
    }
    out.A.col_ptr[j + 1] = static_cast<Index>(out.A.row_idx.size());
  }
  out.contact = contact_strength(field, out.A);
  return out;
}

AdjacencyMatrix curated_adjacency(const LayeredField& field, const TriMesh& mesh, double threshold)
{
  const AdjacencyMatrix a_v = vertex_adjacency(field, threshold);
  const AdjacencyMatrix a_t = triangle_adjacency(field, mesh, threshold);
  return confirm_candidates(field, mesh, a_v, a_t, threshold);
}

Index DualMesh::n_edges() const
{
  std::set<std::array<Index, 2>> edges;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k)
      edges.insert(edge_key(t[k], t[(k + 1) % 3]));
  return static_cast<Index>(edges.size());
}

long DualMesh::euler_characteristic() const
{
  return static_cast<long>(n_vertices()) - n_edges() + static_cast<long>(triangles.size());
}

Vec3 DualMesh::edge_vector(Index a, Index b) const
{
  Vec3 d = positions[b] - positions[a];
  if (!periodic)
    return d;
  TriMesh frame;
  frame.periodic = true;
  frame.period_u = period_u;
  frame.period_v = period_v;
  return frame.min_image(d);
}

std::array<Vec3, 3> DualMesh::corners(std::size_t t) const
{
  const auto& tri = triangles[t];
  const Vec3 p0 = positions[tri[0]];
  return {p0, p0 + edge_vector(tri[0], tri[1]), p0 + edge_vector(tri[0], tri[2])};
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh)
{
  std::vector<Vec3> normals(mesh.positions.size());
  for (Index f = 0; f < mesh.n_faces(); ++f)
    for (const Index v : mesh.faces[f])
      normals[v] += mesh.face_area[f] * mesh.face_normal[f];
  for (Vec3& n : normals) {
    const double len = norm(n);
    if (len > 0.0)
      n = n / len;
  }
  return normals;
}

DualMesh build_dual(const AdjacencyMatrix& adjacency, const std::vector<Vec3>& positions,
                    const std::vector<Vec3>& normals, const TriMesh* frame)
{
  const Index n = adjacency.n_cells();
  if (static_cast<Index>(positions.size()) != n || static_cast<Index>(normals.size()) != n)
    throw Error("shape", "one position and one normal per cell required");

  DualMesh dual;
  dual.positions = positions;
  if (frame && frame->periodic) {
    dual.periodic = true;
    dual.period_u = frame->period_u;
    dual.period_v = frame->period_v;
  }

  // Every 3-clique i < j < k, found by intersecting neighbor rings.
  std::vector<DualTriangle> cliques;
  for (Index i = 0; i < n; ++i) {
    const auto ring = adjacency.neighbors(i);
    for (auto pj = ring.begin(); pj != ring.end(); ++pj) {
      const Index j = *pj;
      if (j <= i)
        continue;
      const std::span<const Index> rest(pj + 1, ring.end());
      for (const Index k : sorted_intersection(adjacency.neighbors(j), rest))
        cliques.push_back({i, j, k});
    }
  }

  if (adjacency.face_support.n_cols == n && n > 0) {
    const SparseMat& support = adjacency.face_support;
    std::erase_if(cliques, [&](const DualTriangle& t) {
      const auto shared = sorted_intersection(support.rows(t[0]), support.rows(t[1]));
      const bool junction = !sorted_intersection(shared, support.rows(t[2])).empty();
      if (!junction)
        dual.unsupported.push_back(t);
      return !junction;
    });
  }

  // A degree-3 cell with mutually adjacent neighbors sits on a spike; the cap
  // triangle of its three neighbors duplicates the fan and is removed when one
  // of its edges is overfull.
  const auto counts = edge_map(cliques);
  std::set<DualTriangle> remove;
  for (Index c = 0; c < n; ++c) {
    const auto ring = adjacency.neighbors(c);
    if (ring.size() != 3)
      continue;
    const DualTriangle cap = sorted_triangle(ring[0], ring[1], ring[2]);
    if (!adjacency.adjacent(cap[0], cap[1]) || !adjacency.adjacent(cap[1], cap[2]) ||
        !adjacency.adjacent(cap[0], cap[2]))
      continue;
    bool overfull = false;
    for (int k = 0; k < 3; ++k)
      overfull |= counts.at(edge_key(cap[k], cap[(k + 1) % 3])).size() > 2;
    if (overfull)
      remove.insert(cap);
  }
  std::vector<DualTriangle> kept;
  for (const auto& t : cliques) {
    if (remove.count(t))
      dual.spurious.push_back(t);
    else
      kept.push_back(t);
  }

  if (adjacency.contact.n_cols == n && adjacency.contact.nnz() == adjacency.A.nnz() && n > 0) {
    auto weakest = [&](const DualTriangle& t) {
      return std::min({adjacency.contact.at(t[0], t[1]), adjacency.contact.at(t[1], t[2]),
                       adjacency.contact.at(t[0], t[2])});
    };
    std::vector<std::pair<double, DualTriangle>> ranked;
    for (const auto& t : kept)
      ranked.emplace_back(weakest(t), t);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::map<std::array<Index, 2>, int> use;
    for (const auto& [strength, t] : ranked) {
      bool full = false;
      for (int k = 0; k < 3; ++k)
        full |= use[edge_key(t[k], t[(k + 1) % 3])] >= 2;
      if (full) {
        dual.overfull.push_back(t);
        continue;
      }
      for (int k = 0; k < 3; ++k)
        ++use[edge_key(t[k], t[(k + 1) % 3])];
      dual.triangles.push_back(t);
    }
    std::sort(dual.triangles.begin(), dual.triangles.end());
  } else {
    dual.triangles = std::move(kept);
  }

  const auto edges = edge_map(dual.triangles);
  std::set<Index> offending;
  for (const auto& [e, tris] : edges)
    if (tris.size() > 2) {
      offending.insert(e[0]);
      offending.insert(e[1]);
    }
  if (!offending.empty()) {
    std::string list;
    for (const Index c : offending)
      list += (list.empty() ? "" : " ") + std::to_string(c);
    throw Error("non-manifold-residual", "edges shared by more than two triangles around cells: " + list);
  }

  // Breadth-first orientation per connected component.
  std::vector<char> visited(dual.triangles.size(), 0);
  for (std::size_t start = 0; start < dual.triangles.size(); ++start) {
    if (visited[start])
      continue;
    std::vector<std::size_t> component;
    std::queue<std::size_t> queue;
    queue.push(start);
    visited[start] = 1;
    while (!queue.empty()) {
      const std::size_t t = queue.front();
      queue.pop();
      component.push_back(t);
      const DualTriangle tri = dual.triangles[t];
      for (int k = 0; k < 3; ++k) {
        const Index a = tri[k];
        const Index b = tri[(k + 1) % 3];
        for (const std::size_t u : edges.at(edge_key(a, b))) {
          if (u == t)
            continue;
          DualTriangle& other = dual.triangles[u];
          if (!visited[u]) {
            if (has_directed(other, a, b))
              std::swap(other[1], other[2]);
            visited[u] = 1;
            queue.push(u);
          } else if (has_directed(other, a, b)) {
            throw Error("non-orientable", "dual triangles cannot be oriented consistently");
          }
        }
      }
    }

    long votes = 0;
    for (const std::size_t t : component) {
      const auto c = dual.corners(t);
      const Vec3 tn = cross(c[1] - c[0], c[2] - c[0]);
      const auto& tri = dual.triangles[t];
      const Vec3 sn = normals[tri[0]] + normals[tri[1]] + normals[tri[2]];
      const double s = dot(tn, sn);
      votes += s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
    }
    if (votes < 0)
      for (const std::size_t t : component)
        std::swap(dual.triangles[t][1], dual.triangles[t][2]);
  }
  return dual;
}

DualMesh build_dual(const AdjacencyMatrix& adjacency, const LayeredField& field, const TriMesh& mesh)
{
  const auto all_normals = vertex_normals(mesh);
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
  for (const Index s : field.seeds) {
    positions.push_back(mesh.positions[s]);
    normals.push_back(all_normals[s]);
  }
  return build_dual(adjacency, positions, normals, &mesh);
}

DualCheck check_dual(const DualMesh& dual, const AdjacencyMatrix* adjacency)
{
  DualCheck check;
  const auto edges = edge_map(dual.triangles);
  std::set<std::array<Index, 2>> directed;
  for (const auto& t : dual.triangles)
    for (int k = 0; k < 3; ++k)
      if (!directed.insert({t[k], t[(k + 1) % 3]}).second)
        check.consistently_oriented = false;
  for (const auto& [e, tris] : edges)
    if (tris.size() > 2) {
      check.edge_manifold = false;
      check.overfull_edges.push_back(e);
    }
  if (adjacency)
    for (const auto& t : dual.triangles)
      for (int k = 0; k < 3; ++k)
        if (!adjacency->adjacent(t[k], t[(k + 1) % 3]))
          check.cliques_adjacent = false;
  check.euler_characteristic = dual.euler_characteristic();
  return check;
}

void write_dual_obj(std::ostream& os, const DualMesh& dual, const std::string& comment)
{
  if (!comment.empty())
    os << "# " << comment << '\n';
  char buf[96];
  for (const Vec3& p : dual.positions) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
    os << buf;
  }
  for (const auto& t : dual.triangles)
    os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

std::string dual_diagnostics_json(const AdjacencyMatrix& adjacency, const DualMesh& dual,
                                  const std::string& extra_header_json)
{
  std::size_t n_vertex_shared = 0;
  std::size_t n_confirmed = 0;
  for (const Provenance p : adjacency.provenance)
    (p == Provenance::vertex_shared ? n_vertex_shared : n_confirmed) += 1;
  const DualCheck check = check_dual(dual, &adjacency);
  nlohmann::json doc;
  doc["format"] = "layertess-dual-diagnostics";
  doc["header"] = nlohmann::json::parse(extra_header_json);
  doc["cells"] = dual.n_vertices();
  doc["triangles"] = dual.triangles.size();
  doc["edges"] = dual.n_edges();
  doc["euler_characteristic"] = check.euler_characteristic;
  doc["edge_manifold"] = check.edge_manifold;
  doc["consistently_oriented"] = check.consistently_oriented;
  // Each undirected pair is stored twice in the symmetric matrix.
  doc["adjacent_pairs"] = {{"vertex_shared", n_vertex_shared / 2}, {"triangle_confirmed", n_confirmed / 2}};
  nlohmann::json dropped = nlohmann::json::array();
  for (const DroppedPair& d : adjacency.dropped)
    dropped.push_back({{"cells", {d.i, d.j}}, {"reason", d.reason}});
  doc["dropped_pairs"] = std::move(dropped);
  doc["spurious_triangles"] = dual.spurious;
  doc["unsupported_triangles"] = dual.unsupported;
  doc["overfull_triangles"] = dual.overfull;
  doc["warnings"] = adjacency.warnings;
  return doc.dump(2);
}

} // namespace layertess

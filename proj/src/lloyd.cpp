#include "layertess/lloyd.hpp"

#include "layertess/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace layertess {

namespace {

void check_row(const LayeredField& field, Index row)
{
  if (row <= base_row || row >= field.phi.n_rows)
    throw Error("invalid-cell", "row " + std::to_string(row) + " is not a cell row");
}

// Vertices with phi(row, v) > 0 as a dense flag vector.
std::vector<char> cell_members(const LayeredField& field, Index row)
{
  const SparseMat& phi = field.phi;
  std::vector<char> inside(phi.n_cols, 0);
  for (Index v = 0; v < phi.n_cols; ++v)
    if (phi.at(row, v) > 0.0)
      inside[v] = 1;
  return inside;
}

// Faces per cell row: column r of the transposed incidence product.
SparseMat faces_by_row(const LayeredField& field, const TriMesh& mesh)
{
  return transpose(cell_face_incidence(field, mesh));
}

std::vector<Index> column_rows(const SparseMat& m, Index col)
{
  const auto rows = m.rows(col);
  return {rows.begin(), rows.end()};
}

Vec3 anchor_of(const LayeredField& field, const TriMesh& mesh, Index row)
{
  return mesh.positions[field.seeds[row - 1]];
}

} // namespace

SparseMat cell_face_incidence(const LayeredField& field, const TriMesh& mesh)
{
  if (field.phi.n_cols != mesh.n_vertices())
    throw Error("shape", "field and mesh vertex counts differ");
  SparseMat marked = field.phi;
  for (double& v : marked.values)
    v = v > 0.0 ? 1.0 : 0.0;
  marked.prune_zeros();
  SparseMat product = spgemm(marked, mesh.incidence);
  for (double& v : product.values)
    v = 1.0;
  return product;
}

std::vector<Index> cell_triangles(const LayeredField& field, const TriMesh& mesh, Index row)
{
  check_row(field, row);
  auto faces = column_rows(faces_by_row(field, mesh), row);
  if (faces.empty())
    throw Error("vanished-cell", "cell row " + std::to_string(row) + " is empty");
  return faces;
}

Centroid approx_centroid(const TriMesh& mesh, std::span<const Index> faces, const Vec3& anchor)
{
  Vec3 weighted_point;
  Vec3 weighted_normal;
  double total = 0.0;
  for (const Index f : faces) {
    const auto c = mesh.corners(f, anchor);
    const double area = mesh.face_area[f];
    weighted_point += area * ((c[0] + c[1] + c[2]) / 3.0);
    weighted_normal += area * mesh.face_normal[f];
    total += area;
  }
  if (!(total > 0.0))
    throw Error("degenerate-cell", "cell has zero total area");
  const double len = norm(weighted_normal);
  if (!(len > 1e-12 * total))
    throw Error("null-normal", "area-weighted cell normal vanishes");
  return {weighted_point / total, weighted_normal / len};
}

Centroid approx_centroid(const LayeredField& field, const TriMesh& mesh, Index row)
{
  const auto faces = cell_triangles(field, mesh, row);
  return approx_centroid(mesh, faces, anchor_of(field, mesh, row));
}

std::optional<Index> backproject(const TriMesh& mesh, std::span<const Index> faces, const Vec3& point,
                                 const Vec3& normal, const std::vector<char>& inside)
{
  double best_t = std::numeric_limits<double>::infinity();
  std::optional<Index> best;
  for (const Index f : faces) {
    const auto c = mesh.corners(f, point);
    // Moller-Trumbore on the full line.
    const Vec3 e1 = c[1] - c[0];
    const Vec3 e2 = c[2] - c[0];
    const Vec3 p = cross(normal, e2);
    const double det = dot(e1, p);
    const double scale = norm(e1) * norm(e2);
    if (std::abs(det) <= 1e-14 * scale)
      continue;
    const double inv = 1.0 / det;
    const Vec3 s = point - c[0];
    const double u = dot(s, p) * inv;
    const Vec3 q = cross(s, e1);
    const double v = dot(normal, q) * inv;
    constexpr double slack = 1e-12;
    if (u < -slack || v < -slack || u + v > 1.0 + slack)
      continue;
    const double t = dot(e2, q) * inv;
    if (std::abs(t) >= best_t)
      continue;

    const Vec3 hit = point + t * normal;
    std::optional<Index> nearest;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Index vtx = mesh.faces[f][k];
      if (!inside.empty() && !inside[vtx])
        continue;
      const double d = distance(hit, c[k]);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = vtx;
      }
    }
    if (nearest) {
      best_t = std::abs(t);
      best = nearest;
    }
  }
  return best;
}

std::optional<Index> backproject(const LayeredField& field, const TriMesh& mesh, Index row,
                                 const Vec3& point, const Vec3& normal)
{
  const auto faces = cell_triangles(field, mesh, row);
  return backproject(mesh, faces, point, normal, cell_members(field, row));
}

std::vector<double> cell_areas(const LayeredField& field, const TriMesh& mesh)
{
  const SparseMat& phi = field.phi;
  std::vector<double> areas(static_cast<std::size_t>(field.n_cells()), 0.0);
  for (Index v = 0; v < phi.n_cols; ++v) {
    for (Index p = phi.col_ptr[v]; p < phi.col_ptr[v + 1]; ++p)
      if (phi.row_idx[p] != base_row)
        areas[phi.row_idx[p] - 1] += mesh.vertex_area[v] * phi.values[p];
  }
  return areas;
}

double variance(std::span<const double> values)
{
  if (values.empty())
    return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double acc = 0.0;
  for (const double x : values)
    acc += (x - mean) * (x - mean);
  return acc / n;
}

std::vector<Index> relocate_seeds(const LayeredField& field, const TriMesh& mesh, LloydRecord* record)
{
  const Index n_cells = field.n_cells();
  const SparseMat by_row = faces_by_row(field, mesh);
  const SparseMat& phi = field.phi;

  // Membership flags per cell, gathered in one pass over the field.
  std::vector<std::vector<Index>> members(n_cells);
  for (Index v = 0; v < phi.n_cols; ++v)
    for (Index p = phi.col_ptr[v]; p < phi.col_ptr[v + 1]; ++p)
      if (phi.row_idx[p] != base_row && phi.values[p] > 0.0)
        members[phi.row_idx[p] - 1].push_back(v);

  enum class Outcome { moved, vanished, miss };
  std::vector<std::optional<Index>> proposal(n_cells);
  std::vector<Outcome> outcome(n_cells, Outcome::moved);

#pragma omp parallel for schedule(dynamic, 1)
  for (Index cell = 0; cell < n_cells; ++cell) {
    const Index row = cell + 1;
    const auto faces = by_row.rows(row);
    if (faces.empty()) {
      outcome[cell] = Outcome::vanished;
      continue;
    }
    std::vector<char> inside(phi.n_cols, 0);
    for (const Index v : members[cell])
      inside[v] = 1;
    try {
      const Centroid c = approx_centroid(mesh, faces, mesh.positions[field.seeds[cell]]);
      proposal[cell] = backproject(mesh, faces, c.point, c.normal, inside);
    } catch (const Error&) {
      proposal[cell].reset();
    }
    if (!proposal[cell])
      outcome[cell] = Outcome::miss;
  }

  std::vector<Index> seeds(field.seeds);
  std::vector<char> taken(phi.n_cols, 0);
  for (Index cell = 0; cell < n_cells; ++cell) {
    Index chosen = field.seeds[cell];
    if (proposal[cell] && !taken[*proposal[cell]])
      chosen = *proposal[cell];
    else if (proposal[cell] && record)
      record->collisions.push_back(cell);
    if (taken[chosen]) {
      // The old seed was claimed by an earlier cell as well: fall back to the
      // free member vertex with the largest field value.
      double best = -1.0;
      for (const Index v : members[cell]) {
        const double val = phi.at(cell + 1, v);
        if (!taken[v] && val > best) {
          best = val;
          chosen = v;
        }
      }
      for (Index v = 0; taken[chosen] && v < phi.n_cols; ++v)
        if (!taken[v])
          chosen = v;
    }
    if (record && outcome[cell] == Outcome::vanished)
      record->vanished.push_back(cell);
    if (record && outcome[cell] == Outcome::miss)
      record->ray_misses.push_back(cell);
    taken[chosen] = 1;
    seeds[cell] = chosen;
  }
  return seeds;
}

namespace {

LloydRecord make_record(const LayeredField& field, const TriMesh& mesh, std::size_t iteration,
                        const EvolveResult& result)
{
  LloydRecord rec;
  rec.iteration = iteration;
  rec.seeds = field.seeds;
  rec.cell_areas = cell_areas(field, mesh);
  rec.area_variance = variance(rec.cell_areas);
  rec.evolve_steps = result.trace.size();
  rec.converged = result.converged;
  return rec;
}

} // namespace

LloydState lloyd_start(const TriMesh& mesh, const Laplacian& lap, const CouplingParams& params,
                       std::span<const Index> seeds, const StopCriteria& stop)
{
  LloydState state;
  state.field = init_field(mesh, seeds);
  state.seeds = state.field.seeds;
  const EvolveResult result = evolve(state.field, lap, params, stop);
  state.history.push_back(make_record(state.field, mesh, 0, result));
  return state;
}

void lloyd_iterate(LloydState& state, const TriMesh& mesh, const Laplacian& lap,
                   const CouplingParams& params, std::size_t n_iter, const StopCriteria& stop)
{
  if (n_iter < 1)
    throw Error("config", "Lloyd iteration count must be at least 1");
  for (std::size_t it = 0; it < n_iter; ++it) {
    LloydRecord moves;
    const std::vector<Index> seeds = relocate_seeds(state.field, mesh, &moves);
    state.field = init_field(mesh, seeds);
    const EvolveResult result = evolve(state.field, lap, params, stop);
    ++state.iteration;
    state.seeds = seeds;
    LloydRecord rec = make_record(state.field, mesh, state.iteration, result);
    rec.vanished = std::move(moves.vanished);
    rec.ray_misses = std::move(moves.ray_misses);
    rec.collisions = std::move(moves.collisions);
    for (std::size_t k = 0; k < seeds.size(); ++k)
      rec.moved += seeds[k] != state.history.back().seeds[k] ? 1 : 0;
    state.history.push_back(std::move(rec));
  }
}

bool lloyd_until_stationary(LloydState& state, const TriMesh& mesh, const Laplacian& lap,
                            const CouplingParams& params, std::size_t max_iter, const StopCriteria& stop)
{
  for (std::size_t it = 0; it < max_iter; ++it) {
    lloyd_iterate(state, mesh, lap, params, 1, stop);
    if (state.history.back().moved == 0)
      return true;
  }
  return false;
}

std::string history_json(const LloydState& state, const std::string& extra_header_json)
{
  nlohmann::json doc;
  doc["format"] = "layertess-lloyd-history";
  doc["header"] = nlohmann::json::parse(extra_header_json);
  nlohmann::json iterations = nlohmann::json::array();
  for (const LloydRecord& rec : state.history) {
    iterations.push_back({{"iteration", rec.iteration},
                          {"seeds", rec.seeds},
                          {"cell_areas", rec.cell_areas},
                          {"area_variance", rec.area_variance},
                          {"evolve_steps", rec.evolve_steps},
                          {"converged", rec.converged},
                          {"moved", rec.moved},
                          {"vanished", rec.vanished},
                          {"ray_misses", rec.ray_misses},
                          {"collisions", rec.collisions}});
  }
  doc["iterations"] = std::move(iterations);
  return doc.dump(2);
}

} // namespace layertess

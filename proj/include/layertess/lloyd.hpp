#pragma once

#include "layertess/field.hpp"
#include "layertess/mesh.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace layertess {

/// Boolean (rows x faces) matrix whose row r flags the faces with at least one
/// vertex where phi(r, v) > 0.
SparseMat cell_face_incidence(const LayeredField& field, const TriMesh& mesh);

/// Faces having a vertex inside the cell of field row `row` (row >= 1).
/// Throws Error("vanished-cell") when the cell is empty.
std::vector<Index> cell_triangles(const LayeredField& field, const TriMesh& mesh, Index row);

struct Centroid
{
  Vec3 point;
  Vec3 normal;
};

/// Area-weighted average of the barycenters of `faces` and their area-weighted
/// mean normal. On periodic meshes face corners are unwrapped around `anchor`.
/// Throws Error("degenerate-cell") for zero total area and Error("null-normal")
/// when the normals cancel out.
Centroid approx_centroid(const TriMesh& mesh, std::span<const Index> faces, const Vec3& anchor);
Centroid approx_centroid(const LayeredField& field, const TriMesh& mesh, Index row);

/// Casts the line point + t * normal against `faces` and keeps the hit with the
/// smallest |t|. Returns the corner of the hit face nearest to the hit point,
/// restricted to corners where `inside` holds (all corners when empty), or
/// nothing on a miss.
std::optional<Index> backproject(const TriMesh& mesh, std::span<const Index> faces, const Vec3& point,
                                 const Vec3& normal, const std::vector<char>& inside = {});
std::optional<Index> backproject(const LayeredField& field, const TriMesh& mesh, Index row,
                                 const Vec3& point, const Vec3& normal);

/// Per-cell area: sum over vertices of vertex_area * phi(cell, v).
std::vector<double> cell_areas(const LayeredField& field, const TriMesh& mesh);
double variance(std::span<const double> values);

struct LloydRecord
{
  std::size_t iteration = 0;
  std::vector<Index> seeds;
  std::vector<double> cell_areas;
  double area_variance = 0.0;
  std::size_t evolve_steps = 0;
  bool converged = false;
  /// Seeds that changed vertex in the move leading to this record.
  std::size_t moved = 0;
  /// Cell indices (0-based) that kept their seed this iteration, by reason.
  std::vector<Index> vanished;
  std::vector<Index> ray_misses;
  std::vector<Index> collisions;
};

struct LloydState
{
  std::size_t iteration = 0;
  std::vector<Index> seeds;
  LayeredField field;
  std::vector<LloydRecord> history;
};

/// Evolves the field from `seeds` to convergence and records iteration 0.
LloydState lloyd_start(const TriMesh& mesh, const Laplacian& lap, const CouplingParams& params,
                       std::span<const Index> seeds, const StopCriteria& stop = {});

/// Runs `n_iter` relaxation iterations: move every seed to its back-projected
/// approximate centroid, re-initialize and re-evolve the field.
void lloyd_iterate(LloydState& state, const TriMesh& mesh, const Laplacian& lap,
                   const CouplingParams& params, std::size_t n_iter, const StopCriteria& stop = {});

/// Iterates until a move leaves every seed in place or `max_iter` iterations
/// ran. Returns true when the seeds became stationary.
bool lloyd_until_stationary(LloydState& state, const TriMesh& mesh, const Laplacian& lap,
                            const CouplingParams& params, std::size_t max_iter, const StopCriteria& stop = {});

/// Seeds proposed by one relaxation move without re-evolving. Collisions are
/// resolved in row order so the seed count is preserved.
std::vector<Index> relocate_seeds(const LayeredField& field, const TriMesh& mesh, LloydRecord* record = nullptr);

std::string history_json(const LloydState& state, const std::string& extra_header_json = "{}");

} // namespace layertess

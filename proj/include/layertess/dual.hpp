#pragma once

#include "layertess/field.hpp"
#include "layertess/mesh.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace layertess {

inline constexpr double default_adjacency_threshold = 0.2;

enum class Provenance { vertex_shared, triangle_confirmed, dropped };

/// Candidate pair rejected during curation, with i < j.
struct DroppedPair
{
  Index i = 0;
  Index j = 0;
  /// "no-crossing" or "shared-neighbors".
  std::string reason;
};

const char* to_string(Provenance p);

/// Symmetric binary cell adjacency (cells x cells, zero diagonal). `provenance`
/// runs parallel to A's stored entries.
struct AdjacencyMatrix
{
  SparseMat A;
  std::vector<Provenance> provenance;
  std::vector<DroppedPair> dropped;
  std::vector<std::string> warnings;
  /// Faces x cells boolean matrix: column c lists the faces touched by cell c
  /// above the threshold. Empty when the adjacency was not derived from a field.
  SparseMat face_support;
  /// Same pattern as A; each entry holds the largest min(phi_i, phi_j) over
  /// the vertices both cells touch. Empty when not derived from a field.
  SparseMat contact;

  Index n_cells() const { return A.n_cols; }
  bool adjacent(Index i, Index j) const { return A.at(i, j) != 0.0; }
  std::span<const Index> neighbors(Index i) const { return A.rows(i); }
  Provenance provenance_of(Index i, Index j) const;
};

/// Binary cells x vertices matrix: 1 where phi(cell, v) >= threshold. The base
/// layer is left out, so row i is cell i.
SparseMat thresholded_cells(const LayeredField& field, double threshold);

/// Cells sharing a vertex above the threshold.
AdjacencyMatrix vertex_adjacency(const LayeredField& field, double threshold = default_adjacency_threshold);

/// Cells touching a common face: boolean (B B^T) with B = thresholded cells x incidence.
AdjacencyMatrix triangle_adjacency(const LayeredField& field, const TriMesh& mesh,
                                   double threshold = default_adjacency_threshold);

/// Keeps every vertex-shared pair and confirms each triangle-only pair by
/// intersecting the two cells' threshold isolines inside their common faces.
/// A candidate is rejected when the pair already has two or more confirmed
/// common neighbors. Candidates are processed in ascending (i, j) order.
AdjacencyMatrix confirm_candidates(const LayeredField& field, const TriMesh& mesh, const AdjacencyMatrix& a_v,
                                   const AdjacencyMatrix& a_t, double threshold = default_adjacency_threshold);

/// vertex_adjacency, triangle_adjacency and confirm_candidates in sequence.
AdjacencyMatrix curated_adjacency(const LayeredField& field, const TriMesh& mesh,
                                  double threshold = default_adjacency_threshold);

/// Closed 2-D segment intersection with exact orientation signs.
bool segments_intersect(const std::array<double, 2>& p0, const std::array<double, 2>& p1,
                        const std::array<double, 2>& q0, const std::array<double, 2>& q1);

using DualTriangle = std::array<Index, 3>;

struct DualMesh
{
  std::vector<Vec3> positions;
  std::vector<DualTriangle> triangles;
  /// Triangles removed around degree-3 cells.
  std::vector<DualTriangle> spurious;
  /// Cliques without a common face among their three cells.
  std::vector<DualTriangle> unsupported;
  /// Cliques skipped because an edge already had two triangles.
  std::vector<DualTriangle> overfull;
  /// Copied from the source mesh so quality metrics can apply the periodic wrap.
  bool periodic = false;
  Vec3 period_u;
  Vec3 period_v;

  Index n_vertices() const { return static_cast<Index>(positions.size()); }
  Index n_edges() const;
  long euler_characteristic() const;
  /// Displacement b - a, under the minimum-image convention when periodic.
  Vec3 edge_vector(Index a, Index b) const;
  std::array<Vec3, 3> corners(std::size_t t) const;
};

/// Triangulates every 3-clique of the adjacency, removes the spurious cap
/// triangles around degree-3 cells and orients the result consistently. When
/// the adjacency carries face support, a clique whose three cells never touch
/// a common face is not a junction and is discarded. When it carries contact
/// strengths, cliques are accepted strongest first (by their weakest edge) and
/// a clique that would put a third triangle on an edge is skipped; this picks
/// one diagonal where four cells meet almost at a point.
/// `normals` holds one outward surface normal per cell. `frame` supplies the
/// periodic wrap for torus inputs. Throws Error("non-manifold-residual") if an
/// edge is shared by more than two triangles and Error("non-orientable") if no
/// consistent orientation exists.
DualMesh build_dual(const AdjacencyMatrix& adjacency, const std::vector<Vec3>& positions,
                    const std::vector<Vec3>& normals, const TriMesh* frame = nullptr);

/// Convenience: seed positions and the area-weighted vertex normals at the seeds.
DualMesh build_dual(const AdjacencyMatrix& adjacency, const LayeredField& field, const TriMesh& mesh);

/// Per-vertex area-weighted normals of the input mesh.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

struct DualCheck
{
  bool edge_manifold = true;
  bool consistently_oriented = true;
  bool cliques_adjacent = true;
  long euler_characteristic = 0;
  std::vector<std::array<Index, 2>> overfull_edges;
};

DualCheck check_dual(const DualMesh& dual, const AdjacencyMatrix* adjacency = nullptr);

void write_dual_obj(std::ostream& os, const DualMesh& dual, const std::string& comment = {});
/// JSON with the dropped pairs, the spurious triangles and the provenance counts.
std::string dual_diagnostics_json(const AdjacencyMatrix& adjacency, const DualMesh& dual,
                                  const std::string& extra_header_json = "{}");

} // namespace layertess

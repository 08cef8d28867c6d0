#pragma once

#include "layertess/sparse.hpp"
#include "layertess/vec3.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace layertess {

using Face = std::array<Index, 3>;

/// Indexed triangle mesh with the per-face and per-vertex quantities the
/// engine needs precomputed.
///
/// A periodic mesh lives in the xy-plane and wraps along two period vectors;
/// all geometric queries use the minimum-image convention in that case.
struct TriMesh
{
  std::vector<Vec3> positions;
  std::vector<Face> faces;
  std::vector<double> face_area;
  std::vector<Vec3> face_normal;
  /// One third of the incident face areas.
  std::vector<double> vertex_area;
  /// Binary n_v x n_f face-vertex incidence matrix.
  SparseMat incidence;

  bool periodic = false;
  Vec3 period_u;
  Vec3 period_v;

  /// Non-fatal issues found while building (non-manifold edges and such).
  std::vector<std::string> warnings;

  Index n_vertices() const { return static_cast<Index>(positions.size()); }
  Index n_faces() const { return static_cast<Index>(faces.size()); }

  /// Shortest representative of a displacement under the periodic wrap.
  Vec3 min_image(const Vec3& d) const;
  /// Position of `v` moved by a period vector so it is closest to `anchor`.
  Vec3 unwrap(Index v, const Vec3& anchor) const;
  /// Face corners unwrapped around `anchor` (or around the first corner).
  std::array<Vec3, 3> corners(Index f) const;
  std::array<Vec3, 3> corners(Index f, const Vec3& anchor) const;
  Vec3 wrap_point(const Vec3& p) const;

  /// Bounding-box diagonal; for periodic meshes the diagonal of one period cell.
  double diagonal() const;
  double mean_edge_length() const;
  double total_area() const;

  std::vector<std::vector<Index>> vertex_neighbors() const;
  std::vector<std::array<Index, 2>> edges() const;
  long euler_characteristic() const;
};

/// Validates indices and computes every derived field of the mesh.
TriMesh make_mesh(std::vector<Vec3> positions, std::vector<Face> faces);
TriMesh make_periodic_mesh(std::vector<Vec3> positions, std::vector<Face> faces, Vec3 period_u,
                           Vec3 period_v);

enum class MeshFormat { obj, off, from_extension };

TriMesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::from_extension);
TriMesh read_obj(std::istream& is);
TriMesh read_off(std::istream& is);
void write_obj(std::ostream& os, const TriMesh& mesh, const std::string& comment = {});

/// Triangulated torus grid with equilateral triangles; every vertex has degree 6.
TriMesh gen_periodic_grid(Index nx, Index ny, double spacing = 1.0);
/// Subdivided icosahedron projected onto the unit sphere.
TriMesh gen_icosphere(int subdiv);

enum class LaplacianScheme { uniform, cotan_clamped };

/// Mesh Laplacian with diagonal -1 and nonnegative off-diagonal weights summing
/// to 1 per row, plus its precomputed transpose.
struct Laplacian
{
  SparseMat L;
  SparseMat Lt;
  LaplacianScheme scheme = LaplacianScheme::uniform;
};

Laplacian build_laplacian(const TriMesh& mesh, LaplacianScheme scheme = LaplacianScheme::uniform);

} // namespace layertess

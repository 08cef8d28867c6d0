#pragma once

#include "layertess/dual.hpp"
#include "layertess/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace layertess {

/// Nearest seed per vertex under the Euclidean distance, wrapped on periodic
/// meshes. Ties (equal up to rounding) go to the lowest seed index.
std::vector<Index> euclidean_voronoi_labels(const TriMesh& mesh, std::span<const Vec3> seed_positions);

/// Nearest seed per vertex by great-circle distance on the unit sphere. Throws
/// Error("non-spherical") when a vertex is off the unit sphere.
std::vector<Index> sphere_voronoi_labels(const TriMesh& mesh, std::span<const Index> seed_vertices);

enum class Metric { euclidean, great_circle };

/// Flags vertices whose two nearest seeds differ in distance by at least `margin`.
std::vector<char> margin_mask(const TriMesh& mesh, std::span<const Vec3> seed_positions, double margin,
                              Metric metric);

/// Fraction of equal labels among vertices with a nonzero mask entry (all
/// vertices when the mask is empty). Throws Error("shape") on length mismatch
/// and Error("empty-mask") when no vertex is selected.
double label_agreement(std::span<const Index> a, std::span<const Index> b, const std::vector<char>& mask = {});

struct TriangleShape
{
  /// 2 * inradius / circumradius; 1 for an equilateral triangle.
  double quality = 0.0;
  /// Interior angles in degrees.
  std::array<double, 3> angles{};
  double min_angle() const { return std::min({angles[0], angles[1], angles[2]}); }
};

/// Throws Error("degenerate-triangle") for zero area.
TriangleShape triangle_shape(const Vec3& a, const Vec3& b, const Vec3& c);

struct QualityStats
{
  double mean_quality = 0.0;
  double min_quality = 0.0;
  double mean_min_angle = 0.0;
  double min_angle = 0.0;
  /// Percentage of all angles strictly below 30 degrees.
  double pct_below_30 = 0.0;
  std::size_t triangles = 0;
  std::size_t degenerate = 0;
};

QualityStats triangle_quality(const DualMesh& dual);
QualityStats triangle_quality(const TriMesh& mesh);

/// Exact Euclidean distance from p to the closed triangle abc.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Distances from `samples` area-uniform points on `from` to the surface of `to`.
std::vector<double> one_sided_distances(const TriMesh& from, const TriMesh& to, std::size_t samples,
                                        std::uint64_t rng_seed);

struct HausdorffStats
{
  /// Mean and RMS over the pooled samples of both directions, in percent of
  /// the bounding-box diagonal of the first mesh.
  double mean_pct = 0.0;
  double rms_pct = 0.0;
  double max_pct = 0.0;
  /// One-sided means in absolute units.
  double mean_ab = 0.0;
  double mean_ba = 0.0;
  std::size_t samples = 0;
};

/// Symmetric sampled surface distance. Requires samples >= 1000.
HausdorffStats hausdorff(const TriMesh& a, const TriMesh& b, std::size_t samples = 1000,
                         std::uint64_t rng_seed = 1);

/// Non-periodic dual as a plain triangle mesh.
TriMesh dual_to_mesh(const DualMesh& dual);

struct Histogram
{
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
  double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

/// `bins` equal bins over [0, 3 * mean]; larger values land in the last bin.
Histogram area_histogram(std::span<const double> areas, std::size_t bins = 32);
void write_histogram_csv(std::ostream& os, const Histogram& h, const std::string& comment = {});

struct QualityReport
{
  std::optional<HausdorffStats> distance;
  QualityStats quality;
  std::optional<Histogram> cell_areas;
};

std::string quality_report_json(const QualityReport& report, const std::string& extra_header_json = "{}");

} // namespace layertess

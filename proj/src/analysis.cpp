#include "layertess/analysis.hpp"

#include "layertess/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace layertess {

namespace {

constexpr double rad_to_deg = 180.0 / std::numbers::pi;

double angle_between(const Vec3& u, const Vec3& v)
{
  const double c = dot(u, v) / (norm(u) * norm(v));
  return std::acos(std::clamp(c, -1.0, 1.0)) * rad_to_deg;
}

template <class CornerFn>
QualityStats accumulate_quality(std::size_t n, CornerFn corners)
{
  QualityStats stats;
  stats.min_quality = std::numeric_limits<double>::infinity();
  stats.min_angle = std::numeric_limits<double>::infinity();
  std::size_t below = 0;
  double sum_q = 0.0;
  double sum_min_angle = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto c = corners(t);
    TriangleShape shape;
    try {
      shape = triangle_shape(c[0], c[1], c[2]);
    } catch (const Error&) {
      ++stats.degenerate;
      continue;
    }
    ++stats.triangles;
    sum_q += shape.quality;
    sum_min_angle += shape.min_angle();
    stats.min_quality = std::min(stats.min_quality, shape.quality);
    stats.min_angle = std::min(stats.min_angle, shape.min_angle());
    // Angles within rounding of 30 degrees count as not below.
    for (const double a : shape.angles)
      below += a < 30.0 - 1e-9 ? 1 : 0;
  }
  if (stats.triangles == 0) {
    stats.min_quality = 0.0;
    stats.min_angle = 0.0;
    return stats;
  }
  const double n_tri = static_cast<double>(stats.triangles);
  stats.mean_quality = sum_q / n_tri;
  stats.mean_min_angle = sum_min_angle / n_tri;
  stats.pct_below_30 = 100.0 * static_cast<double>(below) / (3.0 * n_tri);
  return stats;
}

// Distances within rounding of each other tie, so the lower seed index wins.
bool strictly_closer(double d, double best)
{
  if (!std::isfinite(best))
    return d < best;
  return d < best - 1e-12 * std::max(1.0, best);
}

double bbox_diagonal(const TriMesh& mesh)
{
  if (mesh.positions.empty())
    return 0.0;
  Vec3 lo = mesh.positions.front();
  Vec3 hi = lo;
  for (const Vec3& p : mesh.positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  return norm(hi - lo);
}

} // namespace

std::vector<Index> euclidean_voronoi_labels(const TriMesh& mesh, std::span<const Vec3> seed_positions)
{
  const Index nv = mesh.n_vertices();
  std::vector<Index> labels(nv, unclaimed);
#pragma omp parallel for schedule(static)
  for (Index v = 0; v < nv; ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < seed_positions.size(); ++s) {
      const double d = norm(mesh.min_image(mesh.positions[v] - seed_positions[s]));
      if (strictly_closer(d, best)) {
        best = d;
        labels[v] = static_cast<Index>(s);
      }
    }
  }
  return labels;
}

std::vector<Index> sphere_voronoi_labels(const TriMesh& mesh, std::span<const Index> seed_vertices)
{
  for (const Vec3& p : mesh.positions)
    if (std::abs(norm(p) - 1.0) > 1e-9)
      throw Error("non-spherical", "mesh vertices are not on the unit sphere");
  const Index nv = mesh.n_vertices();
  for (const Index s : seed_vertices)
    if (s < 0 || s >= nv)
      throw Error("invalid-seed", "seed vertex " + std::to_string(s) + " out of range");
  std::vector<Index> labels(nv, unclaimed);
#pragma omp parallel for schedule(static)
  for (Index v = 0; v < nv; ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < seed_vertices.size(); ++s) {
      const double c = std::clamp(dot(mesh.positions[v], mesh.positions[seed_vertices[s]]), -1.0, 1.0);
      const double d = std::acos(c);
      if (strictly_closer(d, best)) {
        best = d;
        labels[v] = static_cast<Index>(s);
      }
    }
  }
  return labels;
}

std::vector<char> margin_mask(const TriMesh& mesh, std::span<const Vec3> seed_positions, double margin,
                              Metric metric)
{
  const Index nv = mesh.n_vertices();
  std::vector<char> mask(nv, 0);
#pragma omp parallel for schedule(static)
  for (Index v = 0; v < nv; ++v) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = d1;
    for (const Vec3& s : seed_positions) {
      double d = 0.0;
      if (metric == Metric::great_circle)
        d = std::acos(std::clamp(dot(normalized(mesh.positions[v]), normalized(s)), -1.0, 1.0));
      else
        d = norm(mesh.min_image(mesh.positions[v] - s));
      if (d < d1) {
        d2 = d1;
        d1 = d;
      } else if (d < d2) {
        d2 = d;
      }
    }
    mask[v] = d2 - d1 >= margin ? 1 : 0;
  }
  return mask;
}

double label_agreement(std::span<const Index> a, std::span<const Index> b, const std::vector<char>& mask)
{
  if (a.size() != b.size() || (!mask.empty() && mask.size() != a.size()))
    throw Error("shape", "label arrays differ in length");
  std::size_t total = 0;
  std::size_t same = 0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    if (!mask.empty() && !mask[v])
      continue;
    ++total;
    same += a[v] == b[v] ? 1 : 0;
  }
  if (total == 0)
    throw Error("empty-mask", "no vertex passes the mask");
  return static_cast<double>(same) / static_cast<double>(total);
}

TriangleShape triangle_shape(const Vec3& a, const Vec3& b, const Vec3& c)
{
  const double la = distance(b, c);
  const double lb = distance(c, a);
  const double lc = distance(a, b);
  const double area = 0.5 * norm(cross(b - a, c - a));
  const double longest = std::max({la, lb, lc});
  if (!(area > 1e-14 * longest * longest))
    throw Error("degenerate-triangle", "triangle has zero area");
  const double s = 0.5 * (la + lb + lc);
  const double r_in = area / s;
  const double r_circ = la * lb * lc / (4.0 * area);
  TriangleShape shape;
  shape.quality = std::min(1.0, 2.0 * r_in / r_circ);
  shape.angles = {angle_between(b - a, c - a), angle_between(a - b, c - b), angle_between(a - c, b - c)};
  return shape;
}

QualityStats triangle_quality(const DualMesh& dual)
{
  return accumulate_quality(dual.triangles.size(), [&](std::size_t t) { return dual.corners(t); });
}

QualityStats triangle_quality(const TriMesh& mesh)
{
  return accumulate_quality(mesh.faces.size(), [&](std::size_t f) { return mesh.corners(static_cast<Index>(f)); });
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  // Closest point by Voronoi-region classification of p against the triangle.
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0)
    return norm(ap);

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3)
    return norm(bp);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return distance(p, a + v * ab);
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6)
    return norm(cp);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return distance(p, a + w * ac);
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return distance(p, b + w * (c - b));
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return distance(p, a + v * ab + w * ac);
}

std::vector<double> one_sided_distances(const TriMesh& from, const TriMesh& to, std::size_t samples,
                                        std::uint64_t rng_seed)
{
  if (from.faces.empty() || to.faces.empty())
    throw Error("empty-mesh", "distance needs two non-empty meshes");

  std::mt19937_64 rng(rng_seed);
  std::discrete_distribution<std::size_t> pick(from.face_area.begin(), from.face_area.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> points(samples);
  for (Vec3& p : points) {
    const auto c = from.corners(static_cast<Index>(pick(rng)));
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    p = (1.0 - r1) * c[0] + r1 * (1.0 - r2) * c[1] + r1 * r2 * c[2];
  }

  std::vector<double> dist(samples);
  const auto n_samples = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t s = 0; s < n_samples; ++s) {
    double best = std::numeric_limits<double>::infinity();
    for (Index f = 0; f < to.n_faces(); ++f) {
      const auto c = to.corners(f);
      best = std::min(best, point_triangle_distance(points[s], c[0], c[1], c[2]));
    }
    dist[s] = best;
  }
  return dist;
}

HausdorffStats hausdorff(const TriMesh& a, const TriMesh& b, std::size_t samples, std::uint64_t rng_seed)
{
  if (samples < 1000)
    throw Error("config", "at least 1000 samples are required");
  const auto ab = one_sided_distances(a, b, samples, rng_seed);
  const auto ba = one_sided_distances(b, a, samples, rng_seed + 1);
  const double diag = bbox_diagonal(a);
  if (!(diag > 0.0))
    throw Error("empty-mesh", "reference mesh has no extent");

  HausdorffStats stats;
  stats.samples = samples;
  double sum = 0.0;
  double sum_sq = 0.0;
  double max_d = 0.0;
  for (const double d : ab) {
    sum += d;
    sum_sq += d * d;
    max_d = std::max(max_d, d);
  }
  stats.mean_ab = sum / static_cast<double>(samples);
  double sum_ba = 0.0;
  for (const double d : ba) {
    sum_ba += d;
    sum_sq += d * d;
    max_d = std::max(max_d, d);
  }
  stats.mean_ba = sum_ba / static_cast<double>(samples);
  const double n = 2.0 * static_cast<double>(samples);
  stats.mean_pct = 100.0 * (sum + sum_ba) / n / diag;
  stats.rms_pct = 100.0 * std::sqrt(sum_sq / n) / diag;
  stats.max_pct = 100.0 * max_d / diag;
  return stats;
}

TriMesh dual_to_mesh(const DualMesh& dual)
{
  if (dual.periodic)
    throw Error("periodic-mesh", "periodic duals have no embedded surface");
  std::vector<Face> faces(dual.triangles.begin(), dual.triangles.end());
  return make_mesh(dual.positions, std::move(faces));
}

Histogram area_histogram(std::span<const double> areas, std::size_t bins)
{
  Histogram h;
  h.counts.assign(bins, 0);
  if (areas.empty() || bins == 0)
    return h;
  const double mean = std::accumulate(areas.begin(), areas.end(), 0.0) / static_cast<double>(areas.size());
  h.hi = 3.0 * mean;
  if (!(h.hi > 0.0)) {
    h.counts[0] = areas.size();
    return h;
  }
  for (const double a : areas) {
    auto bin = static_cast<std::size_t>(std::max(0.0, a) / h.bin_width());
    h.counts[std::min(bin, bins - 1)] += 1;
  }
  return h;
}

void write_histogram_csv(std::ostream& os, const Histogram& h, const std::string& comment)
{
  if (!comment.empty())
    os << "# " << comment << '\n';
  os << "bin_lo,bin_hi,count\n";
  char buf[96];
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double lo = h.lo + h.bin_width() * static_cast<double>(k);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", lo, lo + h.bin_width(), h.counts[k]);
    os << buf;
  }
}

std::string quality_report_json(const QualityReport& report, const std::string& extra_header_json)
{
  nlohmann::json doc;
  doc["format"] = "layertess-quality";
  doc["header"] = nlohmann::json::parse(extra_header_json);
  const QualityStats& q = report.quality;
  doc["triangles"] = q.triangles;
  doc["degenerate_triangles"] = q.degenerate;
  doc["mean_quality"] = q.mean_quality;
  doc["min_quality"] = q.min_quality;
  doc["mean_min_angle"] = q.mean_min_angle;
  doc["min_angle"] = q.min_angle;
  doc["pct_below_30"] = q.pct_below_30;
  if (report.distance) {
    const HausdorffStats& d = *report.distance;
    doc["distance"] = {{"statistic", "symmetric sampled point-to-surface distance, pooled over both directions"},
                       {"mean_pct", d.mean_pct},
                       {"rms_pct", d.rms_pct},
                       {"max_pct", d.max_pct},
                       {"mean_ab", d.mean_ab},
                       {"mean_ba", d.mean_ba},
                       {"samples_per_direction", d.samples}};
  }
  if (report.cell_areas) {
    const Histogram& h = *report.cell_areas;
    doc["cell_area_histogram"] = {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
  }
  return doc.dump(2);
}

} // namespace layertess

#include "layertess/error.hpp"
#include "layertess/lloyd.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

using namespace layertess;
using namespace layertess::testing;

namespace {

LayeredField one_cell_field(Index nv, const std::vector<Index>& members, Index seed)
{
  std::vector<std::tuple<Index, Index, double>> entries;
  std::vector<char> in(nv, 0);
  for (const Index v : members)
    in[v] = 1;
  for (Index v = 0; v < nv; ++v)
    entries.emplace_back(in[v] ? 1 : 0, v, 1.0);
  LayeredField f;
  f.phi = SparseMat::from_triplets(2, nv, entries);
  f.seeds = {seed};
  return f;
}

/// Every line/triangle hit parameter, by a plain barycentric solve.
std::vector<double> all_hits(const TriMesh& mesh, const std::vector<Index>& faces, const Vec3& o, const Vec3& d)
{
  std::vector<double> ts;
  for (const Index f : faces) {
    const auto c = mesh.corners(f);
    const Vec3 n = cross(c[1] - c[0], c[2] - c[0]);
    const double denom = dot(n, d);
    if (std::abs(denom) < 1e-14)
      continue;
    const double t = dot(n, c[0] - o) / denom;
    const Vec3 x = o + t * d;
    const double a0 = dot(cross(c[1] - x, c[2] - x), n);
    const double a1 = dot(cross(c[2] - x, c[0] - x), n);
    const double a2 = dot(cross(c[0] - x, c[1] - x), n);
    if (a0 >= 0 && a1 >= 0 && a2 >= 0)
      ts.push_back(t);
  }
  return ts;
}

} // namespace

TEST_SUITE("lloyd")
{
  TEST_CASE("cell triangles of a single vertex")
  {
    const TriMesh g = gen_periodic_grid(8, 8);
    const LayeredField f = one_cell_field(g.n_vertices(), {20}, 20);
    CHECK(cell_triangles(f, g, 1).size() == 6);

    std::vector<Index> all(g.n_vertices());
    for (Index v = 0; v < g.n_vertices(); ++v)
      all[v] = v;
    CHECK(cell_triangles(one_cell_field(g.n_vertices(), all, 0), g, 1).size() ==
          static_cast<std::size_t>(g.n_faces()));
  }

  TEST_CASE("cell triangles equal a brute-force face scan")
  {
    const TriMesh g = gen_periodic_grid(20, 20);
    LayeredField f = init_field(g, uniform_seeds(g, 5, 3));
    const Laplacian lap = build_laplacian(g);
    for (int s = 0; s < 10; ++s)
      step(f, lap, CouplingParams{});
    for (Index row = 1; row <= f.n_cells(); ++row) {
      std::vector<Index> expected;
      for (Index fi = 0; fi < g.n_faces(); ++fi) {
        bool in = false;
        for (const Index v : g.faces[fi])
          in |= f.phi.at(row, v) > 0.0;
        if (in)
          expected.push_back(fi);
      }
      CHECK(cell_triangles(f, g, row) == expected);
    }
  }

  TEST_CASE("cell triangle errors")
  {
    const TriMesh g = gen_periodic_grid(6, 6);
    LayeredField f = one_cell_field(g.n_vertices(), {}, 0);
    try {
      cell_triangles(f, g, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == "vanished-cell");
    }
    CHECK_THROWS_AS(cell_triangles(f, g, 0), Error);
    CHECK_THROWS_AS(cell_triangles(f, g, 2), Error);
  }

  TEST_CASE("centroid of one equilateral triangle")
  {
    const double h = std::sqrt(3.0) / 2.0;
    const TriMesh m = make_mesh({{0, 0, 1}, {1, 0, 1}, {0.5, h, 1}}, {{0, 1, 2}});
    const std::vector<Index> faces{0};
    const Centroid c = approx_centroid(m, faces, m.positions[0]);
    CHECK(c.point.x == doctest::Approx(0.5));
    CHECK(c.point.y == doctest::Approx(h / 3.0));
    CHECK(c.point.z == doctest::Approx(1.0));
    CHECK(c.normal.z == doctest::Approx(1.0));
  }

  TEST_CASE("planar cell centroid stays in the plane")
  {
    const TriMesh g = gen_periodic_grid(16, 16);
    LayeredField f = init_field(g, std::vector<Index>{40, 150});
    const Laplacian lap = build_laplacian(g);
    for (int s = 0; s < 15; ++s)
      step(f, lap, CouplingParams{});
    for (Index row = 1; row <= 2; ++row) {
      const Centroid c = approx_centroid(f, g, row);
      CHECK(c.point.z == 0.0);
      CHECK(std::abs(c.normal.z) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("hemispherical cap centroid on the icosphere")
  {
    const TriMesh s = gen_icosphere(4);
    const Vec3 axis = s.positions[0];
    std::vector<Index> cap;
    for (Index v = 0; v < s.n_vertices(); ++v)
      if (dot(s.positions[v], axis) > 1e-9)
        cap.push_back(v);
    const LayeredField f = one_cell_field(s.n_vertices(), cap, 0);
    const Centroid c = approx_centroid(f, s, 1);
    CHECK(norm(c.point) < 1.0);
    CHECK(norm(c.normal - axis) <= 1e-6);
    CHECK(norm(cross(c.point, axis)) <= 1e-6);
    // Cell faces reach at most one edge past the equator; the exact centroid
    // height of a spherical cap with polar angle theta is (1 + cos theta) / 2.
    double reach = 0.0;
    for (const Index fi : cell_triangles(f, s, 1))
      for (const Index v : s.faces[fi])
        reach = std::max(reach, -dot(s.positions[v], axis));
    const double lo = (1.0 - reach) / 2.0;
    const double height = dot(c.point, axis);
    CHECK(height >= lo - 0.01);
    CHECK(height <= 0.5 + 0.01);
  }

  TEST_CASE("back-projection of a point lying on the cell")
  {
    const TriMesh g = gen_periodic_grid(8, 8);
    const LayeredField f = one_cell_field(g.n_vertices(), {9, 10, 17, 18}, 9);
    const auto faces = cell_triangles(f, g, 1);
    const auto c = g.corners(faces[0]);
    const Vec3 near_first = 0.8 * c[0] + 0.1 * c[1] + 0.1 * c[2];
    const auto hit = backproject(g, std::vector<Index>{faces[0]}, near_first, {0, 0, 1});
    REQUIRE(hit);
    CHECK(*hit == g.faces[faces[0]][0]);

    // Displaced along the normal: the hit is the foot point.
    const auto lifted = backproject(g, std::vector<Index>{faces[0]}, near_first + Vec3{0, 0, 3}, {0, 0, 1});
    REQUIRE(lifted);
    CHECK(*lifted == *hit);
  }

  TEST_CASE("back-projection picks the closer of two hits")
  {
    // Two stacked unit squares at z = 0 and z = 2.
    std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 2}, {1, 0, 2}, {1, 1, 2}, {0, 1, 2}};
    std::vector<Face> faces{{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
    const TriMesh m = make_mesh(pos, faces);
    const std::vector<Index> all{0, 1, 2, 3};
    const Vec3 p{0.9, 0.2, 0.7};
    const Vec3 n{0, 0, 1};
    const auto ts = all_hits(m, all, p, n);
    REQUIRE(ts.size() >= 2);
    const double closest = *std::min_element(ts.begin(), ts.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    CHECK(closest == doctest::Approx(-0.7));
    const auto hit = backproject(m, all, p, n);
    REQUIRE(hit);
    CHECK(*hit == 1);

    // A miss returns nothing.
    CHECK_FALSE(backproject(m, all, {5, 5, 0.5}, n));
  }

  TEST_CASE("symmetric four-seed torus is a fixed point")
  {
    const Index n = 32;
    const TriMesh g = gen_periodic_grid(n, n);
    const Laplacian lap = build_laplacian(g);
    const std::vector<Index> seeds{0, n / 2, (n / 2) * n, (n / 2) * n + n / 2};
    LloydState st = lloyd_start(g, lap, CouplingParams{}, seeds);
    lloyd_iterate(st, g, lap, CouplingParams{}, 1);
    CHECK(st.seeds == seeds);
    CHECK(st.history.back().moved == 0);
  }

  TEST_CASE("icosahedron vertices are stationary on the sphere")
  {
    const TriMesh s = gen_icosphere(3);
    const Laplacian lap = build_laplacian(s);
    std::vector<Index> seeds(12);
    for (Index v = 0; v < 12; ++v)
      seeds[v] = v;
    LloydState st = lloyd_start(s, lap, CouplingParams{}, seeds);
    CHECK(lloyd_until_stationary(st, s, lap, CouplingParams{}, 2));
    CHECK(st.seeds == seeds);
  }

  TEST_CASE("one iteration records two convergence passes")
  {
    const TriMesh g = gen_periodic_grid(24, 24);
    const Laplacian lap = build_laplacian(g);
    LloydState st = lloyd_start(g, lap, CouplingParams{}, uniform_seeds(g, 6, 1));
    lloyd_iterate(st, g, lap, CouplingParams{}, 1);
    CHECK(st.history.size() == 2);
    CHECK(st.iteration == 1);
    for (const auto& rec : st.history)
      CHECK(rec.evolve_steps > 0);
    CHECK_THROWS_AS(lloyd_iterate(st, g, lap, CouplingParams{}, 0), Error);

    const auto doc = nlohmann::json::parse(history_json(st, R"({"rng":1})"));
    CHECK(doc["iterations"].size() == 2);
    CHECK(doc["header"]["rng"] == 1);
  }

  TEST_CASE("relaxation reduces the area variance")
  {
    const TriMesh g = gen_periodic_grid(48, 48);
    const Laplacian lap = build_laplacian(g);
    LloydState st = lloyd_start(g, lap, CouplingParams{}, uniform_seeds(g, 12, 5));
    lloyd_iterate(st, g, lap, CouplingParams{}, 6);
    CHECK(st.history.back().area_variance < st.history.front().area_variance);
  }

  TEST_CASE("clustered seeds: cells survive and stay distinct")
  {
    const Index n = 32;
    const TriMesh g = gen_periodic_grid(n, n);
    const Laplacian lap = build_laplacian(g);
    std::vector<Index> seeds;
    for (Index r = 0; r < 3; ++r)
      for (Index c = 0; c < 3; ++c)
        seeds.push_back((2 * r) * n + 2 * c);
    LloydState st = lloyd_start(g, lap, CouplingParams{}, seeds);
    for (int it = 0; it < 5; ++it) {
      const LayeredField previous = st.field;
      lloyd_iterate(st, g, lap, CouplingParams{}, 1);
      CHECK(st.seeds.size() == seeds.size());
      CHECK(std::set<Index>(st.seeds.begin(), st.seeds.end()).size() == seeds.size());
      // Every moved seed lies inside its own previous cell.
      for (std::size_t c = 0; c < st.seeds.size(); ++c)
        CHECK(previous.phi.at(static_cast<Index>(c) + 1, st.seeds[c]) > 0.0);
    }
    for (Index row = 1; row <= st.field.n_cells(); ++row)
      CHECK_NOTHROW(cell_triangles(st.field, g, row));
    CHECK(st.history.back().vanished.empty());
  }

  TEST_CASE("cell areas add up to the mesh area")
  {
    const TriMesh g = gen_periodic_grid(20, 20);
    LayeredField f = init_field(g, uniform_seeds(g, 4, 9));
    evolve(f, build_laplacian(g), CouplingParams{});
    const auto areas = cell_areas(f, g);
    double total = 0.0;
    for (const double a : areas)
      total += a;
    CHECK(total == doctest::Approx(g.total_area()).epsilon(1e-9));
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(variance(v) == doctest::Approx(1.25));
  }
}

#include "layertess/error.hpp"
#include "layertess/field.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace layertess;
using namespace layertess::testing;

namespace {

/// Literal dense evaluation of one step: pairwise loops over the active rows of
/// every column, Jacobi updates, clamping and column normalization.
Dense literal_step(const Dense& phi, const Dense& L, const CouplingParams& p)
{
  const std::size_t rows = phi.size();
  const std::size_t nv = phi[0].size();
  Dense lt(rows, std::vector<double>(nv, 0.0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t v = 0; v < nv; ++v)
      for (std::size_t u = 0; u < nv; ++u)
        lt[r][v] += phi[r][u] * L[v][u];

  auto coupling_e = [&](std::size_t j, std::size_t k) {
    if (j == k)
      return 0.0;
    if (j == 0)
      return -p.e_base;
    if (k == 0)
      return p.e_base;
    return p.e;
  };

  Dense out(rows, std::vector<double>(nv, 0.0));
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < rows; ++r)
      if (phi[r][v] > 0.0 || (phi[r][v] == 0.0 && lt[r][v] > 0.0))
        active.push_back(r);
    const double n = static_cast<double>(active.size());
    double s_l = 0.0, s_p = 0.0;
    for (const auto r : active) {
      s_l += lt[r][v];
      s_p += phi[r][v];
    }
    double col_sum = 0.0;
    for (const auto j : active) {
      const double al_j = p.a * (s_l - lt[j][v]);
      const double w_j = p.w * (s_p - phi[j][v]);
      double d = 0.0;
      for (const auto k : active) {
        const double al_k = p.a * (s_l - lt[k][v]);
        const double w_k = p.w * (s_p - phi[k][v]);
        const double sum = 0.5 * (al_j - al_k) + (w_j - w_k);
        d += -(p.mu / n) * (sum - coupling_e(j, k) * std::sqrt(phi[j][v] * phi[k][v]));
      }
      out[j][v] = std::clamp(phi[j][v] + d * p.dt, 0.0, 1.0);
      col_sum += out[j][v];
    }
    if (col_sum > 0.0)
      for (const auto j : active)
        out[j][v] /= col_sum;
  }
  return out;
}

double column_sum_error(const LayeredField& f)
{
  double worst = 0.0;
  for (Index c = 0; c < f.phi.n_cols; ++c) {
    double s = 0.0;
    for (const double v : f.phi.vals(c))
      s += v;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

LayeredField field_from_dense(const Dense& d, std::vector<Index> seeds)
{
  LayeredField f;
  f.phi = SparseMat::from_dense(d);
  f.seeds = std::move(seeds);
  return f;
}

} // namespace

TEST_SUITE("field")
{
  TEST_CASE("init: one seed claims its one-ring")
  {
    const TriMesh g = gen_periodic_grid(10, 10);
    const LayeredField f = init_field(g, std::vector<Index>{33});
    CHECK(f.n_cells() == 1);
    CHECK(f.phi.n_rows == 2);
    int ones = 0;
    for (Index v = 0; v < g.n_vertices(); ++v)
      ones += f.phi.at(1, v) == 1.0;
    CHECK(ones == 7);
    CHECK(f.base_mass() == doctest::Approx(100.0 - 7.0));
    CHECK(f.phi.at(0, 33) == 0.0);
    CHECK(column_sum_error(f) <= 1e-15);
  }

  TEST_CASE("init: shared ring vertex is split equally")
  {
    const TriMesh g = gen_periodic_grid(10, 10);
    // Vertices 0 and 2 on the same row share the ring vertex 1.
    const LayeredField f = init_field(g, std::vector<Index>{0, 2});
    CHECK(f.phi.at(1, 1) == 0.5);
    CHECK(f.phi.at(2, 1) == 0.5);
    CHECK(f.phi.at(0, 1) == 0.0);
  }

  TEST_CASE("init: duplicate and invalid seeds")
  {
    const TriMesh g = gen_periodic_grid(6, 6);
    try {
      init_field(g, std::vector<Index>{3, 4, 3});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == "duplicate-seed");
    }
    try {
      init_field(g, std::vector<Index>{36});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == "invalid-seed");
    }
  }

  TEST_CASE("hand-evaluated update on a five-vertex star")
  {
    // Center 0 with ring 1..4; the cell owns vertex 1, the base owns the rest.
    const TriMesh star =
      make_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}}, {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}});
    const Laplacian lap = build_laplacian(star);
    CouplingParams p;
    LayeredField f = field_from_dense({{1, 0, 1, 1, 1}, {0, 1, 0, 0, 0}}, {1});

    // At the center: Lt(base) = -1 + 3/4, Lt(cell) = 1/4, active rows {base, cell}.
    // A_L(cell) = -a/4, A_L(base) = a/4, W(cell) = w, W(base) = 0, no band term
    // since phi(cell) = 0, so d_cell = -(mu/2) (w - a/4) and d_base = -d_cell.
    const double d_cell = -(p.mu / 2.0) * (p.w - p.a / 4.0);
    const double cell = d_cell * p.dt;
    const double base = 1.0 - d_cell * p.dt;

    step(f, lap, p);
    CHECK(std::abs(f.phi.at(1, 0) - cell / (cell + base)) <= 1e-12);
    CHECK(std::abs(f.phi.at(0, 0) - base / (cell + base)) <= 1e-12);
  }

  TEST_CASE("engine matches the literal evaluation with fractional bands")
  {
    const TriMesh star =
      make_mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}}, {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}});
    const Laplacian lap = build_laplacian(star);
    CouplingParams p;
    p.dt = 1.0;
    const Dense phi{{0.3, 0.0, 0.6, 1.0, 0.2}, {0.5, 1.0, 0.4, 0.0, 0.0}, {0.2, 0.0, 0.0, 0.0, 0.8}};
    const Dense expected = literal_step(phi, lap.L.to_dense(), p);
    LayeredField f = field_from_dense(phi, {1, 4});
    step(f, lap, p);
    CHECK(max_relative_error(f.phi.to_dense(), expected) <= 1e-12);
  }

  TEST_CASE("engine and serial reference agree on a torus run")
  {
    const TriMesh g = gen_periodic_grid(16, 16);
    const Laplacian lap = build_laplacian(g);
    const CouplingParams p;
    const std::vector<Index> seeds{3, 40, 77, 130, 201};
    LayeredField a = init_field(g, seeds);
    LayeredField b = a;
    for (int s = 0; s < 40; ++s) {
      step(a, lap, p);
      reference::step(b, lap, p);
      REQUIRE(max_relative_error(a.phi.to_dense(), b.phi.to_dense()) <= 1e-12);
    }
    const Dense literal = literal_step(a.phi.to_dense(), lap.L.to_dense(), p);
    step(a, lap, p);
    CHECK(max_relative_error(a.phi.to_dense(), literal) <= 1e-12);
  }

  TEST_CASE("a field covering the whole mesh is a fixed point")
  {
    const TriMesh g = gen_periodic_grid(8, 8);
    const Laplacian lap = build_laplacian(g);
    Dense d(2, std::vector<double>(64, 0.0));
    std::fill(d[1].begin(), d[1].end(), 1.0);
    LayeredField f = field_from_dense(d, {0});
    const SparseMat before = f.phi;
    const StepStats st = step(f, lap, CouplingParams{});
    CHECK(f.phi == before);
    CHECK(st.max_delta == 0.0);
  }

  TEST_CASE("partition of unity, range and locality on every step")
  {
    const TriMesh g = gen_periodic_grid(24, 24);
    const Laplacian lap = build_laplacian(g);
    const auto nbrs = g.vertex_neighbors();
    LayeredField f = init_field(g, uniform_seeds(g, 6, 2));
    FieldEngine engine;
    for (int s = 0; s < 60; ++s) {
      const SparseMat before = f.phi;
      engine.step(f, lap, CouplingParams{});
      CHECK(column_sum_error(f) <= 1e-9);
      for (const double v : f.phi.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (Index c = 0; c < f.phi.n_cols; ++c)
        for (const Index r : f.phi.rows(c)) {
          bool near = before.at(r, c) != 0.0;
          for (const Index u : nbrs[c])
            near |= before.at(r, u) != 0.0;
          REQUIRE(near);
        }
    }
  }

  TEST_CASE("translated seed pair evolves symmetrically")
  {
    const Index n = 16;
    const TriMesh g = gen_periodic_grid(n, n);
    const Laplacian lap = build_laplacian(g);
    // Shifting every vertex by half a period along u swaps the two seeds.
    auto shift = [&](Index v) { return (v / n) * n + (v % n + n / 2) % n; };
    const Index s0 = 5 * n + 2;
    LayeredField f = init_field(g, std::vector<Index>{s0, shift(s0)});
    for (int s = 0; s < 30; ++s) {
      step(f, lap, CouplingParams{});
      for (Index v = 0; v < g.n_vertices(); ++v) {
        REQUIRE(std::abs(f.phi.at(1, v) - f.phi.at(2, shift(v))) <= 1e-12);
        REQUIRE(std::abs(f.phi.at(0, v) - f.phi.at(0, shift(v))) <= 1e-12);
      }
    }
  }

  TEST_CASE("relabeling seeds permutes rows")
  {
    const TriMesh g = gen_periodic_grid(20, 20);
    const Laplacian lap = build_laplacian(g);
    const std::vector<Index> seeds = uniform_seeds(g, 4, 8);
    const std::vector<Index> swapped{seeds[2], seeds[0], seeds[3], seeds[1]};
    LayeredField a = init_field(g, seeds);
    LayeredField b = init_field(g, swapped);
    for (int s = 0; s < 25; ++s) {
      step(a, lap, CouplingParams{});
      step(b, lap, CouplingParams{});
    }
    const Index perm[] = {0, 2, 4, 1, 3}; // row of `a` -> row of `b`
    for (Index r = 0; r < 5; ++r)
      for (Index v = 0; v < g.n_vertices(); ++v)
        REQUIRE(std::abs(a.phi.at(r, v) - b.phi.at(perm[r], v)) <= 1e-12);
  }

  TEST_CASE("evolve converges and exhausts the base layer")
  {
    const Index n = 50;
    const TriMesh g = gen_periodic_grid(n, n);
    const Laplacian lap = build_laplacian(g);
    const std::vector<Index> seeds{12 * n + 12, 12 * n + 37, 37 * n + 12, 37 * n + 37};
    LayeredField f = init_field(g, seeds);
    const EvolveResult r = evolve(f, lap, CouplingParams{});
    CHECK(r.converged);
    CHECK(f.base_mass() < 1e-9 * g.n_vertices());
    CHECK(r.trace.size() == f.step_count);

    // Converged input stops after one step.
    const EvolveResult again = evolve(f, lap, CouplingParams{});
    CHECK(again.trace.size() == 1);
    CHECK(again.converged);

    // The observer sees every step.
    LayeredField h = init_field(g, seeds);
    std::size_t seen = 0;
    evolve(h, lap, CouplingParams{}, {}, [&](const LayeredField&, const StepStats&) { ++seen; });
    CHECK(seen == h.step_count);
  }

  TEST_CASE("time step has little influence on converged labels")
  {
    const Index n = 50;
    const TriMesh g = gen_periodic_grid(n, n);
    const Laplacian lap = build_laplacian(g);
    const std::vector<Index> seeds{12 * n + 12, 12 * n + 37, 37 * n + 12, 37 * n + 37};
    std::vector<std::vector<Index>> labels;
    for (const double dt : {0.1, 1.0, 5.0}) {
      CouplingParams p;
      p.dt = dt;
      LayeredField f = init_field(g, seeds);
      StopCriteria stop;
      stop.max_steps = 50000;
      CHECK(evolve(f, lap, p, stop).converged);
      labels.push_back(sharp_labels(f));
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        std::size_t same = 0;
        for (std::size_t v = 0; v < labels[i].size(); ++v)
          same += labels[i][v] == labels[j][v];
        CHECK(static_cast<double>(same) / labels[i].size() >= 0.98);
      }
  }

  TEST_CASE("sharp labels")
  {
    LayeredField f = field_from_dense({{0, 0, 1}, {0, 0, 0}, {0.0, 0.5, 0}, {0.9, 0, 0}, {0, 0.5, 0}, {0.1, 0, 0}},
                                      {0, 1, 2, 3, 4});
    const auto labels = sharp_labels(f);
    CHECK(labels[0] == 2); // row 3 is cell 2
    CHECK(labels[1] == 1); // tie between rows 2 and 4 goes to the lower one
    CHECK(labels[2] == unclaimed);
  }

  TEST_CASE("band fraction")
  {
    LayeredField f = field_from_dense({{0, 0, 0, 0}, {1, 0.5, 0, 0.2}, {0, 0.5, 1, 0.8}}, {0, 2});
    CHECK(band_fraction(f) == doctest::Approx(0.5));
  }

  TEST_CASE("non-finite values are reported")
  {
    const TriMesh g = gen_periodic_grid(6, 6);
    const Laplacian lap = build_laplacian(g);
    LayeredField f = init_field(g, std::vector<Index>{0});
    f.phi.values[0] = std::nan("");
    try {
      step(f, lap, CouplingParams{});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.code() == "numerical-blowup" || e.code() == "negative-field"));
    }
  }

  TEST_CASE("invalid coupling parameters")
  {
    CouplingParams p;
    p.dt = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.e = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
  }

  TEST_CASE("snapshot round trip")
  {
    const TriMesh g = gen_periodic_grid(8, 8);
    LayeredField f = init_field(g, std::vector<Index>{1, 30});
    step(f, build_laplacian(g), CouplingParams{});
    CouplingParams p;
    p.e = 0.5;
    std::stringstream ss;
    write_field_snapshot(ss, f, p, R"({"note":"x"})");
    CouplingParams back_params;
    std::string header;
    const LayeredField back = read_field_snapshot(ss, &back_params, &header);
    CHECK(back.phi == f.phi);
    CHECK(back.seeds == f.seeds);
    CHECK(back.step_count == 1);
    CHECK(back_params.e == 0.5);
    CHECK(header.find("\"note\":\"x\"") != std::string::npos);
  }

  TEST_CASE("step buffers stop growing")
  {
    const TriMesh g = gen_periodic_grid(32, 32);
    const Laplacian lap = build_laplacian(g);
    LayeredField f = init_field(g, uniform_seeds(g, 8, 4));
    FieldEngine engine;
    for (int s = 0; s < 150; ++s)
      engine.step(f, lap, CouplingParams{});
    std::size_t late = 0;
    for (int s = 0; s < 20; ++s)
      late += engine.step(f, lap, CouplingParams{}).reallocations;
    CHECK(late == 0);
  }
}

// Serial reference kernels against the OpenMP kernels on a realistic field.

#include "layertess/field.hpp"
#include "layertess/mesh.hpp"
#include "layertess/parallel.hpp"
#include "layertess/sparse.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <random>

using namespace layertess;

namespace {

struct Workload
{
  TriMesh mesh;
  Laplacian lap;
  LayeredField field;
  SparseMat lt;
};

/// Torus of side n with n / 8 random seeds, evolved for 40 steps so the field
/// has narrow bands.
const Workload& workload(Index n)
{
  static std::map<Index, Workload> cache;
  auto it = cache.find(n);
  if (it != cache.end())
    return it->second;
  Workload w;
  w.mesh = gen_periodic_grid(n, n);
  w.lap = build_laplacian(w.mesh);
  std::mt19937_64 gen(1);
  std::vector<Index> ids(w.mesh.n_vertices());
  for (Index v = 0; v < w.mesh.n_vertices(); ++v)
    ids[v] = v;
  std::shuffle(ids.begin(), ids.end(), gen);
  ids.resize(static_cast<std::size_t>(n) * n / 64);
  w.field = init_field(w.mesh, ids);
  for (int s = 0; s < 40; ++s)
    step(w.field, w.lap, CouplingParams{});
  w.lt = spgemm(w.field.phi, w.lap.Lt);
  return cache.emplace(n, std::move(w)).first->second;
}

void set_threads(benchmark::State& state)
{
  set_num_threads(static_cast<int>(state.range(1)));
}

void BM_spgemm_reference(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::spgemm(w.field.phi, w.lap.Lt));
}

void BM_spgemm_parallel(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  set_threads(state);
  SparseMat out;
  for (auto _ : state) {
    spgemm_into(w.field.phi, w.lap.Lt, out);
    benchmark::DoNotOptimize(out.values.data());
  }
  set_num_threads(0);
}

void BM_transpose_reference(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::transpose(w.field.phi));
}

void BM_transpose_parallel(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  set_threads(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(transpose(w.field.phi));
  set_num_threads(0);
}

void BM_skeleton_reference(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::build_skeleton(w.field.phi, w.lt));
}

void BM_skeleton_parallel(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  set_threads(state);
  Skeleton skel;
  for (auto _ : state) {
    build_skeleton_into(w.field.phi, w.lt, skel);
    benchmark::DoNotOptimize(skel.row_idx.data());
  }
  set_num_threads(0);
}

void BM_normalize_reference(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::normalize_columns(w.field.phi));
}

void BM_normalize_parallel(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  set_threads(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(normalize_columns(w.field.phi));
  set_num_threads(0);
}

void BM_step_reference(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  for (auto _ : state) {
    state.PauseTiming();
    LayeredField f = w.field;
    state.ResumeTiming();
    reference::step(f, w.lap, CouplingParams{});
    benchmark::DoNotOptimize(f.phi.values.data());
  }
}

void BM_step_parallel(benchmark::State& state)
{
  const Workload& w = workload(static_cast<Index>(state.range(0)));
  set_threads(state);
  FieldEngine engine;
  for (auto _ : state) {
    state.PauseTiming();
    LayeredField f = w.field;
    state.ResumeTiming();
    engine.step(f, w.lap, CouplingParams{});
    benchmark::DoNotOptimize(f.phi.values.data());
  }
  set_num_threads(0);
}

void serial_sizes(benchmark::internal::Benchmark* b)
{
  for (const int n : {64, 128, 256})
    b->Args({n, 1});
}

void parallel_sizes(benchmark::internal::Benchmark* b)
{
  const int max_threads = std::max(1, layertess::max_threads());
  for (const int n : {64, 128, 256})
    for (int t = 1; t <= max_threads; t *= 2)
      b->Args({n, t});
}

} // namespace

BENCHMARK(BM_spgemm_reference)->Apply(serial_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_spgemm_parallel)->Apply(parallel_sizes)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_transpose_reference)->Apply(serial_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_transpose_parallel)->Apply(parallel_sizes)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_skeleton_reference)->Apply(serial_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_skeleton_parallel)->Apply(parallel_sizes)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_normalize_reference)->Apply(serial_sizes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_normalize_parallel)->Apply(parallel_sizes)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_step_reference)->Apply(serial_sizes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_step_parallel)->Apply(parallel_sizes)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

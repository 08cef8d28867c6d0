#include "layertess/field.hpp"

#include "layertess/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace layertess {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

void CouplingParams::validate() const
{
  auto require = [](bool ok, const char* what) {
    if (!ok)
      throw Error("config", what);
  };
  require(std::isfinite(w) && w > 0.0, "w must be positive");
  require(std::isfinite(a) && a > 0.0, "a must be positive");
  require(std::isfinite(mu) && mu > 0.0, "mu must be positive");
  require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  require(std::isfinite(e) && e >= 0.0, "e must be nonnegative");
  require(std::isfinite(e_base) && e_base >= 0.0, "e_base must be nonnegative");
}

double LayeredField::base_mass() const
{
  double sum = 0.0;
  for (Index c = 0; c < phi.n_cols; ++c) {
    const Index p = phi.col_ptr[c];
    if (p < phi.col_ptr[c + 1] && phi.row_idx[p] == base_row)
      sum += phi.values[p];
  }
  return sum;
}

LayeredField init_field(const TriMesh& mesh, std::span<const Index> seeds)
{
  const Index nv = mesh.n_vertices();
  std::vector<char> used(nv, 0);
  for (const Index s : seeds) {
    if (s < 0 || s >= nv)
      throw Error("invalid-seed", "seed vertex " + std::to_string(s) + " out of range");
    if (used[s])
      throw Error("duplicate-seed", "seed vertex " + std::to_string(s) + " given twice");
    used[s] = 1;
  }

  const auto nbrs = mesh.vertex_neighbors();
  std::vector<std::vector<Index>> claims(nv);
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto row = static_cast<Index>(k + 1);
    claims[seeds[k]].push_back(row);
    for (const Index u : nbrs[seeds[k]])
      claims[u].push_back(row);
  }

  LayeredField field;
  field.seeds.assign(seeds.begin(), seeds.end());
  field.phi = SparseMat(static_cast<Index>(seeds.size()) + 1, nv);
  SparseMat& phi = field.phi;
  for (Index v = 0; v < nv; ++v) {
    auto& rows = claims[v];
    if (rows.empty()) {
      phi.row_idx.push_back(base_row);
      phi.values.push_back(1.0);
    } else {
      std::sort(rows.begin(), rows.end());
      const double share = 1.0 / static_cast<double>(rows.size());
      for (const Index r : rows) {
        phi.row_idx.push_back(r);
        phi.values.push_back(share);
      }
    }
    phi.col_ptr[v + 1] = static_cast<Index>(phi.row_idx.size());
  }
  return field;
}

std::size_t FieldEngine::reallocations() const
{
  return lt_.reallocations + skeleton_.reallocations + phi_hat_.reallocations +
         lt_hat_.reallocations + next_.reallocations;
}

StepStats FieldEngine::step(LayeredField& field, const Laplacian& lap, const CouplingParams& params)
{
  const SparseMat& phi = field.phi;
  if (phi.n_cols != lap.Lt.n_rows || lap.Lt.n_rows != lap.Lt.n_cols)
    throw Error("shape", "field and Laplacian sizes differ");

  StepStats stats;
  const std::size_t realloc_before = reallocations();

  auto t0 = Clock::now();
  spgemm_into(phi, lap.Lt, lt_);
  stats.spgemm_time = seconds_since(t0);

  t0 = Clock::now();
  count_skeleton_columns(phi, lt_, skeleton_);
  stats.skeleton_time = seconds_since(t0);

  t0 = Clock::now();
  fill_expanded_skeleton(phi, lt_, skeleton_, phi_hat_, lt_hat_);
  stats.expand_time = seconds_since(t0);

  t0 = Clock::now();
  const Index n_cols = phi.n_cols;
  const std::size_t nnz_hat = skeleton_.nnz();
  updated_.resize(nnz_hat);
  const double a = params.a;
  const double w = params.w;
  const double mu = params.mu;
  const double dt = params.dt;
  std::atomic<Index> blowup{-1};

#pragma omp parallel for schedule(dynamic, 512)
  for (Index c = 0; c < n_cols; ++c) {
    const Index begin = skeleton_.col_ptr[c];
    const Index end = skeleton_.col_ptr[c + 1];
    const Index n = end - begin;
    if (n == 0)
      continue;
    const double* val = phi_hat_.values.data() + begin;
    const double* lap_val = lt_hat_.values.data() + begin;
    const Index* rows = skeleton_.row_idx.data() + begin;

    // The pairwise sums over k collapse to column totals, which keeps the
    // update linear in the number of active rows.
    double sum_lt = 0.0;
    double sum_phi = 0.0;
    double sum_root_cells = 0.0;
    double root_base = 0.0;
    for (Index q = 0; q < n; ++q) {
      sum_lt += lap_val[q];
      sum_phi += val[q];
      if (rows[q] == base_row)
        root_base = std::sqrt(val[q]);
      else
        sum_root_cells += std::sqrt(val[q]);
    }
    const double nd = static_cast<double>(n);
    // sum_k A_L(k) and sum_k W(k) with A_L(k) = a (S_L - lt_k), W(k) = w (S_phi - phi_k).
    const double total_al = a * (nd - 1.0) * sum_lt;
    const double total_wp = w * (nd - 1.0) * sum_phi;
    const double scale = mu / nd;
    for (Index j = 0; j < n; ++j) {
      const double al_j = a * (sum_lt - lap_val[j]);
      const double wp_j = w * (sum_phi - val[j]);
      const double root_j = std::sqrt(val[j]);
      double band = 0.0;
      if (rows[j] == base_row)
        band = -params.e_base * sum_root_cells;
      else
        band = params.e * (sum_root_cells - root_j) + params.e_base * root_base;
      const double d = -scale * (0.5 * (nd * al_j - total_al) + (nd * wp_j - total_wp) - root_j * band);
      double v = val[j] + d * dt;
      if (!std::isfinite(v)) {
        Index expected = -1;
        blowup.compare_exchange_strong(expected, c);
      }
      if (v > 1.0)
        v = 1.0;
      if (v <= 0.0)
        v = 0.0;
      updated_[begin + j] = v;
    }
  }
  if (blowup.load() >= 0)
    throw Error("numerical-blowup", "non-finite value in column " + std::to_string(blowup.load()) +
                                        " at step " + std::to_string(field.step_count + 1));
  stats.update_time = seconds_since(t0);

  // Normalize and drop the zeros introduced by clamping in one pass.
  t0 = Clock::now();
  nnz_per_col_.assign(static_cast<std::size_t>(n_cols) + 1, 0);
  col_sum_.resize(static_cast<std::size_t>(n_cols));
  std::atomic<Index> empty_col{-1};
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < n_cols; ++c) {
    Index count = 0;
    double sum = 0.0;
    for (Index p = skeleton_.col_ptr[c]; p < skeleton_.col_ptr[c + 1]; ++p) {
      if (updated_[p] > 0.0) {
        ++count;
        sum += updated_[p];
      }
    }
    if (!(sum > 0.0)) {
      Index expected = -1;
      empty_col.compare_exchange_strong(expected, c);
    }
    nnz_per_col_[c + 1] = count;
    col_sum_[c] = sum;
  }
  if (empty_col.load() >= 0)
    throw Error("numerical-blowup", "column " + std::to_string(empty_col.load()) +
                                        " lost all mass at step " + std::to_string(field.step_count + 1));
  for (Index c = 0; c < n_cols; ++c)
    nnz_per_col_[c + 1] += nnz_per_col_[c];

  next_.n_rows = phi.n_rows;
  next_.n_cols = n_cols;
  next_.col_ptr.assign(nnz_per_col_.begin(), nnz_per_col_.end());
  const std::size_t nnz_next = next_.nnz();
  ensure_capacity(next_, nnz_next);
  next_.row_idx.resize(nnz_next);
  next_.values.resize(nnz_next);

  double max_delta = 0.0;
#pragma omp parallel for schedule(static) reduction(max : max_delta)
  for (Index c = 0; c < n_cols; ++c) {
    const double inv = 1.0 / col_sum_[c];
    double base = 0.0;
    Index out = next_.col_ptr[c];
    for (Index p = skeleton_.col_ptr[c]; p < skeleton_.col_ptr[c + 1]; ++p) {
      const double v = updated_[p] > 0.0 ? updated_[p] * inv : 0.0;
      max_delta = std::max(max_delta, std::abs(v - phi_hat_.values[p]));
      if (v > 0.0) {
        next_.row_idx[out] = skeleton_.row_idx[p];
        next_.values[out] = v;
        if (skeleton_.row_idx[p] == base_row)
          base = v;
        ++out;
      }
    }
    col_sum_[c] = base;
  }
  // Serial sum keeps the stopping test independent of the thread count.
  double base_mass = 0.0;
  for (Index c = 0; c < n_cols; ++c)
    base_mass += col_sum_[c];
  std::swap(field.phi, next_);
  ++field.step_count;
  stats.normalize_time = seconds_since(t0);

  stats.max_delta = max_delta;
  stats.base_mass = base_mass;
  stats.nnz_phi = field.phi.nnz();
  stats.reallocations = reallocations() - realloc_before;
  return stats;
}

StepStats step(LayeredField& field, const Laplacian& lap, const CouplingParams& params)
{
  FieldEngine engine;
  return engine.step(field, lap, params);
}

EvolveResult evolve(LayeredField& field, const Laplacian& lap, const CouplingParams& params,
                    const StopCriteria& stop, const StepObserver& observer)
{
  if (stop.max_steps < 1)
    throw Error("config", "max_steps must be at least 1");
  params.validate();
  EvolveResult result;
  FieldEngine engine;
  const double base_limit = 1e-9 * static_cast<double>(field.n_vertices());
  for (std::size_t s = 0; s < stop.max_steps; ++s) {
    result.trace.push_back(engine.step(field, lap, params));
    const StepStats& st = result.trace.back();
    if (observer)
      observer(field, st);
    if (st.max_delta < stop.tol && st.base_mass < base_limit) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::vector<Index> sharp_labels(const LayeredField& field)
{
  const SparseMat& phi = field.phi;
  std::vector<Index> labels(phi.n_cols, unclaimed);
  for (Index c = 0; c < phi.n_cols; ++c) {
    Index best_row = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Index p = phi.col_ptr[c]; p < phi.col_ptr[c + 1]; ++p) {
      if (phi.values[p] > best) {
        best = phi.values[p];
        best_row = phi.row_idx[p];
      }
    }
    labels[c] = best_row > base_row ? best_row - 1 : unclaimed;
  }
  return labels;
}

double band_fraction(const LayeredField& field)
{
  const SparseMat& phi = field.phi;
  if (phi.n_cols == 0)
    return 0.0;
  Index band = 0;
  for (Index c = 0; c < phi.n_cols; ++c) {
    int cells = 0;
    for (Index p = phi.col_ptr[c]; p < phi.col_ptr[c + 1]; ++p)
      if (phi.row_idx[p] != base_row && phi.values[p] > 0.0)
        ++cells;
    if (cells >= 2)
      ++band;
  }
  return static_cast<double>(band) / static_cast<double>(phi.n_cols);
}

} // namespace layertess

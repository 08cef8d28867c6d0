#pragma once

#include "layertess/mesh.hpp"
#include "layertess/sparse.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace layertess {

/// Row of the field matrix holding the base layer (unclaimed territory).
inline constexpr Index base_row = 0;
/// Sharp label of a vertex still dominated by the base layer.
inline constexpr Index unclaimed = -1;

/// Uniform coupling constants of the update rule. Pairwise couplings are
/// w, a, e between distinct layers and zero on the diagonal.
///
/// Between a cell and the base layer the band term is antisymmetric: +e_base
/// on the cell side, -e_base on the base side. This is what makes cells
/// consume unclaimed territory; with e_base = 0 a small seed region shrinks.
struct CouplingParams
{
  double w = 0.2;
  double a = 1.0;
  double e = 1.0;
  double e_base = 1.0;
  double mu = 0.2;
  double dt = 5.0;

  /// Throws Error("config") on out-of-range values.
  void validate() const;
};

/// Sparse (n_cells + 1) x n_vertices field. Row 0 is the base layer, row r > 0
/// belongs to the cell seeded at seeds[r - 1].
struct LayeredField
{
  SparseMat phi;
  std::vector<Index> seeds;
  std::size_t step_count = 0;

  Index n_cells() const { return phi.n_rows - 1; }
  Index n_vertices() const { return phi.n_cols; }
  double base_mass() const;
};

struct StepStats
{
  double max_delta = 0.0;
  std::size_t nnz_phi = 0;
  double base_mass = 0.0;
  // Wall-clock seconds per phase. The skeleton phase sizes the interest
  // skeleton; the expand phase writes its rows together with both operands.
  double spgemm_time = 0.0;
  double skeleton_time = 0.0;
  double expand_time = 0.0;
  double update_time = 0.0;
  double normalize_time = 0.0;
  /// Storage growth events of the preallocated step buffers during this step.
  std::size_t reallocations = 0;

  double total_time() const
  {
    return spgemm_time + skeleton_time + expand_time + update_time + normalize_time;
  }
};

/// Sets each seed and its one-ring to 1 in the seed's row and the base layer
/// to 1 everywhere else. Vertices claimed by several seeds are shared equally.
LayeredField init_field(const TriMesh& mesh, std::span<const Index> seeds);

/// Owns the buffers reused across steps (field Laplacian, interest skeleton,
/// expanded operands) so that steady-state stepping does not allocate.
class FieldEngine
{
public:
  StepStats step(LayeredField& field, const Laplacian& lap, const CouplingParams& params);

  std::size_t reallocations() const;

private:
  SparseMat lt_;
  Skeleton skeleton_;
  SparseMat phi_hat_;
  SparseMat lt_hat_;
  std::vector<double> updated_;
  std::vector<Index> nnz_per_col_;
  std::vector<double> col_sum_;
  SparseMat next_;
};

/// One explicit Euler step of the layered field. Throws
/// Error("numerical-blowup") when a non-finite value appears.
StepStats step(LayeredField& field, const Laplacian& lap, const CouplingParams& params);

struct StopCriteria
{
  std::size_t max_steps = 10000;
  double tol = 1e-4;
};

struct EvolveResult
{
  std::vector<StepStats> trace;
  bool converged = false;
};

/// Steps until the per-entry change drops below tol and the base layer is
/// exhausted, or until max_steps.
using StepObserver = std::function<void(const LayeredField&, const StepStats&)>;

/// `observer`, when set, runs after every step.
EvolveResult evolve(LayeredField& field, const Laplacian& lap, const CouplingParams& params,
                    const StopCriteria& stop = {}, const StepObserver& observer = {});

/// Per-vertex cell index with the largest field value; `unclaimed` where the
/// base layer dominates. Ties go to the lowest row.
std::vector<Index> sharp_labels(const LayeredField& field);

/// Fraction of vertices where at least two cell layers are nonzero.
double band_fraction(const LayeredField& field);

/// Snapshot: one '#'-prefixed JSON header line followed by the triplet body.
void write_field_snapshot(std::ostream& os, const LayeredField& field, const CouplingParams& params,
                          const std::string& extra_header_json = "{}");
/// `header_json` receives the full header line when given.
LayeredField read_field_snapshot(std::istream& is, CouplingParams* params = nullptr,
                                 std::string* header_json = nullptr);

/// CSV `vertex_id,label` with -1 for unclaimed vertices.
void write_labels_csv(std::ostream& os, std::span<const Index> labels, const std::string& comment = {});

namespace reference {
/// Literal serial evaluation of the update with triple nested loops over the
/// active rows and dense coupling matrices. Kept as a test oracle.
void step(LayeredField& field, const Laplacian& lap, const CouplingParams& params);
} // namespace reference

} // namespace layertess

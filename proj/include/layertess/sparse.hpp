#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <tuple>
#include <vector>

namespace layertess {

using Index = std::int32_t;

/// Nonzero pattern of a CSC matrix without values.
///
/// Used as the "interest skeleton" of one field step: column i lists the layers
/// that take part in the update at vertex i.
struct Skeleton
{
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> col_ptr = {0};
  std::vector<Index> row_idx;
  /// Number of times the row index storage had to grow.
  std::size_t reallocations = 0;

  Skeleton() = default;
  Skeleton(Index rows, Index cols);

  std::size_t nnz() const { return static_cast<std::size_t>(col_ptr.back()); }
  std::size_t capacity() const { return row_idx.capacity(); }
  std::span<const Index> rows(Index col) const
  {
    return {row_idx.data() + col_ptr[col], row_idx.data() + col_ptr[col + 1]};
  }

  void validate() const;
  bool same_pattern(const Skeleton& other) const;
};

/// Compressed sparse column matrix with 32-bit indices and double values.
///
/// Public kernels return canonical matrices: rows sorted and unique inside each
/// column, no explicit zeros. Matrices expanded onto a skeleton are the one
/// exception and may carry explicit zeros.
struct SparseMat
{
  Index n_rows = 0;
  Index n_cols = 0;
  std::vector<Index> col_ptr = {0};
  std::vector<Index> row_idx;
  std::vector<double> values;
  std::size_t reallocations = 0;

  SparseMat() = default;
  SparseMat(Index rows, Index cols);

  static SparseMat identity(Index n);
  /// Builds a canonical matrix; duplicate coordinates are summed and zeros dropped.
  static SparseMat from_triplets(Index rows, Index cols,
                                 std::span<const std::tuple<Index, Index, double>> entries);
  static SparseMat from_dense(const std::vector<std::vector<double>>& rows);

  std::size_t nnz() const { return static_cast<std::size_t>(col_ptr.back()); }
  std::size_t capacity() const { return row_idx.capacity(); }

  std::span<const Index> rows(Index col) const
  {
    return {row_idx.data() + col_ptr[col], row_idx.data() + col_ptr[col + 1]};
  }
  std::span<const double> vals(Index col) const
  {
    return {values.data() + col_ptr[col], values.data() + col_ptr[col + 1]};
  }
  std::span<double> vals(Index col)
  {
    return {values.data() + col_ptr[col], values.data() + col_ptr[col + 1]};
  }

  /// Entry lookup by binary search inside the column; absent entries read as 0.
  double at(Index row, Index col) const;

  std::vector<std::vector<double>> to_dense() const;
  Skeleton pattern() const;

  /// Throws Error("invalid-structure") when a CSC invariant is broken.
  void validate() const;

  /// Drops explicitly stored zeros.
  void prune_zeros();

  friend bool operator==(const SparseMat& a, const SparseMat& b)
  {
    return a.n_rows == b.n_rows && a.n_cols == b.n_cols && a.col_ptr == b.col_ptr &&
           a.row_idx == b.row_idx && a.values == b.values;
  }
};

/// Makes sure the entry storage of `mat` can hold `needed` entries.
///
/// Growth is by at least 20% of the current capacity so a slowly growing
/// matrix does not reallocate every step. Returns true when storage grew.
bool ensure_capacity(SparseMat& mat, std::size_t needed);
bool ensure_capacity(Skeleton& skel, std::size_t needed);

/// C = A * B. Parallel over output columns.
SparseMat spgemm(const SparseMat& a, const SparseMat& b);
/// Same as spgemm but writes into `c`, reusing its storage.
void spgemm_into(const SparseMat& a, const SparseMat& b, SparseMat& c);

SparseMat transpose(const SparseMat& a);

/// Column i holds rows r with phi(r,i) > 0, or phi(r,i) == 0 and lt(r,i) > 0.
Skeleton build_skeleton(const SparseMat& phi, const SparseMat& lt);
void build_skeleton_into(const SparseMat& phi, const SparseMat& lt, Skeleton& out);

/// Two halves of build_skeleton_into fused with expansion, used by the field
/// step: the first sizes the skeleton, the second writes its rows together with
/// phi expanded onto it and lt gathered onto it, in one merge per column.
void count_skeleton_columns(const SparseMat& phi, const SparseMat& lt, Skeleton& skel);
void fill_expanded_skeleton(const SparseMat& phi, const SparseMat& lt, Skeleton& skel, SparseMat& phi_hat,
                            SparseMat& lt_hat);

/// Copies `a` onto the pattern of `skel`, storing explicit zeros where `a` has
/// no entry. Throws Error("pattern-violation") if `a` has a nonzero outside it.
SparseMat expand_to_skeleton(const SparseMat& a, const Skeleton& skel);
/// Like expand_to_skeleton, but entries of `a` outside the skeleton are dropped.
SparseMat gather_to_skeleton(const SparseMat& a, const Skeleton& skel);
/// Buffer-reusing form of the two above; `strict` selects expand semantics.
void onto_skeleton_into(const SparseMat& a, const Skeleton& skel, SparseMat& out, bool strict);

/// Scales every column with positive sum to sum 1. Zero-sum columns are left
/// as they are and their indices appended to `zero_sum_columns` when given.
/// Throws Error("negative-field") on a negative entry.
SparseMat normalize_columns(const SparseMat& a, std::vector<Index>* zero_sum_columns = nullptr);

/// Elementwise map to 1.0 for entries >= threshold, dropping the rest.
SparseMat binarize(const SparseMat& a, double threshold);

/// Triplet text format: header `rows cols nnz`, then `row col value` per entry.
/// Lines starting with '#' are comments.
void write_triplets(std::ostream& os, const SparseMat& a);
SparseMat read_triplets(std::istream& is);

/// Serial implementations kept as a baseline for tests and benchmarks.
namespace reference {
SparseMat spgemm(const SparseMat& a, const SparseMat& b);
SparseMat transpose(const SparseMat& a);
Skeleton build_skeleton(const SparseMat& phi, const SparseMat& lt);
SparseMat normalize_columns(const SparseMat& a);
} // namespace reference

} // namespace layertess

#include "layertess/sparse.hpp"

#include "layertess/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

namespace layertess {

namespace {

void exclusive_scan_counts(std::vector<Index>& col_ptr)
{
  // col_ptr[c + 1] holds the count of column c on entry.
  for (std::size_t c = 1; c < col_ptr.size(); ++c)
    col_ptr[c] += col_ptr[c - 1];
}

std::size_t grown_capacity(std::size_t current, std::size_t needed)
{
  const auto grown = static_cast<std::size_t>(std::ceil(1.2 * static_cast<double>(current)));
  return std::max(needed, grown);
}

} // namespace

Skeleton::Skeleton(Index rows, Index cols)
  : n_rows(rows), n_cols(cols), col_ptr(static_cast<std::size_t>(cols) + 1, 0)
{
}

void Skeleton::validate() const
{
  if (n_rows < 0 || n_cols < 0 || col_ptr.size() != static_cast<std::size_t>(n_cols) + 1 ||
      col_ptr.front() != 0 || row_idx.size() != nnz())
    throw Error("invalid-structure", "skeleton header inconsistent");
  for (Index c = 0; c < n_cols; ++c) {
    if (col_ptr[c + 1] < col_ptr[c])
      throw Error("invalid-structure", "column pointers decrease at column " + std::to_string(c));
    for (Index p = col_ptr[c]; p < col_ptr[c + 1]; ++p) {
      if (row_idx[p] < 0 || row_idx[p] >= n_rows)
        throw Error("invalid-structure", "row index out of range in column " + std::to_string(c));
      if (p > col_ptr[c] && row_idx[p] <= row_idx[p - 1])
        throw Error("invalid-structure", "rows not strictly increasing in column " + std::to_string(c));
    }
  }
}

bool Skeleton::same_pattern(const Skeleton& other) const
{
  return n_rows == other.n_rows && n_cols == other.n_cols && col_ptr == other.col_ptr &&
         row_idx == other.row_idx;
}

SparseMat::SparseMat(Index rows, Index cols)
  : n_rows(rows), n_cols(cols), col_ptr(static_cast<std::size_t>(cols) + 1, 0)
{
  if (rows < 0 || cols < 0)
    throw Error("shape", "negative matrix dimension");
}

SparseMat SparseMat::identity(Index n)
{
  SparseMat m(n, n);
  m.row_idx.resize(n);
  m.values.assign(n, 1.0);
  for (Index i = 0; i < n; ++i) {
    m.row_idx[i] = i;
    m.col_ptr[i + 1] = i + 1;
  }
  return m;
}

SparseMat SparseMat::from_triplets(Index rows, Index cols,
                                   std::span<const std::tuple<Index, Index, double>> entries)
{
  std::vector<std::tuple<Index, Index, double>> sorted;
  sorted.reserve(entries.size());
  for (const auto& [r, c, v] : entries) {
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw Error("shape", "triplet (" + std::to_string(r) + ", " + std::to_string(c) +
                               ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    sorted.emplace_back(c, r, v);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) {
    return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
  });

  SparseMat m(rows, cols);
  m.row_idx.reserve(sorted.size());
  m.values.reserve(sorted.size());
  std::size_t i = 0;
  while (i < sorted.size()) {
    const auto [c, r, v0] = sorted[i];
    double v = v0;
    std::size_t j = i + 1;
    while (j < sorted.size() && std::get<0>(sorted[j]) == c && std::get<1>(sorted[j]) == r)
      v += std::get<2>(sorted[j++]);
    if (v != 0.0) {
      m.row_idx.push_back(r);
      m.values.push_back(v);
      ++m.col_ptr[c + 1];
    }
    i = j;
  }
  exclusive_scan_counts(m.col_ptr);
  return m;
}

SparseMat SparseMat::from_dense(const std::vector<std::vector<double>>& dense)
{
  const auto rows = static_cast<Index>(dense.size());
  const Index cols = rows > 0 ? static_cast<Index>(dense.front().size()) : 0;
  SparseMat m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      if (dense[r][c] != 0.0) {
        m.row_idx.push_back(r);
        m.values.push_back(dense[r][c]);
      }
    }
    m.col_ptr[c + 1] = static_cast<Index>(m.row_idx.size());
  }
  return m;
}

double SparseMat::at(Index row, Index col) const
{
  const auto r = rows(col);
  const auto it = std::lower_bound(r.begin(), r.end(), row);
  if (it == r.end() || *it != row)
    return 0.0;
  return values[col_ptr[col] + (it - r.begin())];
}

std::vector<std::vector<double>> SparseMat::to_dense() const
{
  std::vector<std::vector<double>> d(n_rows, std::vector<double>(n_cols, 0.0));
  for (Index c = 0; c < n_cols; ++c)
    for (Index p = col_ptr[c]; p < col_ptr[c + 1]; ++p)
      d[row_idx[p]][c] = values[p];
  return d;
}

Skeleton SparseMat::pattern() const
{
  Skeleton s(n_rows, n_cols);
  s.col_ptr = col_ptr;
  s.row_idx.assign(row_idx.begin(), row_idx.begin() + static_cast<std::ptrdiff_t>(nnz()));
  return s;
}

void SparseMat::validate() const
{
  if (values.size() != nnz())
    throw Error("invalid-structure", "value count does not match column pointers");
  Skeleton s;
  s.n_rows = n_rows;
  s.n_cols = n_cols;
  s.col_ptr = col_ptr;
  s.row_idx = row_idx;
  s.validate();
}

void SparseMat::prune_zeros()
{
  Index out = 0;
  Index begin = 0;
  for (Index c = 0; c < n_cols; ++c) {
    const Index end = col_ptr[c + 1];
    for (Index p = begin; p < end; ++p) {
      if (values[p] != 0.0) {
        row_idx[out] = row_idx[p];
        values[out] = values[p];
        ++out;
      }
    }
    begin = end;
    col_ptr[c + 1] = out;
  }
  row_idx.resize(out);
  values.resize(out);
}

bool ensure_capacity(SparseMat& mat, std::size_t needed)
{
  if (needed <= mat.capacity() && needed <= mat.values.capacity())
    return false;
  const std::size_t cap = grown_capacity(mat.capacity(), needed);
  mat.row_idx.reserve(cap);
  mat.values.reserve(cap);
  ++mat.reallocations;
  return true;
}

bool ensure_capacity(Skeleton& skel, std::size_t needed)
{
  if (needed <= skel.capacity())
    return false;
  skel.row_idx.reserve(grown_capacity(skel.capacity(), needed));
  ++skel.reallocations;
  return true;
}

void spgemm_into(const SparseMat& a, const SparseMat& b, SparseMat& c)
{
  if (a.n_cols != b.n_rows)
    throw Error("shape", "spgemm of " + std::to_string(a.n_rows) + "x" + std::to_string(a.n_cols) +
                             " by " + std::to_string(b.n_rows) + "x" + std::to_string(b.n_cols));
  const Index n_rows = a.n_rows;
  const Index n_cols = b.n_cols;
  c.n_rows = n_rows;
  c.n_cols = n_cols;
  c.col_ptr.assign(static_cast<std::size_t>(n_cols) + 1, 0);

  // Symbolic pass: count distinct rows per output column.
#pragma omp parallel
  {
    std::vector<Index> marker(n_rows, -1);
#pragma omp for schedule(dynamic, 256)
    for (Index j = 0; j < n_cols; ++j) {
      Index count = 0;
      for (Index pb = b.col_ptr[j]; pb < b.col_ptr[j + 1]; ++pb) {
        const Index k = b.row_idx[pb];
        for (Index pa = a.col_ptr[k]; pa < a.col_ptr[k + 1]; ++pa) {
          const Index r = a.row_idx[pa];
          if (marker[r] != j) {
            marker[r] = j;
            ++count;
          }
        }
      }
      c.col_ptr[j + 1] = count;
    }
  }
  exclusive_scan_counts(c.col_ptr);

  const std::size_t nnz = c.nnz();
  ensure_capacity(c, nnz);
  c.row_idx.resize(nnz);
  c.values.resize(nnz);

  // Numeric pass: dense accumulator per thread, reset through the touched list.
  std::atomic<bool> has_zero{false};
#pragma omp parallel
  {
    std::vector<double> acc(n_rows, 0.0);
    std::vector<Index> marker(n_rows, -1);
    std::vector<Index> touched;
#pragma omp for schedule(dynamic, 256)
    for (Index j = 0; j < n_cols; ++j) {
      touched.clear();
      for (Index pb = b.col_ptr[j]; pb < b.col_ptr[j + 1]; ++pb) {
        const Index k = b.row_idx[pb];
        const double bv = b.values[pb];
        for (Index pa = a.col_ptr[k]; pa < a.col_ptr[k + 1]; ++pa) {
          const Index r = a.row_idx[pa];
          if (marker[r] != j) {
            marker[r] = j;
            touched.push_back(r);
            acc[r] = a.values[pa] * bv;
          } else {
            acc[r] += a.values[pa] * bv;
          }
        }
      }
      std::sort(touched.begin(), touched.end());
      Index out = c.col_ptr[j];
      for (const Index r : touched) {
        c.row_idx[out] = r;
        c.values[out] = acc[r];
        if (acc[r] == 0.0)
          has_zero.store(true, std::memory_order_relaxed);
        ++out;
      }
    }
  }
  if (has_zero.load())
    c.prune_zeros();
}

SparseMat spgemm(const SparseMat& a, const SparseMat& b)
{
  SparseMat c;
  spgemm_into(a, b, c);
  return c;
}

SparseMat transpose(const SparseMat& a)
{
  SparseMat t(a.n_cols, a.n_rows);
  const std::size_t nnz = a.nnz();
  for (std::size_t p = 0; p < nnz; ++p)
    ++t.col_ptr[a.row_idx[p] + 1];
  exclusive_scan_counts(t.col_ptr);
  t.row_idx.resize(nnz);
  t.values.resize(nnz);
  std::vector<Index> next(t.col_ptr.begin(), t.col_ptr.end() - 1);
  // Visiting source columns in order keeps the rows of each output column sorted.
  for (Index c = 0; c < a.n_cols; ++c) {
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      const Index dst = next[a.row_idx[p]]++;
      t.row_idx[dst] = c;
      t.values[dst] = a.values[p];
    }
  }
  return t;
}

namespace {

// Walks the merged row sets of one column of phi and lt and reports every row
// that belongs to the interest skeleton with both operand values (0 if absent).
template <typename Emit>
void skeleton_column(const SparseMat& phi, const SparseMat& lt, Index col, Emit&& emit)
{
  Index p = phi.col_ptr[col];
  const Index pe = phi.col_ptr[col + 1];
  Index q = lt.col_ptr[col];
  const Index qe = lt.col_ptr[col + 1];
  while (p < pe || q < qe) {
    const Index rp = p < pe ? phi.row_idx[p] : phi.n_rows;
    const Index rq = q < qe ? lt.row_idx[q] : lt.n_rows;
    if (rp < rq) {
      if (phi.values[p] > 0.0)
        emit(rp, phi.values[p], 0.0);
      ++p;
    } else if (rq < rp) {
      if (lt.values[q] > 0.0)
        emit(rq, 0.0, lt.values[q]);
      ++q;
    } else {
      const double v = phi.values[p];
      if (v > 0.0 || (v == 0.0 && lt.values[q] > 0.0))
        emit(rp, v, lt.values[q]);
      ++p;
      ++q;
    }
  }
}

void count_skeleton(const SparseMat& phi, const SparseMat& lt, Skeleton& out)
{
  if (phi.n_rows != lt.n_rows || phi.n_cols != lt.n_cols)
    throw Error("shape", "skeleton operands differ in shape");
  const Index n_cols = phi.n_cols;
  out.n_rows = phi.n_rows;
  out.n_cols = n_cols;
  out.col_ptr.assign(static_cast<std::size_t>(n_cols) + 1, 0);

#pragma omp parallel for schedule(static)
  for (Index c = 0; c < n_cols; ++c) {
    Index count = 0;
    skeleton_column(phi, lt, c, [&](Index, double, double) { ++count; });
    out.col_ptr[c + 1] = count;
  }
  exclusive_scan_counts(out.col_ptr);
  ensure_capacity(out, out.nnz());
  out.row_idx.resize(out.nnz());
}

void shape_onto(const Skeleton& skel, SparseMat& out)
{
  out.n_rows = skel.n_rows;
  out.n_cols = skel.n_cols;
  out.col_ptr.assign(skel.col_ptr.begin(), skel.col_ptr.end());
  ensure_capacity(out, skel.nnz());
  out.row_idx.resize(skel.nnz());
  out.values.resize(skel.nnz());
}

} // namespace

void build_skeleton_into(const SparseMat& phi, const SparseMat& lt, Skeleton& out)
{
  count_skeleton(phi, lt, out);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < phi.n_cols; ++c) {
    Index dst = out.col_ptr[c];
    skeleton_column(phi, lt, c, [&](Index r, double, double) { out.row_idx[dst++] = r; });
  }
}

void fill_expanded_skeleton(const SparseMat& phi, const SparseMat& lt, Skeleton& skel, SparseMat& phi_hat,
                            SparseMat& lt_hat)
{
  shape_onto(skel, phi_hat);
  shape_onto(skel, lt_hat);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < phi.n_cols; ++c) {
    Index dst = skel.col_ptr[c];
    skeleton_column(phi, lt, c, [&](Index r, double pv, double lv) {
      skel.row_idx[dst] = r;
      phi_hat.row_idx[dst] = r;
      lt_hat.row_idx[dst] = r;
      phi_hat.values[dst] = pv;
      lt_hat.values[dst] = lv;
      ++dst;
    });
  }
}

void count_skeleton_columns(const SparseMat& phi, const SparseMat& lt, Skeleton& skel)
{
  count_skeleton(phi, lt, skel);
}

Skeleton build_skeleton(const SparseMat& phi, const SparseMat& lt)
{
  Skeleton s;
  build_skeleton_into(phi, lt, s);
  return s;
}

void onto_skeleton_into(const SparseMat& a, const Skeleton& skel, SparseMat& out, bool strict)
{
  if (a.n_rows != skel.n_rows || a.n_cols != skel.n_cols)
    throw Error("shape", "matrix and skeleton differ in shape");
  out.n_rows = skel.n_rows;
  out.n_cols = skel.n_cols;
  out.col_ptr.assign(skel.col_ptr.begin(), skel.col_ptr.end());
  ensure_capacity(out, skel.nnz());
  out.row_idx.resize(skel.nnz());
  out.values.resize(skel.nnz());

  std::atomic<Index> violation{-1};
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < a.n_cols; ++c) {
    Index q = skel.col_ptr[c];
    const Index qe = skel.col_ptr[c + 1];
    for (Index k = q; k < qe; ++k) {
      out.row_idx[k] = skel.row_idx[k];
      out.values[k] = 0.0;
    }
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      const Index r = a.row_idx[p];
      while (q < qe && skel.row_idx[q] < r)
        ++q;
      if (q < qe && skel.row_idx[q] == r) {
        out.values[q] = a.values[p];
      } else if (strict && a.values[p] != 0.0) {
        Index expected = -1;
        violation.compare_exchange_strong(expected, c);
      }
    }
  }
  if (violation.load() >= 0)
    throw Error("pattern-violation",
                "nonzero outside the skeleton in column " + std::to_string(violation.load()));
}

SparseMat expand_to_skeleton(const SparseMat& a, const Skeleton& skel)
{
  SparseMat out;
  onto_skeleton_into(a, skel, out, true);
  return out;
}

SparseMat gather_to_skeleton(const SparseMat& a, const Skeleton& skel)
{
  SparseMat out;
  onto_skeleton_into(a, skel, out, false);
  return out;
}

SparseMat normalize_columns(const SparseMat& a, std::vector<Index>* zero_sum_columns)
{
  SparseMat out = a;
  std::vector<char> zero_sum(a.n_cols, 0);
  std::atomic<Index> negative{-1};
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < a.n_cols; ++c) {
    double sum = 0.0;
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      if (a.values[p] < 0.0) {
        Index expected = -1;
        negative.compare_exchange_strong(expected, c);
      }
      sum += a.values[p];
    }
    if (sum > 0.0) {
      const double inv = 1.0 / sum;
      for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p)
        out.values[p] = a.values[p] * inv;
    } else {
      zero_sum[c] = 1;
    }
  }
  if (negative.load() >= 0)
    throw Error("negative-field", "negative entry in column " + std::to_string(negative.load()));
  if (zero_sum_columns)
    for (Index c = 0; c < a.n_cols; ++c)
      if (zero_sum[c])
        zero_sum_columns->push_back(c);
  return out;
}

SparseMat binarize(const SparseMat& a, double threshold)
{
  SparseMat out(a.n_rows, a.n_cols);
  for (Index c = 0; c < a.n_cols; ++c) {
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      if (a.values[p] >= threshold) {
        out.row_idx.push_back(a.row_idx[p]);
        out.values.push_back(1.0);
      }
    }
    out.col_ptr[c + 1] = static_cast<Index>(out.row_idx.size());
  }
  return out;
}

} // namespace layertess

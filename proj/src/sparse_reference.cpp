#include "layertess/error.hpp"
#include "layertess/sparse.hpp"

#include <map>

namespace layertess::reference {

SparseMat spgemm(const SparseMat& a, const SparseMat& b)
{
  if (a.n_cols != b.n_rows)
    throw Error("shape", "spgemm dimension mismatch");
  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index j = 0; j < b.n_cols; ++j) {
    std::map<Index, double> column;
    for (Index pb = b.col_ptr[j]; pb < b.col_ptr[j + 1]; ++pb) {
      const Index k = b.row_idx[pb];
      for (Index pa = a.col_ptr[k]; pa < a.col_ptr[k + 1]; ++pa)
        column[a.row_idx[pa]] += a.values[pa] * b.values[pb];
    }
    for (const auto& [r, v] : column)
      entries.emplace_back(r, j, v);
  }
  return SparseMat::from_triplets(a.n_rows, b.n_cols, entries);
}

SparseMat transpose(const SparseMat& a)
{
  std::vector<std::tuple<Index, Index, double>> entries;
  entries.reserve(a.nnz());
  for (Index c = 0; c < a.n_cols; ++c)
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p)
      entries.emplace_back(c, a.row_idx[p], a.values[p]);
  return SparseMat::from_triplets(a.n_cols, a.n_rows, entries);
}

Skeleton build_skeleton(const SparseMat& phi, const SparseMat& lt)
{
  if (phi.n_rows != lt.n_rows || phi.n_cols != lt.n_cols)
    throw Error("shape", "skeleton operands differ in shape");
  Skeleton s(phi.n_rows, phi.n_cols);
  for (Index c = 0; c < phi.n_cols; ++c) {
    for (Index r = 0; r < phi.n_rows; ++r) {
      const double v = phi.at(r, c);
      if (v > 0.0 || (v == 0.0 && lt.at(r, c) > 0.0))
        s.row_idx.push_back(r);
    }
    s.col_ptr[c + 1] = static_cast<Index>(s.row_idx.size());
  }
  return s;
}

SparseMat normalize_columns(const SparseMat& a)
{
  SparseMat out = a;
  for (Index c = 0; c < a.n_cols; ++c) {
    double sum = 0.0;
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      if (a.values[p] < 0.0)
        throw Error("negative-field", "negative entry");
      sum += a.values[p];
    }
    if (sum > 0.0)
      for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p)
        out.values[p] = a.values[p] / sum;
  }
  return out;
}

} // namespace layertess::reference

#include "layertess/error.hpp"
#include "layertess/sparse.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace layertess {

void write_triplets(std::ostream& os, const SparseMat& a)
{
  os << a.n_rows << ' ' << a.n_cols << ' ' << a.nnz() << '\n';
  char buf[64];
  for (Index c = 0; c < a.n_cols; ++c) {
    for (Index p = a.col_ptr[c]; p < a.col_ptr[c + 1]; ++p) {
      std::snprintf(buf, sizeof(buf), "%.17g", a.values[p]);
      os << a.row_idx[p] << ' ' << c << ' ' << buf << '\n';
    }
  }
}

SparseMat read_triplets(std::istream& is)
{
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#')
        continue;
      return true;
    }
    return false;
  };

  if (!next_line())
    throw Error("parse", "missing triplet header");
  long long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw Error("parse", "bad triplet header at line " + std::to_string(line_no));
  }
  std::vector<std::tuple<Index, Index, double>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (long long k = 0; k < nnz; ++k) {
    if (!next_line())
      throw Error("parse", "expected " + std::to_string(nnz) + " entries, got " + std::to_string(k));
    std::istringstream ls(line);
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v))
      throw Error("parse", "bad triplet at line " + std::to_string(line_no));
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw Error("parse", "index out of range at line " + std::to_string(line_no));
    entries.emplace_back(static_cast<Index>(r), static_cast<Index>(c), v);
  }
  return SparseMat::from_triplets(static_cast<Index>(rows), static_cast<Index>(cols), entries);
}

} // namespace layertess

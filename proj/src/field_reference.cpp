#include "layertess/error.hpp"
#include "layertess/field.hpp"

#include <cmath>

namespace layertess::reference {

void step(LayeredField& field, const Laplacian& lap, const CouplingParams& params)
{
  const SparseMat& phi = field.phi;
  const SparseMat lt = reference::spgemm(phi, reference::transpose(lap.L));
  const Skeleton skel = reference::build_skeleton(phi, lt);

  auto coupling = [](Index r, Index s, double value) { return r == s ? 0.0 : value; };
  auto band_coupling = [&](Index r, Index s) {
    if (r == s)
      return 0.0;
    if (s == base_row)
      return params.e_base;
    if (r == base_row)
      return -params.e_base;
    return params.e;
  };

  std::vector<std::tuple<Index, Index, double>> entries;
  for (Index i = 0; i < phi.n_cols; ++i) {
    const auto irows = skel.rows(i);
    const auto n = static_cast<Index>(irows.size());
    std::vector<double> next(n);
    for (Index j = 0; j < n; ++j) {
      const Index rj = irows[j];
      double d = 0.0;
      for (Index k = 0; k < n; ++k) {
        const Index rk = irows[k];
        double sum = 0.0;
        for (Index l = 0; l < n; ++l) {
          const Index rl = irows[l];
          sum += 0.5 * (coupling(rj, rl, params.a) - coupling(rk, rl, params.a)) * lt.at(rl, i) +
                 (coupling(rj, rl, params.w) - coupling(rk, rl, params.w)) * phi.at(rl, i);
        }
        d += -(params.mu / n) * (sum - band_coupling(rj, rk) * std::sqrt(phi.at(rj, i) * phi.at(rk, i)));
      }
      double v = phi.at(rj, i) + d * params.dt;
      if (!std::isfinite(v))
        throw Error("numerical-blowup", "non-finite value in column " + std::to_string(i));
      if (v > 1.0)
        v = 1.0;
      if (v <= 0.0)
        v = 0.0;
      next[j] = v;
    }
    double total = 0.0;
    for (double v : next)
      total += v;
    if (!(total > 0.0))
      throw Error("numerical-blowup", "column " + std::to_string(i) + " lost all mass");
    for (Index j = 0; j < n; ++j)
      if (next[j] > 0.0)
        entries.emplace_back(irows[j], i, next[j] / total);
  }
  field.phi = SparseMat::from_triplets(phi.n_rows, phi.n_cols, entries);
  ++field.step_count;
}

} // namespace layertess::reference

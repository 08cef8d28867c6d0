#include "layertess/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace layertess {

namespace {
int default_threads()
{
#ifdef _OPENMP
  static const int n = omp_get_max_threads();
  return n;
#else
  return 1;
#endif
}
} // namespace

void set_num_threads(int n)
{
#ifdef _OPENMP
  const int base = default_threads();
  omp_set_num_threads(n > 0 ? n : base);
#else
  (void)n;
#endif
}

int max_threads()
{
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return default_threads();
#endif
}

} // namespace layertess

#pragma once

namespace layertess {

/// Caps the worker count of the OpenMP kernels. n <= 0 restores the default.
void set_num_threads(int n);
int max_threads();

} // namespace layertess

#pragma once

namespace flowplan {

/// Caps the worker count of the parallel point loops; 0 restores the default.
void set_thread_count(int n);
/// Worker count the next parallel loop will use (at least 1).
int thread_count();

}  // namespace flowplan

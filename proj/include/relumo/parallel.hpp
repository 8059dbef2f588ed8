#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace relumo {

// Caps OpenMP data-parallelism. Values < 1 restore the runtime default.
void set_thread_count(int threads);
int thread_count();
// Reads RELUMO_THREADS; no-op when unset or unparsable.
void configure_threads_from_env();

// Sums `rows` per-row partial results in row order, so the total does not
// depend on how rows were scheduled across threads.
double deterministic_row_sum(int rows, const std::function<double(int)>& row_fn);

}  // namespace relumo

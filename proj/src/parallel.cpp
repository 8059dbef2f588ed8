#include "relumo/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace relumo {

namespace {
int default_threads() {
  static const int n = omp_get_max_threads();
  return n;
}
}  // namespace

void set_thread_count(int threads) {
  omp_set_num_threads(threads >= 1 ? threads : default_threads());
}

int thread_count() { return omp_get_max_threads(); }

void configure_threads_from_env() {
  const char* env = std::getenv("RELUMO_THREADS");
  if (!env) return;
  try {
    set_thread_count(std::stoi(env));
  } catch (const std::exception&) {
  }
}

double deterministic_row_sum(int rows,
                             const std::function<double(int)>& row_fn) {
  std::vector<double> partial(static_cast<std::size_t>(rows > 0 ? rows : 0));
#pragma omp parallel for schedule(dynamic, 4)
  for (int y = 0; y < rows; ++y) partial[y] = row_fn(y);
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace relumo

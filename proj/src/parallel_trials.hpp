#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdl::detail {

/// Splits trials [0, n) into fixed-size blocks independent of thread count,
/// runs `body(block_state, first, last)` for each block in parallel, and
/// returns the per-block states in block order.
template <class Block, class Body>
std::vector<Block> run_blocks(std::int64_t n, std::int64_t block_size, int workers, const Block& init,
                              Body body) {
  const std::int64_t bs = std::max<std::int64_t>(block_size, 1);
  const std::int64_t blocks = (n + bs - 1) / bs;
  std::vector<Block> out(static_cast<std::size_t>(blocks), init);
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
#endif
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t k = 0; k < blocks; ++k) {
    const std::int64_t first = k * bs;
    const std::int64_t last = std::min(n, first + bs);
    body(out[static_cast<std::size_t>(k)], first, last);
  }
  return out;
}

}  // namespace mdl::detail

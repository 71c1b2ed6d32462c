#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace mip {

inline constexpr std::uint64_t kReduceBlock = 4096;

// Deterministic parallel map-reduce: [0, count) is cut into fixed-width blocks,
// workers claim whole blocks, and per-block partials are merged pairwise in
// block order. The result is bit-identical for any worker count.
template <class Partial, class BlockFn, class MergeFn>
Partial block_reduce(std::uint64_t count, int workers, const Partial& zero,
                     const BlockFn& block_fn, const MergeFn& merge) {
  const std::uint64_t blocks = count == 0 ? 0 : (count - 1) / kReduceBlock + 1;
  if (blocks == 0) return zero;
  std::vector<Partial> parts(blocks, zero);

  auto run_block = [&](std::uint64_t b) {
    const std::uint64_t begin = b * kReduceBlock;
    const std::uint64_t end = std::min(count, begin + kReduceBlock);
    block_fn(begin, end, parts[b]);
  };

  if (workers <= 1 || blocks == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::uint64_t> cursor{0};
    auto worker = [&] {
      for (;;) {
        const std::uint64_t b = cursor.fetch_add(1);
        if (b >= blocks) return;
        run_block(b);
      }
    };
    const int n_threads = static_cast<int>(std::min<std::uint64_t>(workers, blocks));
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Pairwise tree over block partials, fixed shape regardless of workers.
  std::uint64_t width = blocks;
  while (width > 1) {
    const std::uint64_t half = width / 2;
    for (std::uint64_t i = 0; i < half; ++i) merge(parts[i], parts[width - 1 - i]);
    width -= half;
  }
  return parts[0];
}

}  // namespace mip

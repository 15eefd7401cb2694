#pragma once

#include <cstddef>
#include <functional>

namespace gsum {

/// Worker count: the explicit request if positive, else GSUM_THREADS, else 1.
std::size_t resolve_threads(int requested = 0);

/// Runs fn(shard) for shard in [0, shards) on up to `threads` workers.
/// Shards must write to disjoint outputs; results are therefore identical
/// for every thread count.
void parallel_shards(std::size_t shards, std::size_t threads,
                     const std::function<void(std::size_t)>& fn);

}  // namespace gsum

// Copyright 2026 The fairpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRPC_PARALLEL_HPP_
#define FAIRPC_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace fairpc {

/// Caps the worker count used by row-parallel loops. 0 restores the default
/// (hardware concurrency).
void set_num_threads(unsigned n);
unsigned num_threads();

/// Rows per chunk in row-parallel reductions. Fixed so that reduction order,
/// and therefore every floating-point result, does not depend on the number
/// of threads.
inline constexpr std::size_t kRowChunk = 256;

/// Runs fn(chunk, begin, end) for every chunk of [0, n). Chunks are handed to
/// workers dynamically; fn must only write chunk-private state.
void for_each_chunk(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t num_chunks(std::size_t n) {
  return (n + kRowChunk - 1) / kRowChunk;
}

/// Runs fn(i) for i in [0, count) on the worker pool.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Row blocks for reductions that keep one accumulator per block: at most
/// kMaxBlocks blocks of at least kRowChunk rows. Depends only on n.
inline constexpr std::size_t kMaxBlocks = 64;
struct BlockPlan {
  std::size_t blocks = 0;
  std::size_t size = 0;
  std::size_t begin(std::size_t b) const { return b * size; }
};
inline BlockPlan plan_blocks(std::size_t n) {
  if (n == 0) return {};
  std::size_t blocks = num_chunks(n);
  if (blocks > kMaxBlocks) blocks = kMaxBlocks;
  std::size_t size = (n + blocks - 1) / blocks;
  return {(n + size - 1) / size, size};
}

}  // namespace fairpc

#endif  // FAIRPC_PARALLEL_HPP_

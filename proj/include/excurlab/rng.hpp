// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random number streams (Philox4x64-10).
//
// Every stream is a pure function of (master_seed, stream_index): replicate i
// always sees the same numbers no matter how many worker threads run or in
// which order replicates are scheduled.  Streams derive children without
// consuming state, so independent algorithms can share one logical source of
// randomness and still make identical microscopic decisions:
//
//   derive(seed, i)          key = (seed, i), counter = 0
//   .substream(id)           child stream, disjoint counter block (2 levels)
//   .at(slot)                positioned stream for slot-indexed draws; the
//                            draw for grid node k is always at(k), whether
//                            nodes are generated forward, backward, or lazily
//
// The block function is Philox4x64-10 exactly as in numpy.random.Philox;
// known-answer vectors generated from numpy are frozen in the unit tests.
#pragma once

#include <array>
#include <cstdint>

namespace excurlab {

// One Philox4x64-10 block: 4 output words from a 256-bit counter and 128-bit key.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& ctr,
                                        const std::array<std::uint64_t, 2>& key);

class RngStream {
 public:
  RngStream() : RngStream(std::array<std::uint64_t, 2>{0, 0}, {0, 0, 0, 0}) {}

  // Root stream for one replicate (or any indexed consumer).
  static RngStream derive(std::uint64_t master_seed, std::uint64_t stream_index);

  // Fully explicit construction; used by tests against frozen vectors.
  RngStream(std::array<std::uint64_t, 2> key, std::array<std::uint64_t, 4> ctr);

  // Child with its own counter block.  Two levels are available; a parent that
  // has already spent both asserts.  Children of distinct ids never overlap,
  // and no child overlaps its parent's own draw sequence.
  RngStream substream(std::uint64_t id) const;

  // Positioned stream for slot-indexed draws (grid nodes, bisection tree
  // nodes).  Distinct slots give disjoint draw sequences of 2^64 blocks each.
  RngStream at(std::uint64_t slot) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0,1); safe under log() and CDF inversion.
  double uniform01();
  // Standard normal via Box-Muller; the pair partner is cached in the stream.
  double gaussian();

  const std::array<std::uint64_t, 2>& key() const { return key_; }
  const std::array<std::uint64_t, 4>& counter() const { return ctr_; }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> ctr_;  // [0] draw block, [1] level-1, [2] level-2, [3] slot
  int depth_ = 0;
  std::array<std::uint64_t, 4> buf_{};
  int buf_pos_ = 4;  // 4 = empty
  double spare_gauss_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace excurlab

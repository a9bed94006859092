// SPDX-License-Identifier: Apache-2.0
#include "excurlab/rng.hpp"

#include <cassert>
#include <cmath>

namespace excurlab {

namespace {

// Philox4x64 constants (multipliers and Weyl key increments).
constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t* hi) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  *hi = static_cast<std::uint64_t>(p >> 64);
  return static_cast<std::uint64_t>(p);
}

inline void round_once(std::array<std::uint64_t, 4>& c, const std::array<std::uint64_t, 2>& k) {
  std::uint64_t hi0, hi1;
  const std::uint64_t lo0 = mulhilo(kM0, c[0], &hi0);
  const std::uint64_t lo1 = mulhilo(kM1, c[2], &hi1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& ctr,
                                        const std::array<std::uint64_t, 2>& key) {
  std::array<std::uint64_t, 4> c = ctr;
  std::array<std::uint64_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kW0;
      k[1] += kW1;
    }
    round_once(c, k);
  }
  return c;
}

RngStream::RngStream(std::array<std::uint64_t, 2> key, std::array<std::uint64_t, 4> ctr)
    : key_(key), ctr_(ctr) {}

RngStream RngStream::derive(std::uint64_t master_seed, std::uint64_t stream_index) {
  return RngStream({master_seed, stream_index}, {0, 0, 0, 0});
}

RngStream RngStream::substream(std::uint64_t id) const {
  assert(depth_ < 2 && "substream depth exhausted");
  RngStream child(key_, ctr_);
  child.ctr_[0] = 0;
  child.ctr_[static_cast<std::size_t>(1 + depth_)] = id + 1;  // 0 marks "unused level"
  child.depth_ = depth_ + 1;
  return child;
}

RngStream RngStream::at(std::uint64_t slot) const {
  RngStream pos(key_, ctr_);
  pos.ctr_[0] = 0;
  pos.ctr_[3] = slot + 1;
  pos.depth_ = depth_;
  return pos;
}

std::uint64_t RngStream::next_u64() {
  if (buf_pos_ >= 4) {
    buf_ = philox4x64(ctr_, key_);
    ++ctr_[0];  // 2^64 blocks per stream; no carry into the id words
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

double RngStream::uniform01() {
  // 52 explicit bits centered in the cell: never 0, never 1.
  return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1p-52;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_gauss_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_gauss_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

}  // namespace excurlab

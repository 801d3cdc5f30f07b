#pragma once

// Counter-based random streams.
//
// Every stochastic quantity in the toolkit is drawn from a Stream keyed by
// (seed, domain, stream id). The underlying generator is Philox4x32-10, so a
// stream's output depends only on its key and the block counter: work items
// can be evaluated in any order, on any number of threads, with identical
// results.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace m3d {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream domains keep independent uses of the same (seed, id) apart.
enum class StreamDomain : std::uint64_t {
  action = 0,
  model = 1,
  bootstrap = 2,
  schedule = 3,
  noise = 4,
  graph = 5,
  test = 6,
};

/// A sequential view over one Philox stream. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class Stream {
 public:
  using result_type = std::uint32_t;

  Stream(std::uint64_t seed, std::uint64_t stream_id,
         StreamDomain domain = StreamDomain::action) {
    const std::uint64_t k = detail::splitmix64(
        seed ^ detail::splitmix64(static_cast<std::uint64_t>(domain) + 1));
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    id_lo_ = static_cast<std::uint32_t>(stream_id);
    id_hi_ = static_cast<std::uint32_t>(stream_id >> 32);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u32(); }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Standard normal via Box-Muller (one variate per call, no cached state).
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  /// Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
      const std::uint64_t r = (std::uint64_t{next_u32()} << 32) | next_u32();
      if (r < limit) return r % n;
    }
  }

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  void refill() {
    buf_ = Philox4x32::block(
        {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
         id_lo_, id_hi_},
        key_);
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_{};
  std::uint32_t id_lo_ = 0;
  std::uint32_t id_hi_ = 0;
  std::uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 4;
};

}  // namespace m3d

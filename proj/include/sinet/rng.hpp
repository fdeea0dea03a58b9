#pragma once

// Splittable deterministic PRNG (splitmix64 core).  Every randomized
// component takes a SplitRng and derives private substreams via split(),
// so adding a consumer never perturbs the draws seen by another.

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "sinet/errors.hpp"

namespace sinet {

class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : root_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return finalize(state_);
  }

  // Uniform in [0, 1).  53-bit mantissa, unbiased.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, bound).  Rejection sampling, no modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw UsageError("SplitRng::next_below: bound must be positive");
    const std::uint64_t excess = (0ull - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= excess) return (r - excess) % bound;
    }
  }

  // Fisher-Yates, deterministic for a given stream state.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    const std::size_t n = v.size();
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream identified by a string tag.  Depends only on
  // this stream's seed (not on how much has been drawn from it).
  SplitRng split(std::string_view tag) const { return SplitRng(mix(root_, fnv1a64(tag))); }

  // Independent child stream identified by a lane index.
  SplitRng split(std::uint64_t lane) const {
    return SplitRng(mix(root_, finalize(lane + 0x632BE59BD9B4E019ull)));
  }

  std::uint64_t seed() const { return root_; }

  static std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return finalize(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
  }

  std::uint64_t root_;
  std::uint64_t state_;
};

}  // namespace sinet

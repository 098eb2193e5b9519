// Counter-based random streams. A stream is a pure function of
// (seed, domain, index, counter), so independently derived streams can be
// consumed from any thread in any order without changing the output.
#pragma once

#include <cstdint>

namespace ivy {

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Stream domains keep independently seeded parts of the pipeline from
// colliding on the same key.
enum class RngDomain : std::uint64_t {
  kSampling = 0x01,
  kReplicate = 0x02,
  kSummary = 0x03,
  kHarness = 0x04,
  kShuffle = 0x05,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, RngDomain domain, std::uint64_t index)
      : key_(detail::mix64(detail::mix64(detail::mix64(seed) +
                                         static_cast<std::uint64_t>(domain)) +
                           index)) {}

  // Child stream; independent of this stream's counter position.
  RngStream substream(std::uint64_t index) const {
    RngStream s;
    s.key_ = detail::mix64(detail::mix64(key_) + index);
    return s;
  }

  std::uint64_t next_u64() { return detail::mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1) with 53 random bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_uniform() < p; }

  // Uniform in [0, n); rejection sampling keeps it exactly unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  RngStream() = default;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Value that depends only on (key ingredients, index): used where every item
// of a batch needs its own deterministic draw regardless of evaluation order.
inline double indexed_uniform(std::uint64_t seed, RngDomain domain, std::uint64_t index) {
  const std::uint64_t k = detail::mix64(detail::mix64(seed) + static_cast<std::uint64_t>(domain));
  return static_cast<double>(detail::mix64(k + 0x9e3779b97f4a7c15ULL * (index + 1)) >> 11) *
         0x1.0p-53;
}

}  // namespace ivy

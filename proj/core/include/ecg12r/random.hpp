#pragma once

#include <cstdint>
#include <string_view>

namespace ecg12r {

/// Counter-based random stream. A stream is identified by a 64-bit key; the
/// n-th draw is a pure function of (key, n), so streams can be split and
/// replayed without shared state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

  /// Key derived from a base seed and a chain of labels, e.g.
  /// RandomStream::derive(seed, record_id, "dropout", epoch).
  static std::uint64_t mix(std::uint64_t key, std::string_view label) noexcept;
  static std::uint64_t mix(std::uint64_t key, std::uint64_t value) noexcept;

  template <typename... Parts>
  static RandomStream derive(std::uint64_t seed, const Parts&... parts) noexcept {
    std::uint64_t key = seed;
    ((key = mix(key, parts)), ...);
    return RandomStream(key);
  }

  RandomStream split(std::string_view label) const noexcept { return RandomStream(mix(key_, label)); }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ecg12r

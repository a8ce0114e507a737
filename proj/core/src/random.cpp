#include "ecg12r/random.hpp"

#include <cmath>
#include <numbers>

namespace ecg12r {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RandomStream::mix(std::uint64_t key, std::string_view label) noexcept {
  // FNV-1a over the label, folded into the key.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(key ^ splitmix64(h));
}

std::uint64_t RandomStream::mix(std::uint64_t key, std::uint64_t value) noexcept {
  return splitmix64(key ^ splitmix64(value + 0x632BE59BD9B4E019ull));
}

std::uint64_t RandomStream::next_u64() noexcept { return splitmix64(key_ + splitmix64(counter_++)); }

double RandomStream::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RandomStream::below(std::uint64_t n) noexcept {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

}  // namespace ecg12r

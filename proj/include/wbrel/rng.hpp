#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace wbrel {

/// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// A seeded random stream that can be split into keyed children.
///
/// A child depends only on the parent's key and the child label, never on how
/// many numbers the parent has produced, so work fanned out over children is
/// reproducible regardless of execution order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : RngStream(KeyTag{}, mix64(seed)) {}

  RngStream child(std::uint64_t index) const {
    return RngStream(KeyTag{}, mix64(key_ ^ mix64(index ^ 0x5851f42d4c957f2dULL)));
  }
  RngStream child(std::string_view label) const { return child(fnv1a64(label)); }

  std::uint64_t key() const noexcept { return key_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    } while (u == 0.0);
    return u;
  }

 private:
  struct KeyTag {};
  RngStream(KeyTag, std::uint64_t key) : key_(key), engine_(key) {}

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace wbrel

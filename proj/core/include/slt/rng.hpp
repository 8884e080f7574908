#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace slt {

// Deterministic, splittable random stream.
//
// Every stream is identified by a 64-bit key; draws walk a splitmix64
// sequence from that key. fork() derives an independent child key from the
// parent key and a label, so draws for (master_seed, sample_id, epoch) are
// identical no matter in which order samples are visited. All distributions
// are implemented locally (no std::*_distribution) so the byte streams are
// stable across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

  RngStream fork(std::string_view label) const {
    std::uint64_t h = hash_bytes(label);
    return RngStream(mix(key_of(*this) ^ rotl(h, 17)), Raw{});
  }

  RngStream fork(std::uint64_t index) const {
    return RngStream(mix(key_of(*this) ^ rotl(mix(index + 0x9e3779b97f4a7c15ULL), 23)), Raw{});
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (rejection sampling). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Zero-mean Gaussian via Box-Muller. Always consumes two uniforms.
  double next_normal(double stddev = 1.0) {
    double u1 = next_double();
    double u2 = next_double();
    // avoid log(0)
    u1 = (u1 <= 0.0) ? 0x1.0p-53 : u1;
    return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  struct Raw {};
  RngStream(std::uint64_t raw_state, Raw) : state_(raw_state) {}

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t hash_bytes(std::string_view s) {
    // FNV-1a, then one mix round.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return mix(h);
  }

  static std::uint64_t key_of(const RngStream& s) { return s.state_; }

  std::uint64_t state_;
};

}  // namespace slt

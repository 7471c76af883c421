#ifndef GDKIT_RNG_HPP_
#define GDKIT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace gdkit {

// Counter-based deterministic random stream. Streams are derived from an
// explicit key so that parallel consumers keyed by (seed, purpose, index)
// produce identical sequences regardless of scheduling. Not cryptographic.
class RandomStream {
 public:
  explicit RandomStream(std::initializer_list<std::uint64_t> key) {
    state_ = 0x9e3779b97f4a7c15ULL;
    for (std::uint64_t k : key) {
      state_ = mix(state_ ^ mix(k));
    }
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Stable sub-key for handing to another keyed consumer.
  static std::uint64_t derive(std::initializer_list<std::uint64_t> key) {
    RandomStream stream(key);
    return stream.next_u64();
  }

  // Uniform in [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(next_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gdkit

#endif  // GDKIT_RNG_HPP_

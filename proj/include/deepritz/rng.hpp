#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace deepritz {

/// Counter-based random stream: the n-th draw is a pure function of
/// (key, n), so streams can be split by name without sharing state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Independent child stream; same (parent key, name, index) -> same stream.
  RngStream split(std::string_view name, std::uint64_t index = 0) const;

  std::uint64_t next();
  result_type operator()() { return next(); }

  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

 private:
  RngStream(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace deepritz

#include "deepritz/rng.hpp"

namespace deepritz {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t hash_name(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

RngStream::RngStream(std::uint64_t seed)
    : seed_(seed), key_(mix64(seed + kGolden)) {}

RngStream RngStream::split(std::string_view name, std::uint64_t index) const {
  std::uint64_t k = mix64(key_ ^ mix64(hash_name(name) + kGolden));
  k = mix64(k + (index + 1) * kGolden);
  return RngStream(seed_, k);
}

std::uint64_t RngStream::next() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform_open() {
  // 53 random bits centred in their cell: never exactly 0 or 1.
  const auto bits = next() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace deepritz

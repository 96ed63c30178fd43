#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "deepritz/checkpoint.hpp"
#include "deepritz/params.hpp"
#include "deepritz/rng.hpp"
#include "deepritz/trialfn.hpp"

using namespace deepritz;

TEST_CASE("layout bookkeeping") {
  TensorLayout l;
  l.add("w", {3, 2});
  l.add("b", {3});
  CHECK(l.total_size() == 9);
  CHECK(l.offset("b") == 6);
  CHECK(l.contains("w"));
  CHECK_FALSE(l.contains("x"));
  CHECK_THROWS_AS(l.add("w", {1}), LayoutError);
  CHECK_THROWS_AS(l.add("", {1}), LayoutError);
  CHECK_THROWS_AS(l.add("z", {}), LayoutError);
  CHECK_THROWS_AS(l.add("z", {2, 0}), LayoutError);
  CHECK_THROWS_AS(l.offset("nope"), LayoutError);
}

TEST_CASE("param store validates size and finiteness") {
  TensorLayout l;
  l.add("w", {2});
  CHECK_THROWS_AS(ParamStore(l, {1.0}), LayoutError);
  CHECK_THROWS_AS(ParamStore(l, {1.0, std::nan("")}), LayoutError);
  CHECK_THROWS_AS(ParamStore(l, {1.0, std::numeric_limits<double>::infinity()}), LayoutError);
  ParamStore p(l, {1.0, 2.0});
  CHECK(p.tensor("w")[1] == 2.0);
}

TEST_CASE("parameter counts") {
  CHECK(count_params(ResNetConfig{10, 10, 3}) == 671);
  CHECK(count_params(ResNetConfig{10, 10, 0}) == 11);
  CHECK(count_params(ResNetConfig{2, 2, 1}) == 15);
  // zero padding adds nothing; a learned input map adds m * d
  CHECK(count_params(ResNetConfig{2, 10, 4}) == 4 * 2 * 110 + 11);
  CHECK(count_params(ResNetConfig{100, 10, 1}) == 1000 + 2 * 110 + 11);
  // dense: layer i sees d + sum of previous widths
  CHECK(count_params(DenseNetConfig{1, {16, 16, 16, 16}}) ==
        (16 * 1 + 16) + (16 * 17 + 16) + (16 * 33 + 16) + (16 * 49 + 16) + 65 + 1);
}

TEST_CASE("init schemes") {
  const auto layout = make_layout(ResNetConfig{10, 10, 3});
  const auto zero = init_params(layout, InitScheme::Zero, 7);
  CHECK(zero.size() == 671);
  for (double v : zero.values()) CHECK(v == 0.0);

  const auto a = init_params(layout, InitScheme::UniformScaled, 42);
  const auto b = init_params(layout, InitScheme::UniformScaled, 42);
  const auto c = init_params(layout, InitScheme::UniformScaled, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);

  for (const auto& e : layout.entries()) {
    const auto t = a.tensor(e.name);
    if (e.shape.size() == 1) {
      for (double v : t) CHECK(v == 0.0);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(e.shape[0] + e.shape[1]));
      CHECK(uniform_scaled_bound(e) == doctest::Approx(bound));
      double lo = 0, hi = 0;
      for (double v : t) {
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) <= bound);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(lo < -0.5 * bound);
      CHECK(hi > 0.5 * bound);
    }
  }
  CHECK_THROWS_AS(init_params(TensorLayout{}, InitScheme::Zero, 1), LayoutError);

  const auto half = init_params(layout, InitScheme::UniformScaled, 42, 0.5);
  for (std::size_t i = 0; i < half.size(); ++i) CHECK(half.values()[i] == 0.5 * a.values()[i]);
  CHECK_THROWS(init_params(layout, InitScheme::UniformScaled, 42, 0.0));
}

TEST_CASE("count matches init for assorted layouts") {
  RngStream rng(5);
  for (int k = 0; k < 30; ++k) {
    NetConfig cfg;
    if (k % 2) {
      cfg = ResNetConfig{1 + rng.next() % 12, 1 + rng.next() % 8, rng.next() % 4};
    } else {
      std::vector<std::size_t> w(1 + rng.next() % 4);
      for (auto& x : w) x = 1 + rng.next() % 6;
      cfg = DenseNetConfig{1 + rng.next() % 6, w};
    }
    CHECK(init_params(make_layout(cfg), InitScheme::UniformScaled, k).size() == count_params(cfg));
  }
}

TEST_CASE("rng streams") {
  RngStream a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  auto s1 = RngStream(9).split("interior", 3);
  auto s2 = RngStream(9).split("interior", 3);
  auto s3 = RngStream(9).split("interior", 4);
  auto s4 = RngStream(9).split("boundary", 3);
  const auto x1 = s1.next();
  CHECK(x1 == s2.next());
  CHECK(x1 != s3.next());
  CHECK(x1 != s4.next());
  double mean = 0;
  RngStream u(1);
  for (int i = 0; i < 100000; ++i) {
    const double v = u.uniform_open();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    mean += v;
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto layout = make_layout(DenseNetConfig{2, {3, 3}});
  auto p = init_params(layout, InitScheme::UniformScaled, 3);
  auto v = p.mutable_values();
  v[0] = -0.0;
  v[1] = std::numeric_limits<double>::denorm_min();
  v[2] = -std::numeric_limits<double>::max();
  v[3] = 1.0 / 3.0;
  const CheckpointMeta meta{123456789012345ULL, 50000, "well_1"};
  const auto bytes = save_checkpoint(p, meta);
  const auto back = load_checkpoint(bytes);
  CHECK(back.meta == meta);
  CHECK(back.meta.step == 50000);
  CHECK(back.store.layout() == layout);
  REQUIRE(back.store.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(std::memcmp(&back.store.values()[i], &p.values()[i], sizeof(double)) == 0);
  }
  CHECK(std::signbit(back.store.values()[0]));
}

TEST_CASE("checkpoint byte layout starts with magic and version") {
  TensorLayout l;
  l.add("x", {1});
  const auto bytes = save_checkpoint(ParamStore(l, {1.0}), {});
  REQUIRE(bytes.size() > 12);
  CHECK(std::memcmp(bytes.data(), "DRZCKPT\0", 8) == 0);
  CHECK(bytes[8] == 1);
  CHECK(bytes[9] == 0);
  // last 8 bytes: 1.0 little-endian
  const std::uint8_t one[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  CHECK(std::memcmp(bytes.data() + bytes.size() - 8, one, 8) == 0);
}

TEST_CASE("checkpoint errors") {
  TensorLayout l;
  l.add("x", {2});
  auto bytes = save_checkpoint(ParamStore(l, {1.0, 2.0}), {1, 2, "p"});

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(load_checkpoint(bad_magic), CheckpointParseError);

  auto bad_version = bytes;
  bad_version[8] = 2;
  CHECK_THROWS_AS(load_checkpoint(bad_version), CheckpointVersionError);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(load_checkpoint(truncated), CheckpointParseError);

  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(load_checkpoint(trailing), CheckpointParseError);

  CHECK_THROWS_AS(load_checkpoint({}), CheckpointParseError);

  auto nan_value = bytes;
  for (std::size_t k = nan_value.size() - 8; k < nan_value.size(); ++k) nan_value[k] = 0xff;
  CHECK_THROWS(load_checkpoint(nan_value));
}

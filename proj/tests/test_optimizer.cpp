#include <doctest.h>

#include <cmath>
#include <limits>

#include "deepritz/optimizer.hpp"

using namespace deepritz;

namespace {

ParamStore store(std::vector<double> v) {
  TensorLayout l;
  l.add("theta", {v.size()});
  return ParamStore(l, std::move(v));
}

}  // namespace

TEST_CASE("sgd arithmetic") {
  auto p = store({1.0, 2.0});
  const std::vector<double> g{0.5, -1.0};
  sgd_step(p, g, 0.1);
  CHECK(p.values()[0] == doctest::Approx(0.95));
  CHECK(p.values()[1] == doctest::Approx(2.1));

  const std::vector<double> zero{0.0, 0.0};
  const auto before = p;
  sgd_step(p, zero, 0.1);
  CHECK(p == before);
}

TEST_CASE("sgd on a quadratic contracts geometrically") {
  auto p = store({3.0});
  for (int k = 1; k <= 50; ++k) {
    const std::vector<double> g{p.values()[0]};
    sgd_step(p, g, 0.1);
    CHECK(p.values()[0] == doctest::Approx(3.0 * std::pow(0.9, k)).epsilon(1e-12));
  }
}

TEST_CASE("non-finite gradients are surfaced") {
  auto p = store({1.0, 1.0});
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  const std::vector<double> inf{std::numeric_limits<double>::infinity(), 1.0};
  CHECK_THROWS_AS(sgd_step(p, bad, 0.1), NonFiniteGradientError);
  AdamState s(2);
  CHECK_THROWS_AS(adam_step(s, p, inf), NonFiniteGradientError);
  CHECK(p.values()[0] == 1.0);
  CHECK(s.step() == 0);
  const std::vector<double> short_grad{1.0};
  CHECK_THROWS(sgd_step(p, short_grad, 0.1));
  CHECK_THROWS(adam_step(s, p, short_grad));
}

TEST_CASE("adam first step is a signed step of size eta") {
  auto p = store({0.0, 0.0, 0.0});
  AdamState s(3);
  const std::vector<double> g{3.0, -0.02, 0.0};
  adam_step(s, p, g);
  CHECK(s.step() == 1);
  CHECK(p.values()[0] == doctest::Approx(-1e-3 * 3.0 / (3.0 + 1e-8)));
  CHECK(p.values()[1] == doctest::Approx(1e-3 * 0.02 / (0.02 + 1e-8)));
  CHECK(p.values()[2] == 0.0);
}

TEST_CASE("adam zero gradient on fresh state") {
  auto p = store({1.5});
  AdamState s(1);
  const std::vector<double> g{0.0};
  adam_step(s, p, g);
  CHECK(p.values()[0] == 1.5);
  CHECK(s.step() == 1);
}

TEST_CASE("adam two-step recurrence by hand") {
  const double eta = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
  auto p = store({1.0});
  AdamState s(1, AdamConfig{eta, b1, b2, eps});
  const std::vector<double> gv{g};
  adam_step(s, p, gv);
  adam_step(s, p, gv);

  double theta = 1.0, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= eta * mh / (std::sqrt(vh) + eps);
  }
  CHECK(std::abs(p.values()[0] - theta) <= 1e-12);
  CHECK(std::abs(s.first_moment()[0] - m) <= 1e-15);
  CHECK(std::abs(s.second_moment()[0] - v) <= 1e-15);
}

TEST_CASE("adam first step is invariant to gradient scale") {
  const std::vector<double> g{0.3, -2.0, 1e-3};
  auto ref = store({1.0, 1.0, 1.0});
  AdamState s0(3, AdamConfig{1e-3, 0.9, 0.999, 1e-16});
  adam_step(s0, ref, g);
  for (double c : {10.0, 1000.0}) {
    auto p = store({1.0, 1.0, 1.0});
    AdamState s(3, AdamConfig{1e-3, 0.9, 0.999, 1e-16});
    std::vector<double> cg(g);
    for (auto& x : cg) x *= c;
    adam_step(s, p, cg);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs((p.values()[i] - 1.0) - (ref.values()[i] - 1.0)) <= 1e-8);
    }
  }
}

TEST_CASE("gradient clipping rescales to the global norm") {
  auto p = store({0.0, 0.0});
  auto q = store({0.0, 0.0});
  AdamConfig clipped;
  clipped.clip_norm = 1.0;
  AdamState a(2, clipped), b(2);
  const std::vector<double> big{30.0, 40.0};
  const std::vector<double> unit{0.6, 0.8};
  adam_step(a, p, big);
  adam_step(b, q, unit);
  CHECK(p.values()[0] == doctest::Approx(q.values()[0]));
  CHECK(a.first_moment()[1] == doctest::Approx(0.1 * 0.8));
  CHECK_THROWS(AdamState(2, AdamConfig{1e-3, 1.0, 0.999, 1e-8}));
  CHECK_THROWS(AdamState(2, AdamConfig{1e-3, 0.9, 0.999, 0.0}));
}

TEST_CASE("adam is deterministic") {
  auto p = store({0.1, 0.2});
  auto q = p;
  AdamState a(2), b(2);
  for (int k = 0; k < 10; ++k) {
    const std::vector<double> g{std::sin(k), std::cos(k)};
    adam_step(a, p, g);
    adam_step(b, q, g);
  }
  CHECK(p == q);
}

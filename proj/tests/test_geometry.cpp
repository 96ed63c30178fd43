#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "deepritz/geometry.hpp"

using namespace deepritz;

TEST_CASE("measures") {
  const auto cube = Domain::unit_cube(3);
  CHECK(cube.dim() == 3);
  CHECK(cube.interior_measure() == 1.0);
  CHECK(cube.boundary_measure() == 6.0);
  CHECK(cube.face_count() == 6);

  const auto box = Domain::box(-3, 3, 2);
  CHECK(box.interior_measure() == doctest::Approx(36.0));
  CHECK(box.boundary_measure() == doctest::Approx(24.0));
  CHECK(box.face_measure(0) == doctest::Approx(6.0));

  const auto line = Domain::box(-3, 3, 1);
  CHECK(line.face_count() == 2);
  CHECK(line.face_measure(1) == 1.0);
  CHECK(line.boundary_measure() == 2.0);

  const auto slit = Domain::slit_square();
  CHECK(slit.interior_measure() == 4.0);
  CHECK(slit.face_count() == 5);
  CHECK(slit.face_measure(4) == 1.0);
  CHECK(slit.boundary_measure() == 9.0);

  CHECK_THROWS(Domain::unit_cube(0));
  CHECK_THROWS(Domain::box(1, 1, 2));
  CHECK_THROWS(cube.face_measure(6));
}

TEST_CASE("interior samples are inside and reproducible") {
  for (const auto& dom : {Domain::unit_cube(5), Domain::box(-3, 3, 2), Domain::slit_square()}) {
    RngStream a(3), b(3);
    const auto s = sample_interior(dom, 2000, a);
    const auto t = sample_interior(dom, 2000, b);
    CHECK(s.points == t.points);
    CHECK(s.size() == 2000);
    CHECK(s.domain_measure == dom.interior_measure());
    for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
      CHECK(s.region[j] == kInterior);
      REQUIRE(dom.contains_closure(std::span<const double>(s.points.col(j).data(), dom.dim())));
    }
  }
}

TEST_CASE("slit square interior never touches the slit") {
  RngStream rng(8);
  const auto s = sample_interior(Domain::slit_square(), 50000, rng);
  for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
    const double x1 = s.points(0, j), x2 = s.points(1, j);
    REQUIRE(std::abs(x1) < 1.0);
    REQUIRE(std::abs(x2) < 1.0);
    REQUIRE_FALSE((x2 == 0.0 && x1 >= 0.0));
  }
}

TEST_CASE("boundary samples lie on their faces") {
  RngStream rng(4);
  const auto cube = Domain::unit_cube(4);
  const auto s = sample_boundary(cube, 10, rng);
  CHECK(s.size() == 80);
  CHECK(s.face_measure.size() == 8);
  std::set<int> faces;
  for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
    const int f = s.region[j];
    faces.insert(f);
    const auto k = static_cast<Eigen::Index>(f / 2);
    CHECK(s.points(k, j) == (f % 2 ? 1.0 : 0.0));
  }
  CHECK(faces.size() == 8);

  const auto slit = sample_boundary(Domain::slit_square(), 50, rng);
  for (Eigen::Index j = 0; j < slit.points.cols(); ++j) {
    const double x1 = slit.points(0, j), x2 = slit.points(1, j);
    switch (slit.region[j]) {
      case 0: CHECK(x2 == -1.0); break;
      case 1: CHECK(x1 == 1.0); break;
      case 2: CHECK(x2 == 1.0); break;
      case 3: CHECK(x1 == -1.0); break;
      case 4:
        CHECK(x2 == 0.0);
        CHECK(x1 >= 0.0);
        CHECK(x1 <= 1.0);
        break;
      default: FAIL("bad face id");
    }
  }
}

TEST_CASE("Monte-Carlo mean of x1^2 sits within the CLT band") {
  // Var(x^2) for x ~ U(0,1) is 1/5 - 1/9.
  const double sigma = std::sqrt(1.0 / 5 - 1.0 / 9);
  const std::size_t n = 100000;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RngStream rng(seed);
    const auto s = sample_interior(Domain::unit_cube(10), n, rng);
    const double mean = s.points.row(0).array().square().mean();
    CHECK(std::abs(mean - 1.0 / 3) < 4 * sigma / std::sqrt(double(n)));
  }
}

TEST_CASE("polar angle conventions") {
  using std::numbers::pi;
  CHECK(polar(1, 0).theta == 0.0);
  CHECK(polar(0, 1).theta == doctest::Approx(pi / 2));
  CHECK(polar(-1, 0).theta == doctest::Approx(pi));
  CHECK(polar(0, -1).theta == doctest::Approx(3 * pi / 2));
  CHECK(polar(1, -0.0).theta == 0.0);
  CHECK(polar(1, -1e-300).theta < 2 * pi);
  CHECK(polar(0, 0).r == 0.0);
  CHECK(polar(3, 4).r == doctest::Approx(5.0));

  CHECK(slit_corner_solution(0.5, 0.0) == 0.0);
  CHECK(slit_corner_solution(0, 0) == 0.0);
  CHECK(slit_corner_solution(-1, 0) == doctest::Approx(1.0));
  CHECK(slit_corner_solution(0, 1) == doctest::Approx(std::sin(pi / 4)));
  // just below the slit the value approaches 0 from the other side of the cut
  CHECK(std::abs(slit_corner_solution(0.5, -1e-12)) < 1e-5);
}

TEST_CASE("corner solution is harmonic away from the origin") {
  const double h = 1e-3;
  for (auto [x, y] : {std::pair{0.3, 0.4}, {-0.5, 0.2}, {-0.2, -0.7}, {0.6, -0.3}}) {
    const double lap = (slit_corner_solution(x + h, y) + slit_corner_solution(x - h, y) +
                        slit_corner_solution(x, y + h) + slit_corner_solution(x, y - h) -
                        4 * slit_corner_solution(x, y)) /
                       (h * h);
    CHECK(std::abs(lap) < 1e-4);
  }
}

#include "deepritz/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace deepritz {

namespace {

struct Interval {
  double lo, hi;
};

Interval extent(const Domain::Shape& s) {
  if (const auto* b = std::get_if<Box>(&s)) return {b->lo, b->hi};
  if (std::holds_alternative<SlitSquare>(s)) return {-1.0, 1.0};
  return {0.0, 1.0};
}

bool on_slit(double x1, double x2) { return x2 == 0.0 && x1 >= 0.0; }

}  // namespace

Domain::Domain(Shape shape) : shape_(shape) {
  if (const auto* c = std::get_if<UnitCube>(&shape_)) {
    if (c->dim == 0) throw std::invalid_argument("unit cube dimension must be >= 1");
  } else if (const auto* b = std::get_if<Box>(&shape_)) {
    if (b->dim == 0) throw std::invalid_argument("box dimension must be >= 1");
    if (!(b->lo < b->hi)) throw std::invalid_argument("box requires lo < hi");
  }
}

std::size_t Domain::dim() const {
  if (const auto* c = std::get_if<UnitCube>(&shape_)) return c->dim;
  if (const auto* b = std::get_if<Box>(&shape_)) return b->dim;
  return 2;
}

double Domain::interior_measure() const {
  if (std::holds_alternative<SlitSquare>(shape_)) return 4.0;
  const auto [lo, hi] = extent(shape_);
  return std::pow(hi - lo, static_cast<double>(dim()));
}

std::size_t Domain::face_count() const {
  if (std::holds_alternative<SlitSquare>(shape_)) return 5;
  return 2 * dim();
}

double Domain::face_measure(std::size_t face) const {
  if (face >= face_count()) throw std::out_of_range("face id out of range");
  if (std::holds_alternative<SlitSquare>(shape_)) return face == 4 ? 1.0 : 2.0;
  const auto [lo, hi] = extent(shape_);
  return std::pow(hi - lo, static_cast<double>(dim() - 1));
}

double Domain::boundary_measure() const {
  double total = 0.0;
  for (std::size_t f = 0; f < face_count(); ++f) total += face_measure(f);
  return total;
}

std::string Domain::describe() const {
  std::ostringstream os;
  if (const auto* c = std::get_if<UnitCube>(&shape_)) {
    os << "UnitCube(" << c->dim << ")";
  } else if (const auto* b = std::get_if<Box>(&shape_)) {
    os << "Box(" << b->lo << "," << b->hi << "," << b->dim << ")";
  } else {
    os << "SlitSquare";
  }
  return os.str();
}

bool Domain::contains_closure(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  const auto [lo, hi] = extent(shape_);
  for (double v : x) {
    if (!(v >= lo && v <= hi)) return false;
  }
  return true;
}

SampleBatch sample_interior(const Domain& domain, std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("sample_interior requires n >= 1");
  const auto d = static_cast<Eigen::Index>(domain.dim());
  const auto [lo, hi] = extent(domain.shape());
  const bool slit = std::holds_alternative<SlitSquare>(domain.shape());

  SampleBatch batch;
  batch.points.resize(d, static_cast<Eigen::Index>(n));
  batch.region.assign(n, kInterior);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
    do {
      for (Eigen::Index k = 0; k < d; ++k) batch.points(k, j) = rng.uniform(lo, hi);
    } while (slit && on_slit(batch.points(0, j), batch.points(1, j)));
  }
  batch.domain_measure = domain.interior_measure();
  batch.boundary_measure = domain.boundary_measure();
  for (std::size_t f = 0; f < domain.face_count(); ++f) {
    batch.face_measure.push_back(domain.face_measure(f));
  }
  return batch;
}

SampleBatch sample_boundary(const Domain& domain, std::size_t n_per_face, RngStream& rng) {
  if (n_per_face == 0) throw std::invalid_argument("sample_boundary requires n_per_face >= 1");
  const auto d = static_cast<Eigen::Index>(domain.dim());
  const auto faces = domain.face_count();
  const auto [lo, hi] = extent(domain.shape());
  const bool slit = std::holds_alternative<SlitSquare>(domain.shape());

  SampleBatch batch;
  batch.points.resize(d, static_cast<Eigen::Index>(faces * n_per_face));
  batch.region.reserve(faces * n_per_face);
  Eigen::Index col = 0;
  for (std::size_t f = 0; f < faces; ++f) {
    for (std::size_t i = 0; i < n_per_face; ++i, ++col) {
      auto x = batch.points.col(col);
      if (slit) {
        const double t = rng.uniform_open();
        switch (f) {
          case 0: x << -1.0 + 2.0 * t, -1.0; break;
          case 1: x << 1.0, -1.0 + 2.0 * t; break;
          case 2: x << 1.0 - 2.0 * t, 1.0; break;
          case 3: x << -1.0, 1.0 - 2.0 * t; break;
          default: x << t, 0.0; break;
        }
      } else {
        for (Eigen::Index k = 0; k < d; ++k) x(k) = rng.uniform(lo, hi);
        x(static_cast<Eigen::Index>(f / 2)) = (f % 2 == 0) ? lo : hi;
      }
      batch.region.push_back(static_cast<int>(f));
    }
  }
  batch.domain_measure = domain.interior_measure();
  batch.boundary_measure = domain.boundary_measure();
  for (std::size_t f = 0; f < faces; ++f) batch.face_measure.push_back(domain.face_measure(f));
  return batch;
}

Polar polar(double x1, double x2) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r = std::hypot(x1, x2);
  if (r == 0.0) return {0.0, 0.0};
  double theta = std::atan2(x2, x1);
  if (theta < 0.0) theta += two_pi;
  if (theta >= two_pi) theta = std::nextafter(two_pi, 0.0);
  if (theta == 0.0) theta = 0.0;  // drop a negative zero
  return {r, theta};
}

double slit_corner_solution(double x1, double x2) {
  const auto [r, theta] = polar(x1, x2);
  return std::sqrt(r) * std::sin(0.5 * theta);
}

}  // namespace deepritz

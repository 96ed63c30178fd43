#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "deepritz/rng.hpp"

namespace deepritz {

struct UnitCube {
  std::size_t dim = 1;
};

struct Box {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t dim = 1;
};

/// (-1,1)^2 with the segment [0,1) x {0} removed.
struct SlitSquare {};

class Domain {
 public:
  using Shape = std::variant<UnitCube, Box, SlitSquare>;

  /// Throws std::invalid_argument unless dim >= 1 and lo < hi.
  explicit Domain(Shape shape);

  static Domain unit_cube(std::size_t dim) { return Domain(UnitCube{dim}); }
  static Domain box(double lo, double hi, std::size_t dim) { return Domain(Box{lo, hi, dim}); }
  static Domain slit_square() { return Domain(SlitSquare{}); }

  const Shape& shape() const { return shape_; }
  std::size_t dim() const;
  double interior_measure() const;
  double boundary_measure() const;
  std::size_t face_count() const;
  double face_measure(std::size_t face) const;
  std::string describe() const;

  /// Closure membership (slit points count as boundary, so they are included).
  bool contains_closure(std::span<const double> x) const;

 private:
  Shape shape_;
};

inline constexpr int kInterior = -1;

struct SampleBatch {
  Eigen::MatrixXd points;   // dim x n, one point per column
  std::vector<int> region;  // kInterior or a face id, per point
  double domain_measure = 0.0;
  double boundary_measure = 0.0;
  std::vector<double> face_measure;

  std::size_t size() const { return region.size(); }
  bool empty() const { return region.empty(); }
};

/// n i.i.d. uniform points in the open interior.
SampleBatch sample_interior(const Domain& domain, std::size_t n, RngStream& rng);

/// n_per_face uniform points on every face, tagged by face id.
///
/// Box faces: 2k is {x_k = lo}, 2k+1 is {x_k = hi}.  SlitSquare faces:
/// 0 bottom, 1 right, 2 top, 3 left, 4 the slit [0,1] x {0}.
SampleBatch sample_boundary(const Domain& domain, std::size_t n_per_face, RngStream& rng);

struct Polar {
  double r;
  double theta;  // in [0, 2 pi), measured from the positive x1 axis
};

Polar polar(double x1, double x2);

/// r^(1/2) sin(theta/2): harmonic on the slit square, zero on both slit sides.
double slit_corner_solution(double x1, double x2);

}  // namespace deepritz

#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "deepritz/eval_report.hpp"
#include "deepritz/functionals.hpp"

namespace deepritz {

enum class NodeClass { Interior, OuterBoundary, SlitNode };

/// Uniform n x n node grid over [-1,1]^2.  Node (i, j) sits at
/// (x1_i, x2_j) and has flat index j * n + i.  n must be odd so that x2 = 0
/// is a grid line.
class Grid2D {
 public:
  explicit Grid2D(std::size_t n, bool with_slit = true);

  std::size_t n() const { return n_; }
  double h() const { return 2.0 / static_cast<double>(n_ - 1); }
  bool with_slit() const { return with_slit_; }
  std::size_t node_count() const { return n_ * n_; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * n_ + i; }

  /// Exact grid coordinate; the middle line evaluates to exactly 0.
  double coord(std::size_t i) const;
  NodeClass classify(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_;
  bool with_slit_;
};

enum class FdmProblem {
  SlitPoissonF1,        // -Lap u = 1, u = 0 on the outer boundary and the slit
  SlitHarmonicExactBC,  // Lap u = 0, u = r^(1/2) sin(theta/2) on the boundary
};

enum class FdmSolver { ConjugateGradient, Direct };

struct FdmSolution {
  Grid2D grid;
  std::vector<double> values;  // one per node, flat index
  double residual = 0.0;       // infinity norm of the 5-point residual
  std::size_t iterations = 0;  // 0 for the direct solver

  double at(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }
  /// Bilinear interpolation between nodes.
  double interpolate(double x1, double x2) const;
};

class FdmConvergenceError : public std::runtime_error {
 public:
  FdmConvergenceError(double residual, std::size_t iterations);
  double residual() const { return residual_; }

 private:
  double residual_;
};

inline constexpr double kFdmTolerance = 1e-10;

/// Requires n odd and n >= 5.
FdmSolution fdm_solve(std::size_t n, FdmProblem problem,
                      FdmSolver solver = FdmSolver::ConjugateGradient);

/// General Dirichlet solve of -(u_E + u_W + u_N + u_S - 4 u_C) / h^2 = f on
/// Interior nodes, with u = g on OuterBoundary nodes and u = 0 on SlitNodes.
FdmSolution fdm_solve(const Grid2D& grid, const PointFunction& f,
                      const PointFunction& g, FdmSolver solver,
                      double tolerance = kFdmTolerance);

/// rel_l2 and max_err over Interior nodes.
EvalReport fdm_error(const FdmSolution& sol, const PointFunction& exact);

/// Writes "x1,x2,u" rows, one per node.
void write_fdm_csv(std::ostream& out, const FdmSolution& sol);

}  // namespace deepritz

#include "deepritz/fdm.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace deepritz {

Grid2D::Grid2D(std::size_t n, bool with_slit) : n_(n), with_slit_(with_slit) {
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("grid size must be odd and >= 3, got " + std::to_string(n));
  }
}

double Grid2D::coord(std::size_t i) const {
  const auto last = static_cast<double>(n_ - 1);
  return (2.0 * static_cast<double>(i) - last) / last;
}

NodeClass Grid2D::classify(std::size_t i, std::size_t j) const {
  const std::size_t mid = (n_ - 1) / 2;
  if (with_slit_ && j == mid && i >= mid) return NodeClass::SlitNode;
  if (i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1) return NodeClass::OuterBoundary;
  return NodeClass::Interior;
}

FdmConvergenceError::FdmConvergenceError(double residual, std::size_t iterations)
    : std::runtime_error("finite-difference solve did not converge after " +
                         std::to_string(iterations) + " iterations (residual " +
                         std::to_string(residual) + ")"),
      residual_(residual) {}

double FdmSolution::interpolate(double x1, double x2) const {
  const auto n = grid.n();
  const double h = grid.h();
  auto locate = [&](double x) {
    const double t = std::clamp((x + 1.0) / h, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(std::floor(t));
    if (i >= n - 1) i = n - 2;
    return std::pair{i, t - static_cast<double>(i)};
  };
  const auto [i, s] = locate(x1);
  const auto [j, t] = locate(x2);
  return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) +
         (1 - s) * t * at(i, j + 1) + s * t * at(i + 1, j + 1);
}

namespace {

struct System {
  std::vector<std::ptrdiff_t> unknown;  // node -> unknown index or -1
  std::vector<std::size_t> node_of;     // unknown -> node
  Eigen::VectorXd rhs;
};

// 5-point operator on the unknowns: (A u)_C = (4 u_C - sum of unknown neighbours) / h^2.
void apply(const Grid2D& grid, const System& sys, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
  const auto n = grid.n();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  out.resize(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const auto node = sys.node_of[static_cast<std::size_t>(k)];
    double acc = 4.0 * u(k);
    for (std::size_t nb : {node - 1, node + 1, node - n, node + n}) {
      const auto idx = sys.unknown[nb];
      if (idx >= 0) acc -= u(idx);
    }
    out(k) = acc * inv_h2;
  }
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

FdmSolution fdm_solve(const Grid2D& grid, const PointFunction& f, const PointFunction& g,
                      FdmSolver solver, double tolerance) {
  const auto n = grid.n();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());

  FdmSolution sol{grid, std::vector<double>(grid.node_count(), 0.0), 0.0, 0};
  System sys;
  sys.unknown.assign(grid.node_count(), -1);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto node = grid.index(i, j);
      const double x[2] = {grid.coord(i), grid.coord(j)};
      switch (grid.classify(i, j)) {
        case NodeClass::Interior:
          sys.unknown[node] = static_cast<std::ptrdiff_t>(sys.node_of.size());
          sys.node_of.push_back(node);
          break;
        case NodeClass::OuterBoundary:
          sol.values[node] = g ? g(x) : 0.0;
          break;
        case NodeClass::SlitNode:
          sol.values[node] = 0.0;
          break;
      }
    }
  }

  const auto m = static_cast<Eigen::Index>(sys.node_of.size());
  sys.rhs.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto node = sys.node_of[static_cast<std::size_t>(k)];
    const double x[2] = {grid.coord(node % n), grid.coord(node / n)};
    double b = f ? f(x) : 0.0;
    for (std::size_t nb : {node - 1, node + 1, node - n, node + n}) {
      if (sys.unknown[nb] < 0) b += sol.values[nb] * inv_h2;
    }
    sys.rhs(k) = b;
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd au;
  if (solver == FdmSolver::Direct) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto node = sys.node_of[static_cast<std::size_t>(k)];
      triplets.emplace_back(k, k, 4.0 * inv_h2);
      for (std::size_t nb : {node - 1, node + 1, node - n, node + n}) {
        if (sys.unknown[nb] >= 0) triplets.emplace_back(k, sys.unknown[nb], -inv_h2);
      }
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("sparse factorisation failed");
    u = ldlt.solve(sys.rhs);
    apply(grid, sys, u, au);
    sol.residual = inf_norm(sys.rhs - au);
  } else {
    // Conjugate gradient on the SPD 5-point system.
    Eigen::VectorXd r = sys.rhs;
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    const std::size_t cap = std::max<std::size_t>(1000, 20 * n);
    std::size_t it = 0;
    while (inf_norm(r) > tolerance) {
      if (it == cap) throw FdmConvergenceError(inf_norm(r), it);
      apply(grid, sys, p, au);
      const double alpha = rr / p.dot(au);
      u += alpha * p;
      r -= alpha * au;
      ++it;
      // Refresh the recursive residual now and then to limit drift.
      if (it % 200 == 0) {
        apply(grid, sys, u, au);
        r = sys.rhs - au;
      }
      const double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
    }
    apply(grid, sys, u, au);
    sol.residual = inf_norm(sys.rhs - au);
    sol.iterations = it;
  }
  for (Eigen::Index k = 0; k < m; ++k) sol.values[sys.node_of[static_cast<std::size_t>(k)]] = u(k);
  return sol;
}

FdmSolution fdm_solve(std::size_t n, FdmProblem problem, FdmSolver solver) {
  if (n < 5) throw std::invalid_argument("fdm_solve needs n >= 5");
  const Grid2D grid(n, true);
  if (problem == FdmProblem::SlitPoissonF1) {
    return fdm_solve(grid, [](std::span<const double>) { return 1.0; }, {}, solver);
  }
  return fdm_solve(
      grid, {}, [](std::span<const double> x) { return slit_corner_solution(x[0], x[1]); },
      solver);
}

EvalReport fdm_error(const FdmSolution& sol, const PointFunction& exact) {
  const auto n = sol.grid.n();
  double err2 = 0.0, ref2 = 0.0, max_err = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (sol.grid.classify(i, j) != NodeClass::Interior) continue;
      const double x[2] = {sol.grid.coord(i), sol.grid.coord(j)};
      const double e = exact(x);
      const double diff = sol.at(i, j) - e;
      err2 += diff * diff;
      ref2 += e * e;
      max_err = std::max(max_err, std::abs(diff));
    }
  }
  if (ref2 == 0.0) throw ZeroReferenceError("exact solution vanishes on all interior nodes");
  EvalReport rep;
  rep.rel_l2 = std::sqrt(err2 / ref2);
  rep.max_err = max_err;
  return rep;
}

void write_fdm_csv(std::ostream& out, const FdmSolution& sol) {
  const auto n = sol.grid.n();
  out << "x1,x2,u\n";
  char buf[96];
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sol.grid.coord(i),
                    sol.grid.coord(j), sol.at(i, j));
      out << buf;
    }
  }
}

}  // namespace deepritz

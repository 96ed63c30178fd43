#include "deepritz/problems.hpp"

#include <cmath>
#include <numbers>

#include "deepritz/fdm.hpp"

namespace deepritz {

namespace {

constexpr double kPi = std::numbers::pi;

// Three ReLU3 blocks compose cubics; at the plain Glorot bound the output
// overflows on the 10- and 100-dimensional cubes.
constexpr double kDeepCubicGain = 0.5;

// At a constant rate the last iterate's Rayleigh quotient wanders by a few
// percent; halving eta every 10k steps settles it.
Schedule spectral_schedule() {
  Schedule s;
  s.decay_every = 10000;
  s.decay_rate = 0.5;
  return s;
}

// Fine-grid reference for the slit Poisson problem, which has no closed form.
// Its nodes contain every node of the 201-point evaluation grid.
constexpr std::size_t kSlitPoissonReferenceGrid = 401;

const FdmSolution& slit_poisson_reference() {
  static const FdmSolution sol = fdm_solve(kSlitPoissonReferenceGrid, FdmProblem::SlitPoissonF1);
  return sol;
}

double sum_pair_products(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); k += 2) s += x[k] * x[k + 1];
  return s;
}

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double sum_cos_pi(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::cos(kPi * v);
  return s;
}

double prod_sin_pi(std::span<const double> x) {
  double p = 1.0;
  for (double v : x) p *= std::sin(kPi * v);
  return p;
}

double transfer_target_solution(std::span<const double> x) {
  const double bump = (1 + x[0]) * (1 - x[0]) * (1 + x[1]) * (1 - x[1]) * x[1];
  return slit_corner_solution(x[0], x[1]) + bump;
}

double transfer_target_source(std::span<const double> x) {
  return 6 * (1 + x[0]) * (1 - x[0]) * x[1] + 2 * (1 + x[1]) * (1 - x[1]) * x[1];
}

double corner(std::span<const double> x) { return slit_corner_solution(x[0], x[1]); }

ResNetConfig resnet(std::size_t d, std::size_t m, std::size_t blocks) {
  return ResNetConfig{d, m, blocks, Activation::ReLU3};
}

DenseNetConfig densenet(std::size_t d) {
  return DenseNetConfig{d, {16, 16, 16, 16}, Activation::ReLU2};
}

std::vector<ProblemSpec> build_catalog() {
  std::vector<ProblemSpec> out;
  const auto slit = Domain::slit_square();

  {
    Schedule s;
    out.push_back({"slit_poisson", "-Lap u = 1 on the slit square, u = 0 on the boundary",
                   slit,
                   PoissonDirichlet{[](std::span<const double>) { return 1.0; }, 500.0, {}},
                   resnet(2, 10, 4), s,
                   [](std::span<const double> x) {
                     return slit_poisson_reference().interpolate(x[0], x[1]);
                   },
                   std::nullopt, GridEval{}});
  }
  {
    Schedule s;
    out.push_back({"slit_harmonic", "Lap u = 0 on the slit square, u = r^(1/2) sin(theta/2)",
                   slit, PoissonDirichlet{{}, 500.0, corner}, resnet(2, 10, 4), s, corner,
                   std::nullopt, GridEval{}});
  }
  {
    Schedule s;
    s.interior_batch = 1000;
    s.boundary_per_face = 100;
    s.init_gain = kDeepCubicGain;
    out.push_back({"hd_poisson_10", "Lap u = 0 on (0,1)^10, u = sum x_{2k-1} x_{2k}",
                   Domain::unit_cube(10), PoissonDirichlet{{}, 1000.0, sum_pair_products},
                   resnet(10, 10, 3), s, sum_pair_products, std::nullopt, MonteCarloEval{}});
  }
  {
    Schedule s;
    s.interior_batch = 1000;
    s.boundary_per_face = 10;
    s.init_gain = kDeepCubicGain;
    out.push_back({"hd_poisson_100", "-Lap u = -200 on (0,1)^100, u = sum x_k^2",
                   Domain::unit_cube(100),
                   PoissonDirichlet{[](std::span<const double>) { return -200.0; }, 500.0,
                                    sum_squares},
                   resnet(100, 100, 3), s, sum_squares, std::nullopt, MonteCarloEval{}});
  }
  for (std::size_t d : {5, 10}) {
    Schedule s;
    s.init_gain = kDeepCubicGain;
    out.push_back({"neumann_" + std::to_string(d),
                   "-Lap u + pi^2 u = 2 pi^2 sum cos(pi x_k), zero Neumann data",
                   Domain::unit_cube(d),
                   NeumannReaction{[](std::span<const double> x) {
                                     return 2 * kPi * kPi * sum_cos_pi(x);
                                   },
                                   kPi * kPi},
                   resnet(d, 10, 3), s, sum_cos_pi, std::nullopt, MonteCarloEval{}});
  }
  for (std::size_t d : {1, 5, 10}) {
    Schedule s = spectral_schedule();
    out.push_back({"well_" + std::to_string(d), "ground state of the infinite well on [0,1]^d",
                   Domain::unit_cube(d), Rayleigh{{}, 2000.0, 1000.0}, densenet(d), s,
                   prod_sin_pi, static_cast<double>(d) * kPi * kPi, MonteCarloEval{}});
  }
  // The batch penalty carries an extra gamma |Omega|^2 Var(mean u^2), which
  // on [-3,3]^d pulls u towards flat functions unless gamma is small.  The
  // quotient is scale invariant, so gamma only has to pin the scale.
  for (std::size_t d : {1, 5, 10}) {
    Schedule s = spectral_schedule();
    s.init_gain = 0.5;
    out.push_back({"oscillator_" + std::to_string(d),
                   "ground state of the harmonic oscillator truncated to [-3,3]^d",
                   Domain::box(-3.0, 3.0, d), Rayleigh{sum_squares, 2000.0, 1.0},
                   densenet(d), s,
                   [](std::span<const double> x) { return std::exp(-0.5 * sum_squares(x)); },
                   static_cast<double>(d), MonteCarloEval{}});
  }
  {
    Schedule s;
    out.push_back({"transfer_source", "slit harmonic problem on a 3-block network", slit,
                   PoissonDirichlet{{}, 500.0, corner}, resnet(2, 10, 3), s, corner,
                   std::nullopt, GridEval{}});
  }
  {
    Schedule s;
    out.push_back({"transfer_target", "slit problem with a polynomial source term", slit,
                   PoissonDirichlet{transfer_target_source, 500.0, transfer_target_solution},
                   resnet(2, 10, 3), s, transfer_target_solution, std::nullopt, GridEval{}});
  }
  return out;
}

}  // namespace

const std::vector<ProblemSpec>& catalog() {
  static const std::vector<ProblemSpec> problems = build_catalog();
  return problems;
}

const ProblemSpec& find_problem(std::string_view id) {
  for (const auto& p : catalog()) {
    if (p.id == id) return p;
  }
  throw UnknownProblemError(id);
}

double exact_solution(std::string_view id, std::span<const double> x) {
  const auto& spec = find_problem(id);
  if (x.size() != spec.domain.dim()) {
    throw std::invalid_argument("point dimension does not match problem '" + spec.id + "'");
  }
  return spec.exact(x);
}

PointFunction potential_of(const ProblemSpec& spec) {
  if (const auto* r = std::get_if<Rayleigh>(&spec.loss)) return r->v;
  return {};
}

Evaluator::Evaluator(const ProblemSpec& spec) : spec_(spec) {
  if (const auto* g = std::get_if<GridEval>(&spec.eval)) {
    const Grid2D grid(g->n, true);
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t j = 0; j < grid.n(); ++j) {
      for (std::size_t i = 0; i < grid.n(); ++i) {
        if (grid.classify(i, j) == NodeClass::SlitNode) continue;
        nodes.emplace_back(grid.coord(i), grid.coord(j));
      }
    }
    points_.resize(2, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      points_(0, static_cast<Eigen::Index>(k)) = nodes[k].first;
      points_(1, static_cast<Eigen::Index>(k)) = nodes[k].second;
    }
  } else {
    const auto& mc = std::get<MonteCarloEval>(spec.eval);
    RngStream rng = RngStream(mc.seed).split("eval");
    points_ = sample_interior(spec.domain, mc.n, rng).points;
  }
  reference_.resize(points_.cols());
  for (Eigen::Index j = 0; j < points_.cols(); ++j) {
    reference_(j) = spec.exact(std::span<const double>(points_.col(j).data(),
                                                       static_cast<std::size_t>(points_.rows())));
  }
}

EvalReport Evaluator::operator()(const JetModel& model) const {
  constexpr Eigen::Index kBlock = 1 << 14;
  Eigen::RowVectorXd uh(points_.cols());
  for (Eigen::Index b = 0; b < points_.cols(); b += kBlock) {
    const auto c = std::min(kBlock, points_.cols() - b);
    uh.segment(b, c) = model.values(points_.middleCols(b, c));
  }
  const double ref2 = reference_.squaredNorm();
  if (ref2 == 0.0) throw ZeroReferenceError("reference solution is zero on the evaluation set");

  if (spec_.spectral()) {
    const double uu = uh.squaredNorm();
    const double scale = uu > 0.0 ? uh.dot(reference_) / uu : 0.0;
    uh *= scale;
  }
  const Eigen::RowVectorXd diff = uh - reference_;
  EvalReport rep;
  rep.rel_l2 = std::sqrt(diff.squaredNorm() / ref2);
  rep.max_err = diff.cwiseAbs().maxCoeff();
  if (spec_.spectral()) {
    std::uint64_t seed = 0;
    if (const auto* mc = std::get_if<MonteCarloEval>(&spec_.eval)) seed = mc->seed;
    RngStream rng = RngStream(seed).split("rayleigh");
    const double lambda = rayleigh_estimate(model, spec_.domain, potential_of(spec_), 100000, rng);
    rep.lambda_est = lambda;
    rep.lambda_rel_err = std::abs(lambda - *spec_.exact_eigenvalue) / *spec_.exact_eigenvalue;
  }
  return rep;
}

EvalReport evaluate(const ProblemSpec& spec, const JetModel& model) {
  return Evaluator(spec)(model);
}

EvalReport evaluate(const ProblemSpec& spec, const TrialFunction& net,
                    const ParamStore& params) {
  return evaluate(spec, NetworkModel(net, params));
}

}  // namespace deepritz

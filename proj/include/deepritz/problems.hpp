#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "deepritz/eval_report.hpp"
#include "deepritz/functionals.hpp"
#include "deepritz/geometry.hpp"
#include "deepritz/trialfn.hpp"

namespace deepritz {

struct Schedule {
  std::size_t iters = 50000;
  std::size_t interior_batch = 1024;
  std::size_t boundary_per_face = 128;
  double eta = 1e-3;
  std::uint64_t seed = 1;
  /// Multiply eta by decay_rate every decay_every steps (0 = constant).
  std::size_t decay_every = 0;
  double decay_rate = 1.0;
  double clip_norm = 0.0;
  double init_gain = 1.0;
};

/// All nodes of an n x n grid over [-1,1]^2 except slit nodes.
struct GridEval {
  std::size_t n = 201;
};

struct MonteCarloEval {
  std::size_t n = 100000;
  std::uint64_t seed = 20171130;
};

using EvalSpec = std::variant<GridEval, MonteCarloEval>;

struct ProblemSpec {
  std::string id;
  std::string summary;
  Domain domain;
  LossKind loss;
  NetConfig net;
  Schedule schedule;
  /// Solution, or the ground-state eigenfunction (up to scale) for spectral problems.
  PointFunction exact;
  std::optional<double> exact_eigenvalue;
  EvalSpec eval;

  bool spectral() const { return exact_eigenvalue.has_value(); }
};

class UnknownProblemError : public std::out_of_range {
 public:
  explicit UnknownProblemError(std::string_view id)
      : std::out_of_range("unknown problem id '" + std::string(id) + "'") {}
};

const std::vector<ProblemSpec>& catalog();
const ProblemSpec& find_problem(std::string_view id);

double exact_solution(std::string_view id, std::span<const double> x);

/// Precomputes evaluation points and reference values for one problem.
class Evaluator {
 public:
  explicit Evaluator(const ProblemSpec& spec);

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::RowVectorXd& reference() const { return reference_; }

  /// rel_l2 and max_err over the evaluation set.  Spectral problems compare
  /// the least-squares rescaling of the model against the eigenfunction and
  /// add a fresh 10^5-point Rayleigh estimate.
  EvalReport operator()(const JetModel& model) const;

 private:
  const ProblemSpec& spec_;
  Eigen::MatrixXd points_;
  Eigen::RowVectorXd reference_;
};

EvalReport evaluate(const ProblemSpec& spec, const JetModel& model);
EvalReport evaluate(const ProblemSpec& spec, const TrialFunction& net,
                    const ParamStore& params);

/// Returns the potential v of a Rayleigh problem (empty otherwise).
PointFunction potential_of(const ProblemSpec& spec);

}  // namespace deepritz

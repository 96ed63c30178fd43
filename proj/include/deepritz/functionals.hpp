#pragma once

#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "deepritz/geometry.hpp"
#include "deepritz/trialfn.hpp"

namespace deepritz {

using PointFunction = std::function<double(std::span<const double>)>;

/// mean[1/2 |grad u|^2 - f u] + beta * mean_boundary[(u - g)^2].
/// An empty g means homogeneous boundary data.
struct PoissonDirichlet {
  PointFunction f;
  double beta = 500.0;
  PointFunction g;
};

/// mean[1/2 (|grad u|^2 + c u^2) - f u], no boundary term.
struct NeumannReaction {
  PointFunction f;
  double reaction = std::numbers::pi * std::numbers::pi;
};

/// (A + B) / C + beta * mean_boundary[u^2] + gamma * (|Omega| C - 1)^2 with
/// A = mean |grad u|^2, B = mean v u^2, C = mean u^2 on one interior sample.
struct Rayleigh {
  PointFunction v;
  double beta = 2000.0;
  double gamma = 100.0;
};

using LossKind = std::variant<PoissonDirichlet, NeumannReaction, Rayleigh>;

/// Throws std::invalid_argument for negative beta or gamma.
void validate(const LossKind& kind);

struct LossReport {
  double total = 0.0;
  double interior_term = 0.0;
  double boundary_term = 0.0;
  double norm_penalty = 0.0;
  double rayleigh_quotient = 0.0;
};

class DegenerateDenominatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryWeighting {
  Plain,        // one pooled mean over all boundary samples
  FaceMeasure,  // per-face means weighted by face measure / boundary measure
};

/// Estimator of the Rayleigh normalisation penalty gamma (|Omega| C - 1)^2.
enum class NormPenalty {
  Batch,  // C = mean u^2 over the whole interior batch
  // (|Omega| C1 - 1)(|Omega| C2 - 1) with C1, C2 the means over the two halves
  // of the batch.  Unbiased for the squared mismatch (the batch form adds
  // gamma |Omega|^2 Var(C)), but unbounded below, so large gamma diverges.
  SplitBatch,
};

struct LossOptions {
  BoundaryWeighting weighting = BoundaryWeighting::Plain;
  NormPenalty norm_penalty = NormPenalty::Batch;
  /// Points per work chunk; partial sums are reduced in chunk order, so the
  /// result depends on chunk_size but never on threads.
  std::size_t chunk_size = 4096;
  std::size_t threads = 1;
};

inline constexpr double kRayleighDenominatorFloor = 1e-12;

LossReport eval_loss(const LossKind& kind, const JetModel& model,
                     const SampleBatch& interior, const SampleBatch& boundary,
                     const LossOptions& options = {});

std::pair<LossReport, std::vector<double>> eval_loss_and_grad(
    const LossKind& kind, const TrialFunction& net, const ParamStore& params,
    const SampleBatch& interior, const SampleBatch& boundary,
    const LossOptions& options = {});

/// (A + B) / C on n >= 10^4 fresh interior points.
double rayleigh_estimate(const JetModel& model, const Domain& domain,
                         const PointFunction& potential, std::size_t n, RngStream& rng);

}  // namespace deepritz

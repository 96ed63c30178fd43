#include "deepritz/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace deepritz {

namespace {

using Eigen::Index;

struct Chunk {
  Index begin;
  Index count;
};

std::vector<Chunk> make_chunks(Index n, std::size_t chunk_size) {
  std::vector<Chunk> chunks;
  const Index step = std::max<Index>(1, static_cast<Index>(chunk_size));
  for (Index b = 0; b < n; b += step) chunks.push_back({b, std::min(step, n - b)});
  return chunks;
}

template <typename Fn>
void run_chunks(const std::vector<Chunk>& chunks, std::size_t threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(threads, 1), chunks.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < chunks.size(); ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < chunks.size(); i += workers) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Eigen::RowVectorXd eval_pointwise(const PointFunction& fn, const Eigen::MatrixXd& pts) {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(pts.cols());
  if (!fn) return out;
  for (Index j = 0; j < pts.cols(); ++j) {
    out(j) = fn(std::span<const double>(pts.col(j).data(), static_cast<std::size_t>(pts.rows())));
  }
  return out;
}

Eigen::RowVectorXd boundary_weights(const SampleBatch& b, BoundaryWeighting w) {
  const auto m = static_cast<Index>(b.size());
  Eigen::RowVectorXd out(m);
  if (w == BoundaryWeighting::Plain || b.face_measure.empty()) {
    out.setConstant(1.0 / static_cast<double>(m));
    return out;
  }
  std::vector<double> per_face(b.face_measure.size(), 0.0);
  for (int f : b.region) per_face.at(static_cast<std::size_t>(f)) += 1.0;
  for (Index k = 0; k < m; ++k) {
    const auto f = static_cast<std::size_t>(b.region[static_cast<std::size_t>(k)]);
    out(k) = b.face_measure[f] / (b.boundary_measure * per_face[f]);
  }
  return out;
}

struct Evaluated {
  JetBatch interior;
  Eigen::RowVectorXd source;  // f or v at interior points
  Eigen::RowVectorXd boundary_u;
  Eigen::RowVectorXd boundary_g;
  Eigen::RowVectorXd boundary_w;
  LossReport report;
  // Rayleigh pieces needed for the gradient.
  double mean_u2 = 0.0;
  Index half = 0;             // split point of the penalty halves, 0 for the batch form
  double mismatch[2] = {};    // |Omega| C_k - 1 per half
};

bool needs_boundary(const LossKind& kind) {
  return !std::holds_alternative<NeumannReaction>(kind);
}

Evaluated evaluate_terms(const LossKind& kind, const JetModel& model,
                         const SampleBatch& interior, const SampleBatch& boundary,
                         const LossOptions& opt) {
  validate(kind);
  if (interior.empty()) throw std::invalid_argument("interior batch is empty");
  if (needs_boundary(kind) && boundary.empty()) {
    throw std::invalid_argument("boundary batch is empty");
  }
  Evaluated ev;
  const Index n = interior.points.cols();
  const auto d = static_cast<Index>(model.input_dim());
  ev.interior.u.resize(n);
  ev.interior.grad.resize(d, n);
  const auto chunks = make_chunks(n, opt.chunk_size);
  run_chunks(chunks, opt.threads, [&](std::size_t i) {
    const auto [b, c] = chunks[i];
    auto jb = model.jets(interior.points.middleCols(b, c));
    ev.interior.u.segment(b, c) = jb.u;
    ev.interior.grad.middleCols(b, c) = jb.grad;
  });

  const bool use_boundary = needs_boundary(kind);
  if (use_boundary) {
    const Index m = boundary.points.cols();
    ev.boundary_u.resize(m);
    const auto bchunks = make_chunks(m, opt.chunk_size);
    run_chunks(bchunks, opt.threads, [&](std::size_t i) {
      const auto [b, c] = bchunks[i];
      ev.boundary_u.segment(b, c) = model.values(boundary.points.middleCols(b, c));
    });
    ev.boundary_w = boundary_weights(boundary, opt.weighting);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::RowVectorXd grad2 = ev.interior.grad.colwise().squaredNorm();
  const auto& u = ev.interior.u;
  auto& r = ev.report;

  if (const auto* p = std::get_if<PoissonDirichlet>(&kind)) {
    ev.source = eval_pointwise(p->f, interior.points);
    ev.boundary_g = eval_pointwise(p->g, boundary.points);
    r.interior_term = (0.5 * grad2.array() - ev.source.array() * u.array()).sum() * inv_n;
    const Eigen::RowVectorXd diff = ev.boundary_u - ev.boundary_g;
    r.boundary_term = p->beta * (ev.boundary_w.array() * diff.array().square()).sum();
    r.total = r.interior_term + r.boundary_term;
  } else if (const auto* nr = std::get_if<NeumannReaction>(&kind)) {
    ev.source = eval_pointwise(nr->f, interior.points);
    r.interior_term = (0.5 * (grad2.array() + nr->reaction * u.array().square()) -
                       ev.source.array() * u.array())
                          .sum() *
                      inv_n;
    r.total = r.interior_term;
  } else {
    const auto& ray = std::get<Rayleigh>(kind);
    ev.source = eval_pointwise(ray.v, interior.points);
    const double a = grad2.sum() * inv_n;
    const double bterm = (ev.source.array() * u.array().square()).sum() * inv_n;
    const double c = u.squaredNorm() * inv_n;
    if (!(c > kRayleighDenominatorFloor)) {
      throw DegenerateDenominatorError("Rayleigh quotient denominator mean(u^2) = " +
                                       std::to_string(c) + " is degenerate");
    }
    ev.mean_u2 = c;
    r.rayleigh_quotient = (a + bterm) / c;
    r.interior_term = r.rayleigh_quotient;
    r.boundary_term = ray.beta * (ev.boundary_w.array() * ev.boundary_u.array().square()).sum();
    const double vol = interior.domain_measure;
    if (opt.norm_penalty == NormPenalty::SplitBatch) {
      if (n < 2) throw std::invalid_argument("split penalty needs at least 2 interior points");
      ev.half = n / 2;
      ev.mismatch[0] = vol * u.head(ev.half).squaredNorm() / static_cast<double>(ev.half) - 1.0;
      ev.mismatch[1] = vol * u.tail(n - ev.half).squaredNorm() / static_cast<double>(n - ev.half) - 1.0;
      r.norm_penalty = ray.gamma * ev.mismatch[0] * ev.mismatch[1];
    } else {
      r.norm_penalty = ray.gamma * (vol * c - 1.0) * (vol * c - 1.0);
    }
    r.total = r.rayleigh_quotient + r.boundary_term + r.norm_penalty;
  }
  return ev;
}

void accumulate_backprop(const TrialFunction& net, const ParamStore& params,
                         const Eigen::MatrixXd& points, const CotangentBatch& seeds,
                         const LossOptions& opt, std::vector<double>& grad) {
  const auto chunks = make_chunks(points.cols(), opt.chunk_size);
  if (chunks.size() <= 1) {
    net.backprop(params, points, seeds, grad);
    return;
  }
  std::vector<std::vector<double>> partial(chunks.size(),
                                           std::vector<double>(grad.size(), 0.0));
  const bool tangent = seeds.dgrad.cols() > 0;
  run_chunks(chunks, opt.threads, [&](std::size_t i) {
    const auto [b, c] = chunks[i];
    CotangentBatch s;
    s.du = seeds.du.segment(b, c);
    if (tangent) s.dgrad = seeds.dgrad.middleCols(b, c);
    net.backprop(params, points.middleCols(b, c), s, partial[i]);
  });
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += p[k];
  }
}

}  // namespace

void validate(const LossKind& kind) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PoissonDirichlet>) {
          if (k.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
        } else if constexpr (std::is_same_v<T, Rayleigh>) {
          if (k.beta < 0.0) throw std::invalid_argument("beta must be >= 0");
          if (k.gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
        }
      },
      kind);
}

LossReport eval_loss(const LossKind& kind, const JetModel& model,
                     const SampleBatch& interior, const SampleBatch& boundary,
                     const LossOptions& options) {
  return evaluate_terms(kind, model, interior, boundary, options).report;
}

std::pair<LossReport, std::vector<double>> eval_loss_and_grad(
    const LossKind& kind, const TrialFunction& net, const ParamStore& params,
    const SampleBatch& interior, const SampleBatch& boundary,
    const LossOptions& options) {
  const NetworkModel model(net, params);
  auto ev = evaluate_terms(kind, model, interior, boundary, options);
  std::vector<double> grad(net.param_count(), 0.0);

  const Index n = interior.points.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto& u = ev.interior.u;

  CotangentBatch seeds;
  if (const auto* p = std::get_if<PoissonDirichlet>(&kind)) {
    seeds.du = -ev.source * inv_n;
    seeds.dgrad = ev.interior.grad * inv_n;
    accumulate_backprop(net, params, interior.points, seeds, options, grad);

    CotangentBatch bseeds;
    bseeds.du = (2.0 * p->beta) *
                (ev.boundary_w.array() * (ev.boundary_u - ev.boundary_g).array()).matrix();
    accumulate_backprop(net, params, boundary.points, bseeds, options, grad);
  } else if (const auto* nr = std::get_if<NeumannReaction>(&kind)) {
    seeds.du = (nr->reaction * u - ev.source) * inv_n;
    seeds.dgrad = ev.interior.grad * inv_n;
    accumulate_backprop(net, params, interior.points, seeds, options, grad);
  } else {
    const auto& ray = std::get<Rayleigh>(kind);
    const double c = ev.mean_u2;
    const double q = ev.report.rayleigh_quotient;
    const double vol = interior.domain_measure;
    // d/dC of quotient and penalty, per unit change of mean(u^2)
    double dc = -q / c;
    if (ev.half == 0) dc += 2.0 * ray.gamma * vol * (vol * c - 1.0);
    seeds.du = ((2.0 / c) * ev.source.array() * u.array() + 2.0 * dc * u.array()).matrix() * inv_n;
    if (ev.half > 0) {
      // each half's mean is scaled by the other half's mismatch
      const Index n = u.size();
      const double s0 = 2.0 * ray.gamma * vol * ev.mismatch[1] / static_cast<double>(ev.half);
      const double s1 = 2.0 * ray.gamma * vol * ev.mismatch[0] / static_cast<double>(n - ev.half);
      seeds.du.head(ev.half) += s0 * u.head(ev.half);
      seeds.du.tail(n - ev.half) += s1 * u.tail(n - ev.half);
    }
    seeds.dgrad = ev.interior.grad * (2.0 * inv_n / c);
    accumulate_backprop(net, params, interior.points, seeds, options, grad);

    CotangentBatch bseeds;
    bseeds.du = (2.0 * ray.beta) * (ev.boundary_w.array() * ev.boundary_u.array()).matrix();
    accumulate_backprop(net, params, boundary.points, bseeds, options, grad);
  }
  return {ev.report, std::move(grad)};
}

double rayleigh_estimate(const JetModel& model, const Domain& domain,
                         const PointFunction& potential, std::size_t n, RngStream& rng) {
  if (n < 10000) throw std::invalid_argument("rayleigh_estimate needs n >= 10^4 points");
  constexpr std::size_t kBlock = 1 << 15;
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t done = 0; done < n; done += kBlock) {
    const auto batch = sample_interior(domain, std::min(kBlock, n - done), rng);
    const auto jb = model.jets(batch.points);
    const auto v = eval_pointwise(potential, batch.points);
    a += jb.grad.colwise().squaredNorm().sum();
    b += (v.array() * jb.u.array().square()).sum();
    c += jb.u.squaredNorm();
  }
  const double mean_c = c / static_cast<double>(n);
  if (!(mean_c > kRayleighDenominatorFloor)) {
    throw DegenerateDenominatorError("Rayleigh quotient denominator is degenerate");
  }
  return (a + b) / c;
}

}  // namespace deepritz

#include "deepritz/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "deepritz/optimizer.hpp"

namespace deepritz {

NonFiniteLossError::NonFiniteLossError(std::size_t step)
    : std::runtime_error("loss became non-finite at step " + std::to_string(step)),
      step_(step) {}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v, const std::string& key, std::size_t line) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || !std::isfinite(out)) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' expects a number, got '" + v + "'");
    }
  } else {
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw ConfigError("line " + std::to_string(line) + ": '" + key +
                        "' expects a non-negative integer, got '" + v + "'");
    }
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a boolean");
}

std::vector<std::size_t> parse_widths(const std::string& v, std::size_t line) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_number<std::size_t>(trim(item), "widths", line));
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string section;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("line " + std::to_string(line) + ": bad section header");
      section = trim(text.substr(1, text.size() - 2));
      if (section != "run" && section != "schedule" && section != "network" && section != "loss") {
        throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line) + ": key outside of a section");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    auto unknown = [&] {
      return ConfigError("line " + std::to_string(line) + ": unknown key '" + key +
                         "' in [" + section + "]");
    };
    if (section == "run") {
      if (key == "problem") cfg.problem_id = value;
      else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(value, key, line);
      else if (key == "log_every") cfg.log_every = parse_number<std::size_t>(value, key, line);
      else if (key == "output_dir") cfg.output_dir = value;
      else if (key == "warm_start") cfg.warm_start = std::filesystem::path(value);
      else if (key == "deterministic") cfg.deterministic = parse_bool(value, key, line);
      else if (key == "threads") cfg.threads = parse_number<std::size_t>(value, key, line);
      else if (key == "track_dw") cfg.track_dw = parse_bool(value, key, line);
      else if (key == "evaluate_curve") cfg.evaluate_curve = parse_bool(value, key, line);
      else if (key == "init") {
        if (value == "uniform") cfg.init = InitScheme::UniformScaled;
        else if (value == "zero") cfg.init = InitScheme::Zero;
        else throw ConfigError("line " + std::to_string(line) + ": init must be uniform or zero");
      } else throw unknown();
    } else if (section == "schedule") {
      if (key == "iters") cfg.iters = parse_number<std::size_t>(value, key, line);
      else if (key == "interior_batch") cfg.interior_batch = parse_number<std::size_t>(value, key, line);
      else if (key == "boundary_per_face") cfg.boundary_per_face = parse_number<std::size_t>(value, key, line);
      else if (key == "eta") cfg.eta = parse_number<double>(value, key, line);
      else if (key == "decay_every") cfg.decay_every = parse_number<std::size_t>(value, key, line);
      else if (key == "decay_rate") cfg.decay_rate = parse_number<double>(value, key, line);
      else if (key == "clip_norm") cfg.clip_norm = parse_number<double>(value, key, line);
      else if (key == "init_gain") cfg.init_gain = parse_number<double>(value, key, line);
      else throw unknown();
    } else if (section == "network") {
      if (key == "blocks") cfg.blocks = parse_number<std::size_t>(value, key, line);
      else if (key == "width") cfg.width = parse_number<std::size_t>(value, key, line);
      else if (key == "widths") cfg.widths = parse_widths(value, line);
      else throw unknown();
    } else {
      if (key == "beta") cfg.beta = parse_number<double>(value, key, line);
      else if (key == "gamma") cfg.gamma = parse_number<double>(value, key, line);
      else if (key == "boundary_weighting") {
        if (value == "plain") cfg.weighting = BoundaryWeighting::Plain;
        else if (value == "face_measure") cfg.weighting = BoundaryWeighting::FaceMeasure;
        else throw ConfigError("line " + std::to_string(line) + ": boundary_weighting must be plain or face_measure");
      } else if (key == "norm_penalty") {
        if (value == "split") cfg.norm_penalty = NormPenalty::SplitBatch;
        else if (value == "batch") cfg.norm_penalty = NormPenalty::Batch;
        else throw ConfigError("line " + std::to_string(line) + ": norm_penalty must be split or batch");
      } else throw unknown();
    }
  }
  if (cfg.log_every == 0) throw ConfigError("log_every must be >= 1");
  return cfg;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

ProblemSpec resolve_problem(const RunConfig& c) {
  ProblemSpec spec = find_problem(c.problem_id);
  auto& s = spec.schedule;
  if (c.iters) s.iters = *c.iters;
  if (c.interior_batch) s.interior_batch = *c.interior_batch;
  if (c.boundary_per_face) s.boundary_per_face = *c.boundary_per_face;
  if (c.eta) s.eta = *c.eta;
  if (c.decay_every) s.decay_every = *c.decay_every;
  if (c.decay_rate) s.decay_rate = *c.decay_rate;
  if (c.clip_norm) s.clip_norm = *c.clip_norm;
  if (c.init_gain) s.init_gain = *c.init_gain;
  if (c.seed) s.seed = *c.seed;
  if (s.interior_batch == 0) throw ConfigError("interior_batch must be >= 1");
  if (s.boundary_per_face == 0) throw ConfigError("boundary_per_face must be >= 1");

  if (auto* r = std::get_if<ResNetConfig>(&spec.net)) {
    if (c.widths) throw ConfigError("'widths' applies to densely connected networks only");
    if (c.blocks) r->blocks = *c.blocks;
    if (c.width) r->width = *c.width;
  } else {
    auto& d = std::get<DenseNetConfig>(spec.net);
    if (c.blocks || c.width) throw ConfigError("'blocks'/'width' apply to residual networks only");
    if (c.widths) d.widths = *c.widths;
  }
  validate(spec.net);

  if (auto* p = std::get_if<PoissonDirichlet>(&spec.loss)) {
    if (c.gamma) throw ConfigError("'gamma' applies to eigenvalue problems only");
    if (c.beta) p->beta = *c.beta;
  } else if (auto* r = std::get_if<Rayleigh>(&spec.loss)) {
    if (c.beta) r->beta = *c.beta;
    if (c.gamma) r->gamma = *c.gamma;
  } else if (c.beta || c.gamma) {
    throw ConfigError("the Neumann functional has no penalty parameters");
  }
  validate(spec.loss);
  return spec;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

double weight_change(const ParamStore& now, const std::vector<double>& before) {
  double total = 0.0;
  std::size_t offset = 0;
  for (const auto& e : now.layout().entries()) {
    if (e.shape.size() == 2) {
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = now.values()[offset + i] - before[offset + i];
        total += d * d;
      }
    }
    offset += e.size();
  }
  return total;
}

}  // namespace

std::string curve_csv(const std::vector<CurveRow>& rows, bool with_dw) {
  std::string out = kCurveHeader;
  if (with_dw) out += ",dw_norm";
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.step) + ',' + fmt(r.loss_total) + ',' + fmt(r.interior_term) + ',' +
           fmt(r.boundary_term) + ',' + fmt(r.rel_l2) + ',' + fmt(r.lambda_est);
    if (with_dw) out += ',' + fmt(r.dw_norm);
    out += '\n';
  }
  return out;
}

std::string report_text(const std::string& problem_id, const EvalReport& report,
                        const ProblemSpec& spec, std::size_t steps, std::size_t param_count) {
  std::ostringstream os;
  os << "problem: " << problem_id << '\n'
     << "steps: " << steps << '\n'
     << "params: " << param_count << '\n'
     << "rel_l2: " << fmt(report.rel_l2) << '\n'
     << "max_err: " << fmt(report.max_err) << '\n';
  if (report.lambda_est) {
    os << "lambda_est: " << fmt(*report.lambda_est) << '\n'
       << "lambda_exact: " << fmt(*spec.exact_eigenvalue) << '\n'
       << "lambda_rel_err: " << fmt(*report.lambda_rel_err) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Rayleigh losses: scale the output layer so that |Omega| mean u^2 = 1 on a
// fixed sample.  A small initial amplitude otherwise lets the scale-invariant
// quotient flatten u before the normalisation penalty can act.
void normalise_output(const ProblemSpec& spec, const TrialFunction& net, ParamStore& params,
                      const RngStream& root) {
  auto rng = root.split("output-scale");
  const auto sample = sample_interior(spec.domain, 4096, rng);
  const Eigen::RowVectorXd u = net.values(params, sample.points);
  const double c = spec.domain.interior_measure() * u.squaredNorm() / static_cast<double>(u.size());
  if (!(c > 0.0) || !std::isfinite(c)) return;
  const double s = 1.0 / std::sqrt(c);
  for (const char* name : {"output.a", "output.b"}) {
    for (double& v : params.tensor(name)) v *= s;
  }
}

}  // namespace

RunResult run(const RunConfig& config, std::ostream* progress) {
  if (config.log_every == 0) throw ConfigError("log_every must be >= 1");
  RunResult result{resolve_problem(config), {}, {}, {}, {}, {}};
  const auto& spec = result.spec;
  const auto& sched = spec.schedule;
  const TrialFunction net(spec.net);

  std::uint64_t start_step = 0;
  if (config.warm_start) {
    auto loaded = read_checkpoint_file(*config.warm_start);
    if (!(loaded.store.layout() == net.layout())) {
      throw LayoutError("warm-start checkpoint layout does not match the network of '" +
                        spec.id + "'");
    }
    result.params = std::move(loaded.store);
    // A transferred checkpoint restarts the step count on the new problem.
    if (loaded.meta.problem_id == spec.id) start_step = loaded.meta.step;
  } else {
    result.params = init_params(net.layout(), config.init, sched.seed, sched.init_gain);
    if (spec.spectral()) normalise_output(spec, net, result.params, RngStream(sched.seed));
  }
  auto& params = result.params;

  LossOptions loss_opt;
  loss_opt.weighting = config.weighting;
  loss_opt.norm_penalty = config.norm_penalty;
  loss_opt.threads = std::max<std::size_t>(1, config.threads);
  if (!config.deterministic) {
    loss_opt.chunk_size = (sched.interior_batch + loss_opt.threads - 1) / loss_opt.threads;
  }

  AdamConfig adam_cfg;
  adam_cfg.eta = sched.eta;
  adam_cfg.clip_norm = sched.clip_norm;
  AdamState adam(params.size(), adam_cfg);

  std::optional<Evaluator> evaluator;
  if (config.evaluate_curve) evaluator.emplace(spec);

  const bool needs_boundary = !std::holds_alternative<NeumannReaction>(spec.loss);
  const RngStream root(sched.seed);
  std::vector<double> dw_snapshot;
  if (config.track_dw) dw_snapshot.assign(params.values().begin(), params.values().end());

  for (std::size_t k = 0; k < sched.iters; ++k) {
    auto irng = root.split("interior", k);
    const auto interior = sample_interior(spec.domain, sched.interior_batch, irng);
    SampleBatch boundary;
    if (needs_boundary) {
      auto brng = root.split("boundary", k);
      boundary = sample_boundary(spec.domain, sched.boundary_per_face, brng);
    }
    auto [loss, grad] = eval_loss_and_grad(spec.loss, net, params, interior, boundary, loss_opt);
    const std::size_t step = k + 1;
    if (!std::isfinite(loss.total)) throw NonFiniteLossError(step);

    if (sched.decay_every > 0) {
      adam.set_learning_rate(sched.eta *
                             std::pow(sched.decay_rate, static_cast<double>(k / sched.decay_every)));
    }
    adam.update(params, grad);
    result.last_loss = loss;

    std::optional<double> dw;
    if (config.track_dw && step % 100 == 0) {
      dw = weight_change(params, dw_snapshot);
      dw_snapshot.assign(params.values().begin(), params.values().end());
    }
    if (step % config.log_every == 0) {
      CurveRow row{step, loss.total, loss.interior_term, loss.boundary_term, {}, {}, dw};
      if (evaluator) {
        const auto rep = (*evaluator)(NetworkModel(net, params));
        row.rel_l2 = rep.rel_l2;
        row.lambda_est = rep.lambda_est;
      }
      if (progress) {
        *progress << spec.id << " step " << step << " loss " << fmt(loss.total)
                  << " rel_l2 " << fmt(row.rel_l2);
        if (row.lambda_est) *progress << " lambda " << fmt(*row.lambda_est);
        *progress << std::endl;
      }
      result.curve.push_back(row);
    }
  }

  result.report = evaluator ? (*evaluator)(NetworkModel(net, params))
                            : evaluate(spec, net, params);
  result.meta = CheckpointMeta{sched.seed, start_step + sched.iters, spec.id};

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    {
      std::ofstream out(config.output_dir / "curve.csv", std::ios::binary);
      out << curve_csv(result.curve, config.track_dw);
    }
    write_checkpoint_file(config.output_dir / "final.drz", params, result.meta);
    std::ofstream out(config.output_dir / "report.txt", std::ios::binary);
    out << report_text(spec.id, result.report, spec, static_cast<std::size_t>(result.meta.step),
                       params.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

std::string tensor_of(const TensorLayout& layout, std::size_t index) {
  std::size_t offset = 0;
  for (const auto& e : layout.entries()) {
    if (index < offset + e.size()) return e.name + "[" + std::to_string(index - offset) + "]";
    offset += e.size();
  }
  return "?";
}

}  // namespace

GradCheckReport grad_check(const RunConfig& config) {
  RunConfig small = config;
  const auto& base = find_problem(config.problem_id);
  const auto d = base.domain.dim();
  if (std::holds_alternative<ResNetConfig>(base.net)) {
    if (!small.blocks) small.blocks = 1;
    if (!small.width) small.width = d > 25 ? 1 : 4;
  } else if (!small.widths) {
    small.widths = std::vector<std::size_t>{4, 4};
  }
  const auto spec = resolve_problem(small);
  const TrialFunction net(spec.net);
  if (net.param_count() > kGradCheckMaxParams) {
    throw ConfigError("grad-check needs a network with at most " +
                      std::to_string(kGradCheckMaxParams) + " parameters, got " +
                      std::to_string(net.param_count()));
  }
  auto params = init_params(net.layout(), config.init, spec.schedule.seed, spec.schedule.init_gain);

  const RngStream root(spec.schedule.seed);
  auto irng = root.split("gradcheck-interior");
  auto brng = root.split("gradcheck-boundary");
  const auto interior = sample_interior(spec.domain, 16, irng);
  const auto boundary = sample_boundary(spec.domain, 2, brng);
  LossOptions opt;
  opt.weighting = config.weighting;
  opt.norm_penalty = config.norm_penalty;

  const auto analytic = eval_loss_and_grad(spec.loss, net, params, interior, boundary, opt).second;
  auto loss_at = [&](const ParamStore& p) {
    return eval_loss(spec.loss, NetworkModel(net, p), interior, boundary, opt).total;
  };

  GradCheckReport rep;
  rep.param_count = params.size();
  rep.loss = loss_at(params);
  // Roundoff in a loss of size |L| limits how small a derivative central
  // differences can resolve.
  rep.fd_floor = kGradCheckFdFloor * std::max(1.0, std::abs(rep.loss));
  for (std::size_t i = 0; i < params.size(); ++i) {
    rep.max_abs_grad = std::max(rep.max_abs_grad, std::abs(analytic[i]));
    const double theta = params.values()[i];
    auto at = [&](double t) {
      auto q = params;
      q.mutable_values()[i] = t;
      return loss_at(q);
    };
    auto central = [&](double h) { return (at(theta + h) - at(theta - h)) / (2.0 * h); };
    const double scale = 1.0 + std::abs(theta);

    double best = std::numeric_limits<double>::infinity();
    bool checked = false;
    auto consider = [&](double fd) {
      if (std::abs(fd) <= rep.fd_floor) return;
      checked = true;
      best = std::min(best, std::abs(analytic[i] - fd) / std::abs(fd));
    };
    // A kink of an activation derivative inside [theta-h, theta+h] spoils the
    // quotient, so small steps are retried; the extrapolated wide step handles
    // large losses where a small step drowns in roundoff.
    for (double shrink : {1.0, 1.0 / 16.0, 1.0 / 256.0}) {
      consider(central(1e-5 * scale * shrink));
      if (best <= kGradCheckTolerance) break;
    }
    if (best > kGradCheckTolerance) {
      const double h = 1e-3 * scale;
      consider((4.0 * central(0.5 * h) - central(h)) / 3.0);
    }
    if (!checked) continue;
    ++rep.checked;
    if (best > rep.max_rel_err || rep.worst_tensor.empty()) {
      rep.max_rel_err = std::max(rep.max_rel_err, best);
      rep.worst_index = i;
      rep.worst_tensor = tensor_of(net.layout(), i);
    }
  }
  return rep;
}

}  // namespace deepritz

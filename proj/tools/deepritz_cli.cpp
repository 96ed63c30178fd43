#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "deepritz/checkpoint.hpp"
#include "deepritz/fdm.hpp"
#include "deepritz/problems.hpp"
#include "deepritz/runner.hpp"

using namespace deepritz;

namespace {

struct Flags {
  std::string config_file;
  std::string problem;
  std::uint64_t seed = 0;
  std::size_t iters = 0;
  std::size_t interior_batch = 0;
  std::size_t boundary_per_face = 0;
  double eta = 0;
  std::size_t decay_every = 0;
  double decay_rate = 0;
  double clip_norm = 0;
  double init_gain = 0;
  std::size_t blocks = 0;
  std::size_t width = 0;
  std::vector<std::size_t> widths;
  double beta = 0;
  double gamma = 0;
  std::size_t log_every = 0;
  std::string out;
  std::string warm_start;
  std::size_t threads = 0;
  bool nondeterministic = false;
  bool track_dw = false;
  bool no_curve_eval = false;
  std::string weighting;
  std::string norm_penalty;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config_file, "INI config file; flags override it");
  app->add_option("problem", f.problem, "problem id (see list-problems)");
  app->add_option("--seed", f.seed);
  app->add_option("--iters", f.iters);
  app->add_option("--batch", f.interior_batch, "interior points per step");
  app->add_option("--boundary-per-face", f.boundary_per_face);
  app->add_option("--eta", f.eta, "Adam learning rate");
  app->add_option("--decay-every", f.decay_every);
  app->add_option("--decay-rate", f.decay_rate);
  app->add_option("--clip-norm", f.clip_norm);
  app->add_option("--init-gain", f.init_gain, "scale of the initial weight bound");
  app->add_option("--blocks", f.blocks);
  app->add_option("--width", f.width);
  app->add_option("--widths", f.widths, "dense layer widths")->delimiter(',');
  app->add_option("--beta", f.beta);
  app->add_option("--gamma", f.gamma);
  app->add_option("--log-every", f.log_every);
  app->add_option("--out", f.out, "output directory");
  app->add_option("--warm-start", f.warm_start, "checkpoint to start from");
  app->add_option("--threads", f.threads);
  app->add_flag("--nondeterministic", f.nondeterministic, "allow any reduction order");
  app->add_flag("--track-dw", f.track_dw, "add a dw_norm column every 100 steps");
  app->add_flag("--no-curve-eval", f.no_curve_eval, "skip rel_l2 on logged rows");
  app->add_option("--boundary-weighting", f.weighting)
      ->check(CLI::IsMember({"plain", "face_measure"}));
  app->add_option("--norm-penalty", f.norm_penalty, "Rayleigh penalty estimator (default batch)")
      ->check(CLI::IsMember({"split", "batch"}));
}

RunConfig to_config(const CLI::App* app, const Flags& f) {
  RunConfig c = f.config_file.empty() ? RunConfig{} : load_config_file(f.config_file);
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (!f.problem.empty()) c.problem_id = f.problem;
  if (c.problem_id.empty()) throw ConfigError("no problem id given");
  if (given("--seed")) c.seed = f.seed;
  if (given("--iters")) c.iters = f.iters;
  if (given("--batch")) c.interior_batch = f.interior_batch;
  if (given("--boundary-per-face")) c.boundary_per_face = f.boundary_per_face;
  if (given("--eta")) c.eta = f.eta;
  if (given("--decay-every")) c.decay_every = f.decay_every;
  if (given("--decay-rate")) c.decay_rate = f.decay_rate;
  if (given("--clip-norm")) c.clip_norm = f.clip_norm;
  if (given("--init-gain")) c.init_gain = f.init_gain;
  if (given("--blocks")) c.blocks = f.blocks;
  if (given("--width")) c.width = f.width;
  if (given("--widths")) c.widths = f.widths;
  if (given("--beta")) c.beta = f.beta;
  if (given("--gamma")) c.gamma = f.gamma;
  if (given("--log-every")) c.log_every = f.log_every;
  if (given("--out")) c.output_dir = f.out;
  if (given("--warm-start")) c.warm_start = std::filesystem::path(f.warm_start);
  if (given("--threads")) c.threads = f.threads;
  if (f.nondeterministic) c.deterministic = false;
  if (f.track_dw) c.track_dw = true;
  if (f.no_curve_eval) c.evaluate_curve = false;
  if (f.weighting == "face_measure") c.weighting = BoundaryWeighting::FaceMeasure;
  if (f.weighting == "plain") c.weighting = BoundaryWeighting::Plain;
  if (f.norm_penalty == "batch") c.norm_penalty = NormPenalty::Batch;
  if (f.norm_penalty == "split") c.norm_penalty = NormPenalty::SplitBatch;
  if (c.log_every == 0) throw ConfigError("--log-every must be >= 1");
  return c;
}

std::string describe(const NetConfig& net) {
  if (const auto* r = std::get_if<ResNetConfig>(&net)) {
    return "resnet blocks=" + std::to_string(r->blocks) + " width=" + std::to_string(r->width);
  }
  const auto& d = std::get<DenseNetConfig>(net);
  std::string s = "densenet widths=";
  for (std::size_t i = 0; i < d.widths.size(); ++i) s += (i ? "," : "") + std::to_string(d.widths[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Ritz solver: train neural trial functions on variational losses"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run_cmd = app.add_subcommand("run", "train a catalog problem");
  add_run_flags(run_cmd, run_flags);
  bool quiet = false;
  run_cmd->add_flag("-q,--quiet", quiet, "no progress lines");

  Flags eval_flags;
  std::string eval_ckpt;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against a problem");
  eval_cmd->add_option("checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--problem", eval_flags.problem, "defaults to the checkpoint's problem");
  eval_cmd->add_option("--blocks", eval_flags.blocks);
  eval_cmd->add_option("--width", eval_flags.width);
  eval_cmd->add_option("--widths", eval_flags.widths)->delimiter(',');

  std::size_t fdm_n = 25;
  std::string fdm_problem = "slit_poisson";
  std::string fdm_out;
  std::string fdm_solver = "cg";
  auto* fdm_cmd = app.add_subcommand("fdm", "five-point finite differences on the slit square");
  fdm_cmd->add_option("-n,--grid", fdm_n, "nodes per side (odd)");
  fdm_cmd->add_option("--problem", fdm_problem)
      ->check(CLI::IsMember({"slit_poisson", "slit_harmonic"}));
  fdm_cmd->add_option("--solver", fdm_solver)->check(CLI::IsMember({"cg", "direct"}));
  fdm_cmd->add_option("--out", fdm_out, "CSV file for the node values");

  Flags gc_flags;
  auto* gc_cmd = app.add_subcommand("grad-check", "compare gradients with finite differences");
  add_run_flags(gc_cmd, gc_flags);

  auto* list_cmd = app.add_subcommand("list-problems", "print the problem catalog");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto cfg = to_config(run_cmd, run_flags);
      const auto res = run(cfg, quiet ? nullptr : &std::cerr);
      std::cout << report_text(res.spec.id, res.report, res.spec,
                               static_cast<std::size_t>(res.meta.step), res.params.size());
    } else if (eval_cmd->parsed()) {
      const auto loaded = read_checkpoint_file(eval_ckpt);
      RunConfig cfg;
      cfg.problem_id = eval_flags.problem.empty() ? loaded.meta.problem_id : eval_flags.problem;
      if (eval_cmd->count("--blocks")) cfg.blocks = eval_flags.blocks;
      if (eval_cmd->count("--width")) cfg.width = eval_flags.width;
      if (eval_cmd->count("--widths")) cfg.widths = eval_flags.widths;
      const auto spec = resolve_problem(cfg);
      const TrialFunction net(spec.net);
      if (!(loaded.store.layout() == net.layout())) {
        throw LayoutError("checkpoint layout does not match the network of '" + spec.id + "'");
      }
      const auto rep = evaluate(spec, net, loaded.store);
      std::cout << report_text(spec.id, rep, spec, static_cast<std::size_t>(loaded.meta.step),
                               loaded.store.size());
    } else if (fdm_cmd->parsed()) {
      const auto problem = fdm_problem == "slit_poisson" ? FdmProblem::SlitPoissonF1
                                                         : FdmProblem::SlitHarmonicExactBC;
      const auto solver = fdm_solver == "cg" ? FdmSolver::ConjugateGradient : FdmSolver::Direct;
      const auto sol = fdm_solve(fdm_n, problem, solver);
      std::cout << "grid: " << fdm_n << "\nresidual: " << sol.residual
                << "\niterations: " << sol.iterations << '\n';
      if (problem == FdmProblem::SlitHarmonicExactBC) {
        const auto rep = fdm_error(sol, [](std::span<const double> x) {
          return slit_corner_solution(x[0], x[1]);
        });
        std::cout << "rel_l2: " << rep.rel_l2 << "\nmax_err: " << rep.max_err << '\n';
      }
      if (!fdm_out.empty()) {
        std::ofstream out(fdm_out);
        if (!out) throw std::runtime_error("cannot write " + fdm_out);
        write_fdm_csv(out, sol);
      }
    } else if (gc_cmd->parsed()) {
      const auto cfg = to_config(gc_cmd, gc_flags);
      const auto rep = grad_check(cfg);
      std::cout << "params: " << rep.param_count << "\nchecked: " << rep.checked
                << "\nmax_rel_err: " << rep.max_rel_err << "\nworst: " << rep.worst_tensor
                << "\nmax_abs_grad: " << rep.max_abs_grad << "\nloss: " << rep.loss
                << "\nfd_floor: " << rep.fd_floor << '\n';
      return rep.max_rel_err <= kGradCheckTolerance ? 0 : 3;
    } else if (list_cmd->parsed()) {
      for (const auto& p : catalog()) {
        std::printf("%-16s d=%-3zu %-28s %s\n", p.id.c_str(), p.domain.dim(),
                    describe(p.net).c_str(), p.summary.c_str());
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

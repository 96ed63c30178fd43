#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepritz/checkpoint.hpp"
#include "deepritz/eval_report.hpp"
#include "deepritz/functionals.hpp"
#include "deepritz/params.hpp"
#include "deepritz/problems.hpp"

namespace deepritz {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(std::size_t step);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct RunConfig {
  std::string problem_id;

  // Overrides of catalog fields; unset means "use the catalog value".
  std::optional<std::size_t> iters;
  std::optional<std::size_t> interior_batch;
  std::optional<std::size_t> boundary_per_face;
  std::optional<double> eta;
  std::optional<std::size_t> decay_every;
  std::optional<double> decay_rate;
  std::optional<double> clip_norm;
  std::optional<double> init_gain;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> blocks;
  std::optional<std::size_t> width;
  std::optional<std::vector<std::size_t>> widths;
  std::optional<double> beta;
  std::optional<double> gamma;

  std::size_t log_every = 100;
  std::filesystem::path output_dir;  // empty: no files written
  std::optional<std::filesystem::path> warm_start;
  bool deterministic = true;
  std::size_t threads = 1;
  bool track_dw = false;
  bool evaluate_curve = true;
  InitScheme init = InitScheme::UniformScaled;
  BoundaryWeighting weighting = BoundaryWeighting::Plain;
  NormPenalty norm_penalty = NormPenalty::Batch;
};

/// INI-style text: "[section]" headers and "key = value" lines, '#' comments.
/// Sections: run, schedule, network, loss.  Unknown sections or keys throw.
RunConfig parse_config(std::istream& in);
RunConfig load_config_file(const std::filesystem::path& path);

/// Catalog entry with every override in config applied.
ProblemSpec resolve_problem(const RunConfig& config);

struct CurveRow {
  std::size_t step = 0;
  double loss_total = 0.0;
  double interior_term = 0.0;
  double boundary_term = 0.0;
  std::optional<double> rel_l2;
  std::optional<double> lambda_est;
  std::optional<double> dw_norm;  // squared Frobenius norm of the 100-step weight change
};

struct RunResult {
  ProblemSpec spec;
  ParamStore params;
  CheckpointMeta meta;
  std::vector<CurveRow> curve;
  EvalReport report;
  LossReport last_loss;
};

/// Trains config.problem_id.  Writes curve.csv, final.drz and report.txt into
/// config.output_dir when it is non-empty.  progress, when given, receives
/// one line per logged row.
RunResult run(const RunConfig& config, std::ostream* progress = nullptr);

inline constexpr const char* kCurveHeader =
    "step,loss_total,interior_term,boundary_term,rel_l2,lambda_est";

std::string curve_csv(const std::vector<CurveRow>& rows, bool with_dw);
std::string report_text(const std::string& problem_id, const EvalReport& report,
                        const ProblemSpec& spec, std::size_t steps, std::size_t param_count);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::string worst_tensor;
  double max_abs_grad = 0.0;
  double loss = 0.0;
  double fd_floor = 0.0;  // components with |FD| at or below this are skipped
  std::size_t param_count = 0;
  std::size_t checked = 0;
};

inline constexpr std::size_t kGradCheckMaxParams = 200;
inline constexpr double kGradCheckTolerance = 1e-5;
/// Multiplied by max(1, |loss|).
inline constexpr double kGradCheckFdFloor = 1e-8;

/// Compares analytic gradients to central differences on a fixed small batch.
/// Without explicit network overrides a small network is substituted.
GradCheckReport grad_check(const RunConfig& config);

}  // namespace deepritz

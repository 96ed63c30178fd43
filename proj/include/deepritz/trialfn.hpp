#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "deepritz/activation.hpp"
#include "deepritz/params.hpp"

namespace deepritz {

/// Stack of residual blocks t = phi(W2 phi(W1 s + b1) + b2) + s of width m,
/// followed by u = a . z + b.  Inputs with d_in < m are zero-padded, inputs
/// with d_in > m go through a learned m x d_in linear map first.
struct ResNetConfig {
  std::size_t d_in = 2;
  std::size_t width = 10;
  std::size_t blocks = 4;
  Activation activation = Activation::ReLU3;
};

/// Densely connected stack: y_i = phi(W_i x_i + b_i), x_{i+1} = [x_i; y_i],
/// u = a . x_L + b over the full concatenated state.
struct DenseNetConfig {
  std::size_t d_in = 1;
  std::vector<std::size_t> widths{16, 16, 16, 16};
  Activation activation = Activation::ReLU2;
};

using NetConfig = std::variant<ResNetConfig, DenseNetConfig>;

enum class InputMap { Identity, ZeroPad, Learned };

InputMap input_map(const ResNetConfig& config);
TensorLayout make_layout(const NetConfig& config);
std::size_t count_params(const NetConfig& config);
std::size_t input_dim(const NetConfig& config);
/// Throws std::invalid_argument on zero dimensions or widths.
void validate(const NetConfig& config);

class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Jet {
  double u = 0.0;
  std::vector<double> grad_x;
};

struct Cotangent {
  double du = 0.0;
  std::vector<double> dgrad;
};

/// Points are stored one per column (d_in x N).
using PointMatrix = Eigen::MatrixXd;

struct JetBatch {
  Eigen::RowVectorXd u;
  Eigen::MatrixXd grad;  // d_in x N
};

/// Per-point adjoint seeds.  An empty dgrad (zero columns) means dgrad = 0,
/// which skips the tangent channel entirely.
struct CotangentBatch {
  Eigen::RowVectorXd du;
  Eigen::MatrixXd dgrad;
};

class TrialFunction {
 public:
  explicit TrialFunction(NetConfig config);

  const NetConfig& config() const { return config_; }
  const TensorLayout& layout() const { return layout_; }
  std::size_t input_dim() const { return d_in_; }
  std::size_t param_count() const { return layout_.total_size(); }

  Eigen::RowVectorXd values(const ParamStore& params, const PointMatrix& points) const;

  /// u and grad_x u at every point (forward pass + one adjoint sweep).
  JetBatch jets(const ParamStore& params, const PointMatrix& points) const;

  /// u and the directional derivative grad_x u . v_j for per-point v_j.
  std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> directional(
      const ParamStore& params, const PointMatrix& points,
      const Eigen::MatrixXd& directions) const;

  /// Adds dG/dtheta to grad, G = sum_j du_j u(x_j) + dgrad_j . grad_x u(x_j).
  void backprop(const ParamStore& params, const PointMatrix& points,
                const CotangentBatch& seeds, std::span<double> grad) const;

 private:
  void check(const ParamStore& params, const PointMatrix& points) const;

  NetConfig config_;
  TensorLayout layout_;
  std::size_t d_in_;
};

Jet resnet_eval(const ResNetConfig& config, const ParamStore& params,
                std::span<const double> x);
Jet densenet_eval(const DenseNetConfig& config, const ParamStore& params,
                  std::span<const double> x);

std::vector<double> backprop(const NetConfig& config, const ParamStore& params,
                             const std::vector<std::vector<double>>& points,
                             const std::vector<Cotangent>& cotangents);

/// Anything that can produce jets at a batch of points: a network bound to
/// its parameters, or an analytic function in tests and reference checks.
class JetModel {
 public:
  virtual ~JetModel() = default;
  virtual std::size_t input_dim() const = 0;
  virtual Eigen::RowVectorXd values(const PointMatrix& points) const = 0;
  virtual JetBatch jets(const PointMatrix& points) const = 0;
};

class NetworkModel final : public JetModel {
 public:
  NetworkModel(const TrialFunction& net, const ParamStore& params)
      : net_(net), params_(params) {}

  std::size_t input_dim() const override { return net_.input_dim(); }
  Eigen::RowVectorXd values(const PointMatrix& points) const override {
    return net_.values(params_, points);
  }
  JetBatch jets(const PointMatrix& points) const override {
    return net_.jets(params_, points);
  }

 private:
  const TrialFunction& net_;
  const ParamStore& params_;
};

}  // namespace deepritz

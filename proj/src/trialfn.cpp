#include "deepritz/trialfn.hpp"

#include <cmath>
#include <string>

namespace deepritz {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMat = Eigen::Map<const RowMat>;
using MutMat = Eigen::Map<RowMat>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using MutVec = Eigen::Map<Eigen::VectorXd>;
using Eigen::Index;
using Eigen::MatrixXd;

std::string block_name(std::size_t i, const char* leaf) {
  return "block" + std::to_string(i) + "." + leaf;
}

std::string layer_name(std::size_t i, const char* leaf) {
  return "layer" + std::to_string(i) + "." + leaf;
}

ConstMat weight(const ParamStore& p, const std::string& name) {
  const auto& e = p.layout().entry(name);
  return ConstMat(p.values().data() + p.layout().offset(name),
                  static_cast<Index>(e.shape[0]), static_cast<Index>(e.shape[1]));
}

ConstVec bias(const ParamStore& p, const std::string& name) {
  const auto& e = p.layout().entry(name);
  return ConstVec(p.values().data() + p.layout().offset(name),
                  static_cast<Index>(e.shape[0]));
}

MutMat weight_grad(const TensorLayout& layout, std::span<double> g,
                   const std::string& name) {
  const auto& e = layout.entry(name);
  return MutMat(g.data() + layout.offset(name), static_cast<Index>(e.shape[0]),
                static_cast<Index>(e.shape[1]));
}

MutVec bias_grad(const TensorLayout& layout, std::span<double> g,
                 const std::string& name) {
  const auto& e = layout.entry(name);
  return MutVec(g.data() + layout.offset(name), static_cast<Index>(e.shape[0]));
}

// ---------------------------------------------------------------------------
// Shared pieces of the tangent-carrying reverse sweep.  Matrices with the
// tangent channel hold [values | tangents] side by side (2N columns).

// Forward activation over [z | tz]: out = [phi(z) | phi'(z) * tz].
void activate_pair(Activation act, const MatrixXd& zz, Index n, bool tangent,
                   MatrixXd& out) {
  out.resize(zz.rows(), zz.cols());
  detail::apply_value(act, zz.leftCols(n), out.leftCols(n));
  if (tangent) {
    MatrixXd d1(zz.rows(), n);
    detail::apply_d1(act, zz.leftCols(n), d1);
    out.rightCols(n) = d1.cwiseProduct(zz.rightCols(n));
  }
}

// Reverse through out = [phi(z) | phi'(z) * tz]: given [ybar | tybar],
// returns [zbar | tzbar].
MatrixXd activate_pair_adjoint(Activation act, const MatrixXd& zz,
                               const MatrixXd& ybar, Index n, bool tangent) {
  MatrixXd zbar(zz.rows(), zz.cols());
  MatrixXd d1(zz.rows(), n);
  detail::apply_d1(act, zz.leftCols(n), d1);
  zbar.leftCols(n) = d1.cwiseProduct(ybar.leftCols(n));
  if (tangent) {
    MatrixXd d2(zz.rows(), n);
    detail::apply_d2(act, zz.leftCols(n), d2);
    zbar.leftCols(n).array() +=
        d2.array() * zz.rightCols(n).array() * ybar.rightCols(n).array();
    zbar.rightCols(n) = d1.cwiseProduct(ybar.rightCols(n));
  }
  return zbar;
}

// ---------------------------------------------------------------------------
// ResNet

MatrixXd resnet_input(const ResNetConfig& c, const ParamStore& p,
                      const MatrixXd& x) {
  switch (input_map(c)) {
    case InputMap::Identity:
      return x;
    case InputMap::ZeroPad: {
      MatrixXd s = MatrixXd::Zero(static_cast<Index>(c.width), x.cols());
      s.topRows(x.rows()) = x;
      return s;
    }
    case InputMap::Learned:
      return weight(p, "input.W") * x;
  }
  return x;
}

struct ResNetValues {
  MatrixXd state;
  std::vector<MatrixXd> z1, z2;
};

ResNetValues resnet_forward(const ResNetConfig& c, const ParamStore& p,
                            const MatrixXd& x, bool keep) {
  ResNetValues out;
  out.state = resnet_input(c, p, x);
  MatrixXd z1, a1, z2, a2;
  for (std::size_t i = 0; i < c.blocks; ++i) {
    z1.noalias() = weight(p, block_name(i, "W1")) * out.state;
    z1.colwise() += bias(p, block_name(i, "b1"));
    a1.resize(z1.rows(), z1.cols());
    detail::apply_value(c.activation, z1, a1);
    z2.noalias() = weight(p, block_name(i, "W2")) * a1;
    z2.colwise() += bias(p, block_name(i, "b2"));
    a2.resize(z2.rows(), z2.cols());
    detail::apply_value(c.activation, z2, a2);
    out.state += a2;
    if (keep) {
      out.z1.push_back(z1);
      out.z2.push_back(z2);
    }
  }
  return out;
}

Eigen::RowVectorXd resnet_output(const ParamStore& p, const MatrixXd& state) {
  Eigen::RowVectorXd u = weight(p, "output.a") * state;
  u.array() += p.tensor("output.b")[0];
  return u;
}

JetBatch resnet_jets(const ResNetConfig& c, const ParamStore& p, const MatrixXd& x) {
  auto fwd = resnet_forward(c, p, x, true);
  JetBatch jb;
  jb.u = resnet_output(p, fwd.state);

  const Index n = x.cols();
  const auto a = weight(p, "output.a");
  MatrixXd lam = a.transpose().replicate(1, n);
  MatrixXd d1(lam.rows(), n), m;
  for (std::size_t k = c.blocks; k-- > 0;) {
    detail::apply_d1(c.activation, fwd.z2[k], d1);
    m.noalias() = weight(p, block_name(k, "W2")).transpose() * d1.cwiseProduct(lam);
    detail::apply_d1(c.activation, fwd.z1[k], d1);
    lam.noalias() += weight(p, block_name(k, "W1")).transpose() * d1.cwiseProduct(m);
  }
  switch (input_map(c)) {
    case InputMap::Identity:
      jb.grad = std::move(lam);
      break;
    case InputMap::ZeroPad:
      jb.grad = lam.topRows(x.rows());
      break;
    case InputMap::Learned:
      jb.grad = weight(p, "input.W").transpose() * lam;
      break;
  }
  return jb;
}

struct ResNetBlockRecord {
  MatrixXd s_in, z1, a1, z2;
};

struct ResNetTape {
  MatrixXd xx;     // [x | v]
  MatrixXd state;  // final [s | t]
  std::vector<ResNetBlockRecord> blocks;
};

ResNetTape resnet_tangent_forward(const ResNetConfig& c, const ParamStore& p,
                                  const MatrixXd& x, const MatrixXd* v) {
  const Index n = x.cols();
  const bool tangent = v != nullptr;
  ResNetTape tape;
  tape.xx.resize(x.rows(), tangent ? 2 * n : n);
  tape.xx.leftCols(n) = x;
  if (tangent) tape.xx.rightCols(n) = *v;
  tape.state = resnet_input(c, p, tape.xx);
  MatrixXd a2;
  tape.blocks.resize(c.blocks);
  for (std::size_t i = 0; i < c.blocks; ++i) {
    auto& rec = tape.blocks[i];
    rec.s_in = tape.state;
    rec.z1.noalias() = weight(p, block_name(i, "W1")) * rec.s_in;
    rec.z1.leftCols(n).colwise() += bias(p, block_name(i, "b1"));
    activate_pair(c.activation, rec.z1, n, tangent, rec.a1);
    rec.z2.noalias() = weight(p, block_name(i, "W2")) * rec.a1;
    rec.z2.leftCols(n).colwise() += bias(p, block_name(i, "b2"));
    activate_pair(c.activation, rec.z2, n, tangent, a2);
    tape.state += a2;
  }
  return tape;
}

void resnet_backprop(const ResNetConfig& c, const ParamStore& p,
                     const TensorLayout& layout, const MatrixXd& x,
                     const CotangentBatch& seeds, std::span<double> g) {
  const Index n = x.cols();
  const bool tangent = seeds.dgrad.cols() > 0;
  const auto tape = resnet_tangent_forward(c, p, x, tangent ? &seeds.dgrad : nullptr);

  const auto a = weight(p, "output.a");
  // G = sum_j du_j (a.s_j + b) + a.t_j
  auto abar = weight_grad(layout, g, "output.a");
  abar.transpose() += tape.state.leftCols(n) * seeds.du.transpose();
  if (tangent) abar.transpose() += tape.state.rightCols(n).rowwise().sum();
  bias_grad(layout, g, "output.b")[0] += seeds.du.sum();

  MatrixXd sbar(a.cols(), tape.state.cols());
  sbar.leftCols(n) = a.transpose() * seeds.du;
  if (tangent) sbar.rightCols(n) = a.transpose().replicate(1, n);

  MatrixXd a1bar;
  for (std::size_t k = c.blocks; k-- > 0;) {
    const auto& rec = tape.blocks[k];
    const MatrixXd z2bar = activate_pair_adjoint(c.activation, rec.z2, sbar, n, tangent);
    weight_grad(layout, g, block_name(k, "W2")).noalias() += z2bar * rec.a1.transpose();
    bias_grad(layout, g, block_name(k, "b2")) += z2bar.leftCols(n).rowwise().sum();
    a1bar.noalias() = weight(p, block_name(k, "W2")).transpose() * z2bar;

    const MatrixXd z1bar = activate_pair_adjoint(c.activation, rec.z1, a1bar, n, tangent);
    weight_grad(layout, g, block_name(k, "W1")).noalias() += z1bar * rec.s_in.transpose();
    bias_grad(layout, g, block_name(k, "b1")) += z1bar.leftCols(n).rowwise().sum();
    sbar.noalias() += weight(p, block_name(k, "W1")).transpose() * z1bar;
  }
  if (input_map(c) == InputMap::Learned) {
    weight_grad(layout, g, "input.W").noalias() += sbar * tape.xx.transpose();
  }
}

// ---------------------------------------------------------------------------
// DenseNet

struct DenseShape {
  std::vector<Index> rows_in;  // input rows of each layer
  Index total = 0;
};

DenseShape dense_shape(const DenseNetConfig& c) {
  DenseShape s;
  Index r = static_cast<Index>(c.d_in);
  for (auto w : c.widths) {
    s.rows_in.push_back(r);
    r += static_cast<Index>(w);
  }
  s.total = r;
  return s;
}

struct DenseTape {
  MatrixXd xx;  // concatenated state, [x | t] when carrying a tangent
  std::vector<MatrixXd> zz;
};

DenseTape densenet_forward(const DenseNetConfig& c, const ParamStore& p,
                           const MatrixXd& x, const MatrixXd* v, bool keep) {
  const Index n = x.cols();
  const bool tangent = v != nullptr;
  const auto shape = dense_shape(c);
  DenseTape tape;
  tape.xx.resize(shape.total, tangent ? 2 * n : n);
  tape.xx.topLeftCorner(x.rows(), n) = x;
  if (tangent) tape.xx.topRightCorner(x.rows(), n) = *v;
  MatrixXd z, y;
  for (std::size_t i = 0; i < c.widths.size(); ++i) {
    const Index r = shape.rows_in[i];
    const Index w = static_cast<Index>(c.widths[i]);
    z.noalias() = weight(p, layer_name(i, "W")) * tape.xx.topRows(r);
    z.leftCols(n).colwise() += bias(p, layer_name(i, "b"));
    activate_pair(c.activation, z, n, tangent, y);
    tape.xx.middleRows(r, w) = y;
    if (keep) tape.zz.push_back(z);
  }
  return tape;
}

JetBatch densenet_jets(const DenseNetConfig& c, const ParamStore& p,
                       const MatrixXd& x) {
  const Index n = x.cols();
  const auto shape = dense_shape(c);
  auto tape = densenet_forward(c, p, x, nullptr, true);
  JetBatch jb;
  jb.u = resnet_output(p, tape.xx);

  MatrixXd lam = weight(p, "output.a").transpose().replicate(1, n);
  MatrixXd d1;
  for (std::size_t k = c.widths.size(); k-- > 0;) {
    const Index r = shape.rows_in[k];
    const Index w = static_cast<Index>(c.widths[k]);
    d1.resize(w, n);
    detail::apply_d1(c.activation, tape.zz[k], d1);
    lam.topRows(r).noalias() +=
        weight(p, layer_name(k, "W")).transpose() * d1.cwiseProduct(lam.middleRows(r, w));
  }
  jb.grad = lam.topRows(x.rows());
  return jb;
}

void densenet_backprop(const DenseNetConfig& c, const ParamStore& p,
                       const TensorLayout& layout, const MatrixXd& x,
                       const CotangentBatch& seeds, std::span<double> g) {
  const Index n = x.cols();
  const bool tangent = seeds.dgrad.cols() > 0;
  const auto shape = dense_shape(c);
  const auto tape = densenet_forward(c, p, x, tangent ? &seeds.dgrad : nullptr, true);

  const auto a = weight(p, "output.a");
  auto abar = weight_grad(layout, g, "output.a");
  abar.transpose() += tape.xx.leftCols(n) * seeds.du.transpose();
  if (tangent) abar.transpose() += tape.xx.rightCols(n).rowwise().sum();
  bias_grad(layout, g, "output.b")[0] += seeds.du.sum();

  MatrixXd xbar(shape.total, tape.xx.cols());
  xbar.leftCols(n) = a.transpose() * seeds.du;
  if (tangent) xbar.rightCols(n) = a.transpose().replicate(1, n);

  for (std::size_t k = c.widths.size(); k-- > 0;) {
    const Index r = shape.rows_in[k];
    const Index w = static_cast<Index>(c.widths[k]);
    const MatrixXd ybar = xbar.middleRows(r, w);
    const MatrixXd zbar = activate_pair_adjoint(c.activation, tape.zz[k], ybar, n, tangent);
    weight_grad(layout, g, layer_name(k, "W")).noalias() +=
        zbar * tape.xx.topRows(r).transpose();
    bias_grad(layout, g, layer_name(k, "b")) += zbar.leftCols(n).rowwise().sum();
    xbar.topRows(r).noalias() += weight(p, layer_name(k, "W")).transpose() * zbar;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

InputMap input_map(const ResNetConfig& config) {
  if (config.d_in == config.width) return InputMap::Identity;
  return config.d_in < config.width ? InputMap::ZeroPad : InputMap::Learned;
}

void validate(const NetConfig& config) {
  std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if (c.d_in == 0) throw std::invalid_argument("input dimension must be >= 1");
        if constexpr (std::is_same_v<T, ResNetConfig>) {
          if (c.width == 0) throw std::invalid_argument("block width must be >= 1");
        } else {
          for (auto w : c.widths) {
            if (w == 0) throw std::invalid_argument("layer widths must be >= 1");
          }
        }
      },
      config);
}

TensorLayout make_layout(const NetConfig& config) {
  validate(config);
  TensorLayout layout;
  if (const auto* r = std::get_if<ResNetConfig>(&config)) {
    const auto m = r->width;
    if (input_map(*r) == InputMap::Learned) layout.add("input.W", {m, r->d_in});
    for (std::size_t i = 0; i < r->blocks; ++i) {
      layout.add(block_name(i, "W1"), {m, m});
      layout.add(block_name(i, "b1"), {m});
      layout.add(block_name(i, "W2"), {m, m});
      layout.add(block_name(i, "b2"), {m});
    }
    layout.add("output.a", {1, m});
  } else {
    const auto& d = std::get<DenseNetConfig>(config);
    std::size_t rows = d.d_in;
    for (std::size_t i = 0; i < d.widths.size(); ++i) {
      layout.add(layer_name(i, "W"), {d.widths[i], rows});
      layout.add(layer_name(i, "b"), {d.widths[i]});
      rows += d.widths[i];
    }
    layout.add("output.a", {1, rows});
  }
  layout.add("output.b", {1});
  return layout;
}

std::size_t count_params(const NetConfig& config) {
  return make_layout(config).total_size();
}

std::size_t input_dim(const NetConfig& config) {
  return std::visit([](const auto& c) { return c.d_in; }, config);
}

TrialFunction::TrialFunction(NetConfig config)
    : config_(std::move(config)),
      layout_(make_layout(config_)),
      d_in_(deepritz::input_dim(config_)) {}

void TrialFunction::check(const ParamStore& params, const PointMatrix& points) const {
  if (static_cast<std::size_t>(points.rows()) != d_in_) {
    throw DimensionError("points have dimension " + std::to_string(points.rows()) +
                         ", network expects " + std::to_string(d_in_));
  }
  if (!(params.layout() == layout_)) {
    throw DimensionError("parameter layout does not match the network");
  }
}

Eigen::RowVectorXd TrialFunction::values(const ParamStore& params,
                                         const PointMatrix& points) const {
  check(params, points);
  if (const auto* r = std::get_if<ResNetConfig>(&config_)) {
    return resnet_output(params, resnet_forward(*r, params, points, false).state);
  }
  const auto& d = std::get<DenseNetConfig>(config_);
  return resnet_output(params, densenet_forward(d, params, points, nullptr, false).xx);
}

JetBatch TrialFunction::jets(const ParamStore& params, const PointMatrix& points) const {
  check(params, points);
  if (const auto* r = std::get_if<ResNetConfig>(&config_)) {
    return resnet_jets(*r, params, points);
  }
  return densenet_jets(std::get<DenseNetConfig>(config_), params, points);
}

std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> TrialFunction::directional(
    const ParamStore& params, const PointMatrix& points,
    const Eigen::MatrixXd& directions) const {
  check(params, points);
  if (directions.rows() != points.rows() || directions.cols() != points.cols()) {
    throw DimensionError("directions must match the point matrix shape");
  }
  const Index n = points.cols();
  MatrixXd state;
  if (const auto* r = std::get_if<ResNetConfig>(&config_)) {
    state = resnet_tangent_forward(*r, params, points, &directions).state;
  } else {
    state = densenet_forward(std::get<DenseNetConfig>(config_), params, points,
                             &directions, false)
                .xx;
  }
  Eigen::RowVectorXd u = resnet_output(params, state.leftCols(n));
  Eigen::RowVectorXd du = weight(params, "output.a") * state.rightCols(n);
  return {std::move(u), std::move(du)};
}

void TrialFunction::backprop(const ParamStore& params, const PointMatrix& points,
                             const CotangentBatch& seeds, std::span<double> grad) const {
  check(params, points);
  if (seeds.du.cols() != points.cols()) {
    throw DimensionError("one du seed per point required");
  }
  if (seeds.dgrad.cols() != 0 &&
      (seeds.dgrad.cols() != points.cols() || seeds.dgrad.rows() != points.rows())) {
    throw DimensionError("dgrad seeds must be d_in x N or empty");
  }
  if (grad.size() != layout_.total_size()) {
    throw DimensionError("gradient buffer does not match the parameter count");
  }
  if (points.cols() == 0) return;
  // Accumulate in aligned scratch so the caller's buffer address cannot
  // change the summation order of the products.
  AlignedVector local(grad.size(), 0.0);
  if (const auto* r = std::get_if<ResNetConfig>(&config_)) {
    resnet_backprop(*r, params, layout_, points, seeds, local);
  } else {
    densenet_backprop(std::get<DenseNetConfig>(config_), params, layout_, points,
                      seeds, local);
  }
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += local[i];
}

// ---------------------------------------------------------------------------

namespace {

Jet single_jet(const NetConfig& config, const ParamStore& params,
               std::span<const double> x) {
  const TrialFunction net(config);
  if (x.size() != net.input_dim()) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) +
                         ", network expects " + std::to_string(net.input_dim()));
  }
  const PointMatrix pt = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Index>(x.size()));
  const auto jb = net.jets(params, pt);
  Jet j;
  j.u = jb.u(0);
  j.grad_x.assign(jb.grad.data(), jb.grad.data() + jb.grad.size());
  return j;
}

}  // namespace

Jet resnet_eval(const ResNetConfig& config, const ParamStore& params,
                std::span<const double> x) {
  return single_jet(config, params, x);
}

Jet densenet_eval(const DenseNetConfig& config, const ParamStore& params,
                  std::span<const double> x) {
  return single_jet(config, params, x);
}

std::vector<double> backprop(const NetConfig& config, const ParamStore& params,
                             const std::vector<std::vector<double>>& points,
                             const std::vector<Cotangent>& cotangents) {
  if (points.size() != cotangents.size()) {
    throw DimensionError("points and cotangents must have the same length");
  }
  const TrialFunction net(config);
  const auto d = static_cast<Index>(net.input_dim());
  const auto n = static_cast<Index>(points.size());
  PointMatrix x(d, n);
  CotangentBatch seeds;
  seeds.du.resize(n);
  seeds.dgrad.resize(d, n);
  for (Index j = 0; j < n; ++j) {
    if (static_cast<Index>(points[j].size()) != d ||
        static_cast<Index>(cotangents[j].dgrad.size()) != d) {
      throw DimensionError("point or cotangent dimension mismatch");
    }
    for (Index k = 0; k < d; ++k) {
      x(k, j) = points[j][k];
      seeds.dgrad(k, j) = cotangents[j].dgrad[k];
    }
    seeds.du(j) = cotangents[j].du;
  }
  std::vector<double> grad(net.param_count(), 0.0);
  net.backprop(params, x, seeds, grad);
  return grad;
}

}  // namespace deepritz

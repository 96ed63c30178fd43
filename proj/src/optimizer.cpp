#include "deepritz/optimizer.hpp"

#include <cmath>
#include <string>

namespace deepritz {

namespace {

void check_grad(std::span<const double> grad, std::size_t expected) {
  if (grad.size() != expected) {
    throw std::invalid_argument("gradient length " + std::to_string(grad.size()) +
                                " does not match parameter count " +
                                std::to_string(expected));
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NonFiniteGradientError("non-finite gradient component at index " +
                                   std::to_string(i));
    }
  }
}

}  // namespace

void sgd_step(ParamStore& params, std::span<const double> grad, double eta) {
  check_grad(grad, params.size());
  auto theta = params.mutable_values();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * grad[i];
}

AdamState::AdamState(std::size_t n, AdamConfig config)
    : config_(config), m_(n, 0.0), v_(n, 0.0) {
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw std::invalid_argument("Adam decay rates must lie in [0, 1)");
  }
  if (!(config_.eps > 0.0)) throw std::invalid_argument("Adam eps must be > 0");
}

void AdamState::update(ParamStore& params, std::span<const double> grad) {
  check_grad(grad, m_.size());
  if (params.size() != m_.size()) {
    throw std::invalid_argument("Adam state does not match the parameter count");
  }
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  ++t_;
  const auto& c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  auto theta = params.mutable_values();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = scale * grad[i];
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * g;
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * g * g;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    theta[i] -= c.eta * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace deepritz

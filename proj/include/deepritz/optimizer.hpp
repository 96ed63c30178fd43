#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "deepritz/params.hpp"

namespace deepritz {

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// theta <- theta - eta * g.
void sgd_step(ParamStore& params, std::span<const double> grad, double eta);

struct AdamConfig {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Rescale g to this global 2-norm when larger; 0 disables clipping.
  double clip_norm = 0.0;
};

class AdamState {
 public:
  AdamState(std::size_t n, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double eta) { config_.eta = eta; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  std::uint64_t step() const { return t_; }

  /// Bias-corrected Adam update of params in place.
  void update(ParamStore& params, std::span<const double> grad);

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

inline void adam_step(AdamState& state, ParamStore& params, std::span<const double> grad) {
  state.update(params, grad);
}

}  // namespace deepritz

#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>

namespace deepritz {

/// ReLU3: max(x, 0)^3.  ReLU2: max(x, 0)^2.
/// Value, first and second derivative are all zero for x <= 0.
enum class Activation { ReLU3, ReLU2 };

struct ActivationValue {
  double value;
  double d1;
  double d2;
};

ActivationValue activation_eval(Activation kind, double x);

std::string to_string(Activation kind);
Activation activation_from_string(std::string_view name);

namespace detail {

// Elementwise versions over a whole pre-activation matrix.
template <typename In, typename Out>
void apply_value(Activation kind, const In& z, Out&& out) {
  const auto p = z.array().cwiseMax(0.0);
  if (kind == Activation::ReLU3) {
    out.array() = p * p * p;
  } else {
    out.array() = p * p;
  }
}

template <typename In, typename Out>
void apply_d1(Activation kind, const In& z, Out&& out) {
  const auto p = z.array().cwiseMax(0.0);
  if (kind == Activation::ReLU3) {
    out.array() = 3.0 * p * p;
  } else {
    out.array() = 2.0 * p;
  }
}

template <typename In, typename Out>
void apply_d2(Activation kind, const In& z, Out&& out) {
  if (kind == Activation::ReLU3) {
    out.array() = 6.0 * z.array().cwiseMax(0.0);
  } else {
    out.array() = (z.array() > 0.0).template cast<double>() * 2.0;
  }
}

}  // namespace detail
}  // namespace deepritz

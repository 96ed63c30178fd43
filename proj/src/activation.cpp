#include "deepritz/activation.hpp"

#include <stdexcept>

namespace deepritz {

ActivationValue activation_eval(Activation kind, double x) {
  const double p = x > 0.0 ? x : 0.0;
  if (kind == Activation::ReLU3) return {p * p * p, 3.0 * p * p, 6.0 * p};
  return {p * p, 2.0 * p, x > 0.0 ? 2.0 : 0.0};
}

std::string to_string(Activation kind) {
  return kind == Activation::ReLU3 ? "relu3" : "relu2";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu3") return Activation::ReLU3;
  if (name == "relu2") return Activation::ReLU2;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

}  // namespace deepritz

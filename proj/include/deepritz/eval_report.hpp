#pragma once

#include <optional>
#include <stdexcept>

namespace deepritz {

struct EvalReport {
  double rel_l2 = 0.0;
  double max_err = 0.0;
  std::optional<double> lambda_est;
  std::optional<double> lambda_rel_err;
};

/// Raised when the reference values used to normalise rel_l2 are all zero.
class ZeroReferenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace deepritz

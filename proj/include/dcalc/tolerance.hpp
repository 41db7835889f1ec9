#pragma once

#include <algorithm>
#include <cmath>

namespace dcalc {

/// Uniform comparison policy: |x - y| <= abs + rel * max(|x|, |y|).
struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;

  [[nodiscard]] bool close(double x, double y) const {
    return std::abs(x - y) <= abs + rel * std::max(std::abs(x), std::abs(y));
  }

  /// Threshold for a residual-like quantity measured against a reference scale.
  [[nodiscard]] double bound(double scale) const { return abs + rel * std::abs(scale); }
};

}  // namespace dcalc

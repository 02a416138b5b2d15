#pragma once

#include <Eigen/Core>

#include "rotorlab/errors.hpp"

namespace rotorlab {

/// Square discrete Fourier grid shared by the momentum and angle
/// representations. Momentum values are the integers m in [-n/2+1, n/2],
/// stored in DFT index order: index k maps to m = k for k <= n/2 and
/// m = k - n above. Angle values are theta_j = 2 pi j / n.
struct GridSpec {
  int n = 2048;

  GridSpec() = default;
  explicit GridSpec(int n_points) : n(n_points) { validate(); }

  void validate() const {
    if (n < 8 || (n & (n - 1)) != 0) {
      throw ConfigError("grid: n must be a power of two >= 8, got " + std::to_string(n));
    }
  }

  int min_momentum() const { return -n / 2 + 1; }
  int max_momentum() const { return n / 2; }

  /// DFT index -> integer momentum.
  int momentum_at(int k) const { return k <= n / 2 ? k : k - n; }

  /// Integer momentum -> DFT index. Throws if m is off-grid.
  int index_of(int m) const {
    if (m < min_momentum() || m > max_momentum()) {
      throw UsageError("momentum " + std::to_string(m) + " is outside the grid [" +
                       std::to_string(min_momentum()) + ", " + std::to_string(max_momentum()) +
                       "]");
    }
    return m >= 0 ? m : m + n;
  }

  /// Momentum values in storage (DFT) order.
  Eigen::ArrayXd momenta() const {
    Eigen::ArrayXd m(n);
    for (int k = 0; k < n; ++k) m[k] = momentum_at(k);
    return m;
  }

  /// Angle values theta_j = 2 pi j / n, j = 0..n-1.
  Eigen::ArrayXd angles() const {
    return Eigen::ArrayXd::LinSpaced(n, 0.0, 2.0 * EIGEN_PI * (n - 1.0) / n);
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) { return a.n == b.n; }
};

}  // namespace rotorlab

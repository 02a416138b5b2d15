#pragma once

#include <cmath>
#include <utility>

#include "rotorlab/errors.hpp"

namespace rotorlab {

/// Dimensionless parameters of the coupled two-rotor kick Hamiltonian
///
///   T(p1, p2)     = (alpha1 p1^2 + alpha2 p2^2) / 2
///   V(th1, th2)   = lambda1 cos th1 + lambda2 cos th2
///                 + lambda3 cos th1 cos th2 + lambda4 cos(th1 - th2)
///
/// lambda1, lambda2 are the single-rotor kick strengths, lambda3 and
/// lambda4 the couplings. All quantities are dimensionless; the physical
/// constants (hbar, kick period, moments of inertia) are absorbed into
/// alpha1, alpha2.
struct SystemParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;

  void validate() const {
    auto bad = [](double x) { return !std::isfinite(x); };
    if (bad(lambda1) || bad(lambda2) || bad(lambda3) || bad(lambda4) || bad(alpha1) ||
        bad(alpha2)) {
      throw ConfigError("params: all six parameters must be finite");
    }
    if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0) {
      throw ConfigError("params: kick and coupling strengths must be >= 0");
    }
    if (alpha1 <= 0 || alpha2 <= 0) {
      throw ConfigError("params: alpha1 and alpha2 must be > 0");
    }
  }
};

/// Quasi-linear (uniform random angle) diffusion coefficients, in units of
/// momentum^2 per kick.
struct QuasiLinearCoefficients {
  double d1_0 = 0.0;
  double d2_0 = 0.0;
};

/// Kick potential V(th1, th2). Total and 2*pi-periodic in both angles.
inline double kick_potential(const SystemParams& p, double theta1, double theta2) {
  const double c1 = std::cos(theta1);
  const double c2 = std::cos(theta2);
  return p.lambda1 * c1 + p.lambda2 * c2 + p.lambda3 * c1 * c2 +
         p.lambda4 * std::cos(theta1 - theta2);
}

/// Momentum impulses of one kick, (-dV/dth1, -dV/dth2).
inline std::pair<double, double> kick_force(const SystemParams& p, double theta1,
                                            double theta2) {
  const double s1 = std::sin(theta1);
  const double c1 = std::cos(theta1);
  const double s2 = std::sin(theta2);
  const double c2 = std::cos(theta2);
  const double s12 = s1 * c2 - c1 * s2;  // sin(th1 - th2)
  const double f1 = p.lambda1 * s1 + p.lambda3 * s1 * c2 + p.lambda4 * s12;
  const double f2 = p.lambda2 * s2 + p.lambda3 * c1 * s2 - p.lambda4 * s12;
  return {f1, f2};
}

/// Closed-form quasi-linear diffusion coefficients,
///   D1_0 = (lambda3 + lambda4)^2/4 + lambda4^2/4 + lambda1^2/2
/// and likewise for rotor 2 with lambda2. In the single-rotor limit
/// (lambda2 = lambda3 = lambda4 = 0) this is the uniform-angle average of
/// the squared kick impulse, lambda1^2/2.
inline QuasiLinearCoefficients quasi_linear_coefficients(const SystemParams& p) {
  const double coupling =
      (p.lambda3 + p.lambda4) * (p.lambda3 + p.lambda4) / 4.0 + p.lambda4 * p.lambda4 / 4.0;
  return {coupling + p.lambda1 * p.lambda1 / 2.0, coupling + p.lambda2 * p.lambda2 / 2.0};
}

}  // namespace rotorlab

#include "rotorlab/classical.hpp"

#include <cmath>
#include <random>

#include "rotorlab/rng.hpp"

namespace rotorlab {

namespace {

constexpr double kTwoPi = 2.0 * EIGEN_PI;

inline double wrap_angle(double theta) {
  double w = theta - kTwoPi * std::floor(theta / kTwoPi);
  // floor rounding can land exactly on 2*pi for tiny negative inputs
  return w >= kTwoPi ? w - kTwoPi : w;
}

}  // namespace

ClassicalEnsemble sample_initial_ensemble(Eigen::Index n, std::uint64_t seed, double m0,
                                          double dm, double theta0, double dtheta) {
  if (n < 1) throw ConfigError("ensemble: particle count must be >= 1");
  if (!(dm > 0.0) || !std::isfinite(dm)) throw ConfigError("ensemble: dm must be > 0");
  if (!(dtheta > 0.0) || !std::isfinite(dtheta)) {
    throw ConfigError("ensemble: dtheta must be > 0");
  }

  ClassicalEnsemble e;
  e.theta1.resize(n);
  e.theta2.resize(n);
  e.p1.resize(n);
  e.p2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    SplitMix64 gen(SplitMix64::mix(seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> momentum(m0, dm);
    std::normal_distribution<double> angle(theta0, dtheta);
    e.p1[i] = momentum(gen);
    e.p2[i] = momentum(gen);
    e.theta1[i] = wrap_angle(angle(gen));
    e.theta2[i] = wrap_angle(angle(gen));
  }
  return e;
}

void classical_step_inplace(ClassicalEnsemble& e, const SystemParams& params) {
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;
  const double l3 = params.lambda3;
  const double l4 = params.lambda4;
  const Eigen::Index n = e.size();
  double* __restrict t1 = e.theta1.data();
  double* __restrict t2 = e.theta2.data();
  double* __restrict p1 = e.p1.data();
  double* __restrict p2 = e.p2.data();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s1 = std::sin(t1[i]);
    const double c1 = std::cos(t1[i]);
    const double s2 = std::sin(t2[i]);
    const double c2 = std::cos(t2[i]);
    const double s12 = s1 * c2 - c1 * s2;  // sin(th1 - th2)
    const double q1 = p1[i] + l1 * s1 + l3 * s1 * c2 + l4 * s12;
    const double q2 = p2[i] + l2 * s2 + l3 * c1 * s2 - l4 * s12;
    p1[i] = q1;
    p2[i] = q2;
    t1[i] = wrap_angle(t1[i] + q1);
    t2[i] = wrap_angle(t2[i] + q2);
  }
  ++e.kick_count;
}

ClassicalEnsemble classical_step(ClassicalEnsemble ensemble, const SystemParams& params) {
  classical_step_inplace(ensemble, params);
  return ensemble;
}

void classical_unstep_inplace(ClassicalEnsemble& e, const SystemParams& params) {
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;
  const double l3 = params.lambda3;
  const double l4 = params.lambda4;
  const Eigen::Index n = e.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t1 = wrap_angle(e.theta1[i] - e.p1[i]);
    const double t2 = wrap_angle(e.theta2[i] - e.p2[i]);
    const double s1 = std::sin(t1);
    const double c1 = std::cos(t1);
    const double s2 = std::sin(t2);
    const double c2 = std::cos(t2);
    const double s12 = s1 * c2 - c1 * s2;
    e.theta1[i] = t1;
    e.theta2[i] = t2;
    e.p1[i] -= l1 * s1 + l3 * s1 * c2 + l4 * s12;
    e.p2[i] -= l2 * s2 + l3 * c1 * s2 - l4 * s12;
  }
  --e.kick_count;
}

MomentStats ensemble_moments(const ClassicalEnsemble& e) {
  const Eigen::Index n = e.size();
  if (n == 0) throw UsageError("ensemble_moments: empty ensemble");

  // Chunked two-pass reduction, combined in chunk order.
  static constexpr Eigen::Index kChunk = 4096;
  auto chunked_sum = [n](const Eigen::ArrayXd& x, auto&& term) {
    double total = 0.0;
    for (Eigen::Index lo = 0; lo < n; lo += kChunk) {
      const Eigen::Index len = std::min(kChunk, n - lo);
      total += term(x.segment(lo, len));
    }
    return total;
  };

  MomentStats s;
  s.t = e.kick_count;
  s.mean_p1 = chunked_sum(e.p1, [](auto seg) { return seg.sum(); }) / static_cast<double>(n);
  s.mean_p2 = chunked_sum(e.p2, [](auto seg) { return seg.sum(); }) / static_cast<double>(n);
  const double m1 = s.mean_p1;
  const double m2 = s.mean_p2;
  s.var_p1 = chunked_sum(e.p1, [m1](auto seg) { return (seg - m1).square().sum(); }) /
             static_cast<double>(n);
  s.var_p2 = chunked_sum(e.p2, [m2](auto seg) { return (seg - m2).square().sum(); }) /
             static_cast<double>(n);
  return s;
}

std::pair<double, double> fit_diffusion(const std::vector<MomentStats>& series, long t_min,
                                        long t_max) {
  std::vector<const MomentStats*> window;
  for (const auto& s : series) {
    if (s.t >= t_min && s.t <= t_max) window.push_back(&s);
  }
  if (window.size() < 10) {
    throw UsageError("fit_diffusion: need >= 10 samples in [" + std::to_string(t_min) + ", " +
                     std::to_string(t_max) + "], have " + std::to_string(window.size()));
  }

  // Least-squares slope with free intercept for each rotor.
  const auto m = static_cast<double>(window.size());
  double st = 0.0, stt = 0.0, sv1 = 0.0, sv2 = 0.0, stv1 = 0.0, stv2 = 0.0;
  for (const auto* s : window) {
    const auto t = static_cast<double>(s->t);
    st += t;
    stt += t * t;
    sv1 += s->var_p1;
    sv2 += s->var_p2;
    stv1 += t * s->var_p1;
    stv2 += t * s->var_p2;
  }
  const double denom = m * stt - st * st;
  if (denom == 0.0) throw UsageError("fit_diffusion: degenerate time window");
  return {(m * stv1 - st * sv1) / denom, (m * stv2 - st * sv2) / denom};
}

}  // namespace rotorlab

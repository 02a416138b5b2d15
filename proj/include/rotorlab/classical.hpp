#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "rotorlab/model.hpp"

namespace rotorlab {

/// Ensemble of classical phase-space points evolved under the kick map.
/// Stored as parallel arrays (struct of arrays); angles are kept in
/// [0, 2 pi), momenta are unbounded reals.
struct ClassicalEnsemble {
  Eigen::ArrayXd theta1;
  Eigen::ArrayXd theta2;
  Eigen::ArrayXd p1;
  Eigen::ArrayXd p2;
  long kick_count = 0;

  Eigen::Index size() const { return p1.size(); }
};

/// Momentum means and variances of the ensemble at kick t.
/// Variances use the population convention (divide by n).
struct MomentStats {
  long t = 0;
  double mean_p1 = 0.0;
  double mean_p2 = 0.0;
  double var_p1 = 0.0;
  double var_p2 = 0.0;
};

/// Draws n particles with independent Gaussian momentum (mean m0, std dm)
/// and angle (mean theta0, std dtheta, reduced mod 2 pi) per rotor.
/// Fully determined by the seed; particle i consumes its own SplitMix64
/// stream, so the result does not depend on how the loop is chunked.
ClassicalEnsemble sample_initial_ensemble(Eigen::Index n, std::uint64_t seed, double m0,
                                          double dm, double theta0, double dtheta);

/// One application of the kick map to every particle: momenta first (from
/// the pre-kick angles), then free rotation with the new momenta, angles
/// reduced mod 2 pi.
ClassicalEnsemble classical_step(ClassicalEnsemble ensemble, const SystemParams& params);

/// In-place variant used by the evolution loop.
void classical_step_inplace(ClassicalEnsemble& ensemble, const SystemParams& params);

/// Exact inverse of classical_step (free rotation backwards, then the
/// opposite impulses). Used to verify the map is invertible.
void classical_unstep_inplace(ClassicalEnsemble& ensemble, const SystemParams& params);

/// Momentum means/variances. Reduction runs over fixed-size chunks combined
/// in index order, so the result is bit-stable for a given chunk size.
MomentStats ensemble_moments(const ClassicalEnsemble& ensemble);

/// Least-squares slope of var(p) vs t over samples with t in [t_min, t_max],
/// intercept free. Requires at least 10 samples in the window.
std::pair<double, double> fit_diffusion(const std::vector<MomentStats>& series, long t_min,
                                        long t_max);

}  // namespace rotorlab

#pragma once

#include <string>

#include "rotorlab/grid.hpp"
#include "rotorlab/model.hpp"
#include "rotorlab/quantum.hpp"

namespace rotorlab {

/// Mean free path of the one-kick spread from the momentum origin:
/// l = sqrt(sum over r of (r1^2 + r2^2) |U_{0,r}|^2), computed by applying
/// one Floquet step to the (0,0) basis state. Fails with GridError unless
/// the spread is grid-converged (probability outside |r| < n/4 below
/// 1e-10 and doubling n moves l by < 1e-6).
double mean_free_path(const SystemParams& params, const GridSpec& grid);

/// Parameters of the log-corrected diffusion recurrence
///   S^2_{n+1} = S^2_n + dT (c l - a log(S_n / l)),  S^2_0 = l^2,
/// fitted to a width series, plus the derived localization scale.
struct ScalingFit {
  double l = 0.0;           // mean free path used by the fit
  double c = 0.0;           // dimensionless source strength
  double a = 0.0;           // log-correction coefficient, momentum^2/kick
  double b = 0.0;           // c/a, 1/momentum
  double lambda_big = 0.0;  // l exp(b l): width at which the block diffusion rate vanishes
  double residual = 0.0;    // sum of squared S^2 differences at block boundaries
  long delta_t = 0;         // block size in kicks
};

/// Fits (c, a) by coarse grid search over c in [0, 20], a in (0, 20]
/// (100 x 100) followed by Nelder-Mead refinement to relative tolerance
/// 1e-6. The series is resampled at block boundaries t = k delta_t using
/// the nearest recorded sample. Throws FitError when fewer than 10 blocks
/// are covered, when the optimum sticks to the search-box boundary, or
/// when the fitted c or a is not positive (series not in the
/// weak-localization regime).
ScalingFit fit_scaling(const WidthSeries& series, double l, long delta_t);

/// Model value of one recurrence trajectory, for tests and synthesis:
/// returns S^2 at blocks 0..n_blocks (inclusive).
std::vector<double> scaling_recurrence(double l, double c, double a, long delta_t,
                                       int n_blocks);

inline double saturation_length(double l, double b) { return l * std::exp(b * l); }

enum class RegimeLabel { Localized, Intermediate, QuasiDiffusive };

std::string to_string(RegimeLabel label);

/// Width-series shape indices behind the regime label.
///   rho: late-window slope of smoothed S^2 over the peak early-window
///        block slope (late/early growth ratio)
///   oscillation_index: rms of the quadratically detrended smoothed S in
///        the late window, relative to its mean
///   monotonicity_index: fraction of nondecreasing smoothed-S increments
///        in the late window
///   early_slope_ratio: peak early S^2 slope over classical_d (diagnostic
///        only; how suppressed the initial growth is vs the classical rate)
struct RegimeDiagnostics {
  double rho = 0.0;
  double oscillation_index = 0.0;
  double monotonicity_index = 0.0;
  double early_slope_ratio = 0.0;
};

struct RegimeResult {
  RegimeLabel label = RegimeLabel::Localized;
  RegimeDiagnostics diagnostics;
};

/// Decision thresholds; defaults reproduce the regime-table corners at
/// n=512, 5000 kicks. A series is Localized when rho < rho_localized and
/// the oscillation index stays small; QuasiDiffusive when smoothed S is
/// nondecreasing, rho lies in [rho_diffusive, 1] and the oscillation
/// index stays small; Intermediate otherwise.
struct ClassifierThresholds {
  double rho_localized = 0.05;
  double rho_diffusive = 0.15;
  double oscillation_max = 0.10;
  double monotonicity_min = 0.95;
};

/// Labels a width series. classical_d only feeds the diagnostics, never
/// the decision. Requires the series to span at least 2000 kicks.
RegimeResult classify_regime(const WidthSeries& series, double classical_d,
                             const ClassifierThresholds& thresholds = {});

}  // namespace rotorlab

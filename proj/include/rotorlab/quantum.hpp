#pragma once

#include <Eigen/Core>
#include <complex>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "rotorlab/grid.hpp"
#include "rotorlab/model.hpp"

// Forward declarations so fftw3.h stays out of the public header.
struct fftw_plan_s;

namespace rotorlab {

/// Two-rotor wavefunction on the discrete momentum lattice.
/// amps(k1, k2) is the amplitude at integer momenta (m(k1), m(k2)) in DFT
/// index order; the norm is preserved by evolution.
struct QuantumState {
  GridSpec grid;
  Eigen::ArrayXXcd amps;
  long kick_count = 0;

  explicit QuantumState(const GridSpec& g)
      : grid(g), amps(Eigen::ArrayXXcd::Zero(g.n, g.n)) {}

  double norm() const { return std::sqrt(amps.abs2().sum()); }
  void normalize();

  /// Total probability on the outermost two momentum rows and columns on
  /// each side of the grid.
  double edge_probability() const;
};

struct WidthSample {
  long t = 0;
  double s1 = 0.0;
  double s2 = 0.0;
};

/// Time series of the marginal momentum-distribution widths
/// S = sqrt(<(p - <p>)^2>) per rotor.
struct WidthSeries {
  std::vector<WidthSample> samples;
  SystemParams params;
  GridSpec grid;
};

/// Product of two Gaussian wave packets a_m = exp(-[(m - m0)/(2 dm)]^2),
/// each carrying the phase e^{-i m theta0}, normalized after truncation to
/// the grid. The packet must fit: |m0| < n/4 and the edge probability must
/// be below leakage_threshold.
QuantumState build_initial_state(const GridSpec& grid, double m0, double dm, double theta0,
                                 double leakage_threshold = 1e-8);

/// One-kick split-step propagator: kinetic phase exp(-i(alpha1 m1^2 +
/// alpha2 m2^2)/2) in the momentum representation, then the kick phase
/// exp(-i V(theta1, theta2)) in the angle representation, with unitary
/// FFTs between them. Owns the FFTW plans and the precomputed phase
/// tables; one instance drives one evolution at a time.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const GridSpec& grid, const SystemParams& params,
                      double leakage_threshold = 1e-8, bool measured_plans = false);
  ~SplitStepPropagator();
  SplitStepPropagator(const SplitStepPropagator&) = delete;
  SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

  /// Advances the state by one kick. Throws LeakageError if the edge
  /// probability exceeds the threshold afterwards.
  void step(QuantumState& state);

  const SystemParams& params() const { return params_; }
  double leakage_threshold() const { return leakage_threshold_; }

 private:
  void ensure_plans(std::complex<double>* buffer);

  GridSpec grid_;
  SystemParams params_;
  double leakage_threshold_;
  bool measured_plans_;
  Eigen::ArrayXcd kinetic1_;      // exp(-i alpha1 m^2 / 2)
  Eigen::ArrayXcd kinetic2_;      // exp(-i alpha2 m^2 / 2)
  Eigen::ArrayXXcd kick_phase_;   // exp(-i V) / n^2 (transform scaling folded in)
  fftw_plan_s* forward_ = nullptr;
  fftw_plan_s* backward_ = nullptr;
  std::complex<double>* planned_for_ = nullptr;
};

/// Single Floquet step (convenience wrapper building a throwaway propagator).
void floquet_step(QuantumState& state, const SystemParams& params,
                  double leakage_threshold = 1e-8);

struct EvolveOptions {
  double leakage_threshold = 1e-8;
  bool measured_plans = false;
  std::vector<long> snapshot_times;  // absolute kick counts
  std::function<void(const QuantumState&)> on_snapshot;
  long checkpoint_every = 0;  // 0 disables
  std::function<void(const QuantumState&, const WidthSeries&)> on_checkpoint;
};

/// Applies n_kicks Floquet steps, appending a width sample every
/// sample_every kicks (plus one at entry when the state is fresh).
/// On LeakageError the samples collected so far remain in `series`.
void evolve(QuantumState& state, const SystemParams& params, long n_kicks, long sample_every,
            WidthSeries& series, const EvolveOptions& opts = {});

WidthSeries evolve(QuantumState& state, const SystemParams& params, long n_kicks,
                   long sample_every, const EvolveOptions& opts = {});

/// Standard deviation of each marginal momentum distribution.
std::pair<double, double> width(const QuantumState& state);

/// |Psi(m1, fixed_m2)|^2 vs m1 (unnormalized section), ascending in m1.
std::vector<std::pair<int, double>> momentum_section(const QuantumState& state, int fixed_m2);

struct TailFit {
  double decay_rate = 0.0;  // 1/momentum; positive for a decaying tail
  double r_squared = 0.0;   // of the linear fit of log P vs |m|
  bool curvature_flagged = false;
  int points_used = 0;
};

/// Least-squares slope of log(probability) vs |m1| over the window
/// (in |m1|), fitted per tail and averaged. Points at or below `floor`
/// are ignored. A quadratic refit flags non-exponential curvature.
TailFit fit_exponential_tail(const std::vector<std::pair<int, double>>& section,
                             std::pair<double, double> fit_window, double floor = 1e-14);

/// Unitary momentum -> angle transform (1/sqrt(n) per dimension); test and
/// diagnostics path, not used by the evolution loop.
Eigen::ArrayXXcd angle_representation(const QuantumState& state);
Eigen::ArrayXXcd momentum_from_angle(const Eigen::ArrayXXcd& angle_amps);

/// True if alpha/(2 pi) is within tol of a rational p/q with q <= max_den
/// (continued-fraction scan of convergents and semiconvergents). Such
/// alpha make the effective lattice periodic, so localization is replaced
/// by extended Bloch-like states; runs warn but proceed.
bool commensurate_alpha(double alpha, long max_den = 4096, double tol = 1e-9,
                        long* p_out = nullptr, long* q_out = nullptr);

/// Binary checkpoint of a quantum run (native endianness, versioned).
struct CheckpointMeta {
  SystemParams params;
  int grid_n = 0;
  double m0 = 0.0;
  double dm = 0.0;
  double theta0 = 0.0;
};

struct Checkpoint {
  QuantumState state;
  WidthSeries series;
  CheckpointMeta meta;
};

/// Atomically (write + rename) stores state, width series and run identity.
void save_checkpoint(const std::filesystem::path& path, const QuantumState& state,
                     const WidthSeries& series, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rotorlab

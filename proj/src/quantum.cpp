#include "rotorlab/quantum.hpp"

#include <fftw3.h>

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>

#include "rotorlab/errors.hpp"

namespace rotorlab {

namespace {

// FFTW's planner mutates global state; executions of distinct plans are safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

Eigen::ArrayXd marginal1(const QuantumState& s) { return s.amps.abs2().rowwise().sum(); }
Eigen::ArrayXd marginal2(const QuantumState& s) { return s.amps.abs2().colwise().sum(); }

double marginal_std(const Eigen::ArrayXd& prob, const Eigen::ArrayXd& momenta) {
  const double total = prob.sum();
  if (total <= 0.0) return 0.0;
  const double mean = (momenta * prob).sum() / total;
  const double second = (momenta.square() * prob).sum() / total;
  return std::sqrt(std::max(0.0, second - mean * mean));
}

}  // namespace

void QuantumState::normalize() {
  const double n = norm();
  if (n > 0.0) amps /= n;
}

double QuantumState::edge_probability() const {
  const int n = grid.n;
  // Outermost two momentum values per side: m in {n/2, n/2-1, -n/2+1, -n/2+2}.
  const int edge[4] = {n / 2, n / 2 - 1, n / 2 + 1, n / 2 + 2};
  double rows = 0.0, cols = 0.0, corners = 0.0;
  for (int a : edge) {
    rows += amps.row(a).abs2().sum();
    cols += amps.col(a).abs2().sum();
    for (int b : edge) corners += std::norm(amps(a, b));
  }
  return rows + cols - corners;
}

QuantumState build_initial_state(const GridSpec& grid, double m0, double dm, double theta0,
                                 double leakage_threshold) {
  if (!(dm > 0.0) || !std::isfinite(dm)) {
    throw ConfigError("initial state: dm must be > 0");
  }
  if (std::abs(m0) >= grid.n / 4.0) {
    throw ConfigError("initial state: |m0| must be < n/4 so the packet fits the grid");
  }

  const Eigen::ArrayXd m = grid.momenta();
  const Eigen::ArrayXd envelope = (-((m - m0) / (2.0 * dm)).square()).exp();
  Eigen::ArrayXcd a =
      envelope * (std::complex<double>(0.0, -theta0) * m.cast<std::complex<double>>()).exp();
  a /= std::sqrt(a.abs2().sum());

  QuantumState state(grid);
  state.amps = (a.matrix() * a.matrix().transpose()).array();
  state.normalize();

  const double edge = state.edge_probability();
  if (edge >= leakage_threshold) {
    throw ConfigError("initial state: packet touches the grid edge (edge probability " +
                      std::to_string(edge) + ")");
  }
  return state;
}

SplitStepPropagator::SplitStepPropagator(const GridSpec& grid, const SystemParams& params,
                                         double leakage_threshold, bool measured_plans)
    : grid_(grid),
      params_(params),
      leakage_threshold_(leakage_threshold),
      measured_plans_(measured_plans) {
  params_.validate();
  const int n = grid_.n;
  const Eigen::ArrayXd m = grid_.momenta();
  const std::complex<double> half_i(0.0, -0.5);
  kinetic1_ = (half_i * params_.alpha1 * m.square()).exp();
  kinetic2_ = (half_i * params_.alpha2 * m.square()).exp();

  // Kick phase with the round-trip transform scaling 1/n^2 folded in.
  const Eigen::ArrayXd theta = grid_.angles();
  kick_phase_.resize(n, n);
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (int j2 = 0; j2 < n; ++j2) {
    for (int j1 = 0; j1 < n; ++j1) {
      const double v = kick_potential(params_, theta[j1], theta[j2]);
      kick_phase_(j1, j2) = std::polar(scale, -v);
    }
  }
}

SplitStepPropagator::~SplitStepPropagator() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

void SplitStepPropagator::ensure_plans(std::complex<double>* buffer) {
  if (planned_for_ == buffer) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);

  const int n = grid_.n;
  const unsigned flags = measured_plans_ ? FFTW_MEASURE : FFTW_ESTIMATE;
  // Measured planning scribbles on the buffer; preserve the state.
  Eigen::ArrayXXcd saved;
  if (measured_plans_) {
    saved = Eigen::Map<Eigen::ArrayXXcd>(buffer, n, n);
  }
  forward_ = fftw_plan_dft_2d(n, n, as_fftw(buffer), as_fftw(buffer), FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft_2d(n, n, as_fftw(buffer), as_fftw(buffer), FFTW_BACKWARD, flags);
  if (!forward_ || !backward_) throw Error("fftw plan creation failed");
  if (measured_plans_) {
    Eigen::Map<Eigen::ArrayXXcd>(buffer, n, n) = saved;
  }
  planned_for_ = buffer;
}

void SplitStepPropagator::step(QuantumState& state) {
  if (state.grid.n != grid_.n) throw UsageError("propagator/state grid size mismatch");
  ensure_plans(state.amps.data());

  const int n = grid_.n;
  // Free propagation between kicks: diagonal phase in momentum.
  for (int k2 = 0; k2 < n; ++k2) {
    state.amps.col(k2) *= kinetic1_ * kinetic2_[k2];
  }
  // Kick in the angle representation.
  fftw_execute(backward_);
  state.amps *= kick_phase_;
  fftw_execute(forward_);

  ++state.kick_count;

  const double edge = state.edge_probability();
  if (edge > leakage_threshold_) {
    throw LeakageError(state.kick_count, edge, leakage_threshold_);
  }
}

void floquet_step(QuantumState& state, const SystemParams& params, double leakage_threshold) {
  SplitStepPropagator prop(state.grid, params, leakage_threshold);
  prop.step(state);
}

void evolve(QuantumState& state, const SystemParams& params, long n_kicks, long sample_every,
            WidthSeries& series, const EvolveOptions& opts) {
  if (n_kicks < 1) throw UsageError("evolve: n_kicks must be >= 1");
  if (sample_every < 1) throw UsageError("evolve: sample_every must be >= 1");

  series.params = params;
  series.grid = state.grid;

  SplitStepPropagator prop(state.grid, params, opts.leakage_threshold, opts.measured_plans);

  auto record = [&] {
    const auto [s1, s2] = width(state);
    series.samples.push_back({state.kick_count, s1, s2});
  };
  if (state.kick_count == 0 && series.samples.empty()) record();

  const long target = state.kick_count + n_kicks;
  auto snap_it = opts.snapshot_times.begin();
  while (state.kick_count < target) {
    prop.step(state);
    const long t = state.kick_count;
    if (t % sample_every == 0) record();
    while (snap_it != opts.snapshot_times.end() && *snap_it <= t) {
      if (*snap_it == t && opts.on_snapshot) opts.on_snapshot(state);
      ++snap_it;
    }
    if (opts.checkpoint_every > 0 && t % opts.checkpoint_every == 0 && t < target &&
        opts.on_checkpoint) {
      opts.on_checkpoint(state, series);
    }
  }
}

WidthSeries evolve(QuantumState& state, const SystemParams& params, long n_kicks,
                   long sample_every, const EvolveOptions& opts) {
  WidthSeries series;
  evolve(state, params, n_kicks, sample_every, series, opts);
  return series;
}

std::pair<double, double> width(const QuantumState& state) {
  const Eigen::ArrayXd m = state.grid.momenta();
  return {marginal_std(marginal1(state), m), marginal_std(marginal2(state), m)};
}

std::vector<std::pair<int, double>> momentum_section(const QuantumState& state, int fixed_m2) {
  const int k2 = state.grid.index_of(fixed_m2);
  const int n = state.grid.n;
  std::vector<std::pair<int, double>> section;
  section.reserve(n);
  for (int m1 = state.grid.min_momentum(); m1 <= state.grid.max_momentum(); ++m1) {
    section.emplace_back(m1, std::norm(state.amps(state.grid.index_of(m1), k2)));
  }
  return section;
}

namespace {

struct PolyFit {
  double sse = 0.0;
  Eigen::VectorXd coeffs;
};

PolyFit polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  const auto np = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(np, degree + 1);
  Eigen::VectorXd rhs(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    double xp = 1.0;
    for (int d = 0; d <= degree; ++d) {
      design(i, d) = xp;
      xp *= x[static_cast<std::size_t>(i)];
    }
    rhs[i] = y[static_cast<std::size_t>(i)];
  }
  PolyFit fit;
  fit.coeffs = design.colPivHouseholderQr().solve(rhs);
  fit.sse = (design * fit.coeffs - rhs).squaredNorm();
  return fit;
}

}  // namespace

TailFit fit_exponential_tail(const std::vector<std::pair<int, double>>& section,
                             std::pair<double, double> fit_window, double floor) {
  const double lo = fit_window.first;
  const double hi = fit_window.second;
  if (!(lo >= 0.0) || !(hi > lo)) throw UsageError("fit_exponential_tail: invalid window");

  std::vector<double> xs[2], ys[2];  // [0] = left tail (m < 0), [1] = right tail
  for (const auto& [m, p] : section) {
    const double am = std::abs(static_cast<double>(m));
    if (am < lo || am > hi || !(p > floor)) continue;
    const int side = m < 0 ? 0 : 1;
    xs[side].push_back(am);
    ys[side].push_back(std::log(p));
  }
  const std::size_t total = xs[0].size() + xs[1].size();
  if (total < 10) {
    throw FitError("fit_exponential_tail: only " + std::to_string(total) +
                   " points above floor in the window, need >= 10");
  }

  double rate_sum = 0.0;
  int tails = 0;
  double sse_lin = 0.0, sst = 0.0;
  std::vector<double> all_x, all_y;
  for (int side = 0; side < 2; ++side) {
    if (xs[side].size() < 5) continue;
    const PolyFit line = polyfit(xs[side], ys[side], 1);
    rate_sum += -line.coeffs[1];
    ++tails;
    sse_lin += line.sse;
    const double mean =
        std::accumulate(ys[side].begin(), ys[side].end(), 0.0) / ys[side].size();
    for (double v : ys[side]) sst += (v - mean) * (v - mean);
    all_x.insert(all_x.end(), xs[side].begin(), xs[side].end());
    all_y.insert(all_y.end(), ys[side].begin(), ys[side].end());
  }
  if (tails == 0) throw FitError("fit_exponential_tail: no tail has >= 5 usable points");

  TailFit result;
  result.decay_rate = rate_sum / tails;
  result.points_used = static_cast<int>(total);
  result.r_squared = sst > 0.0 ? 1.0 - sse_lin / sst : 1.0;

  // Quadratic refit over the pooled |m| axis: a dominant second-order term
  // means the profile is not exponential over this window.
  const PolyFit quad = polyfit(all_x, all_y, 2);
  const double span = hi - lo;
  const double quad_contrib = std::abs(quad.coeffs[2]) * span * span / 4.0;
  const double lin_contrib = std::abs(quad.coeffs[1]) * span;
  result.curvature_flagged = quad_contrib > 0.25 * (lin_contrib + 1e-30);
  return result;
}

Eigen::ArrayXXcd angle_representation(const QuantumState& state) {
  const int n = state.grid.n;
  Eigen::ArrayXXcd work = state.amps;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_plan plan = fftw_plan_dft_2d(n, n, as_fftw(work.data()), as_fftw(work.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return work / static_cast<double>(n);
}

Eigen::ArrayXXcd momentum_from_angle(const Eigen::ArrayXXcd& angle_amps) {
  const auto n = static_cast<int>(angle_amps.rows());
  Eigen::ArrayXXcd work = angle_amps;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_plan plan = fftw_plan_dft_2d(n, n, as_fftw(work.data()), as_fftw(work.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return work / static_cast<double>(n);
}

bool commensurate_alpha(double alpha, long max_den, double tol, long* p_out, long* q_out) {
  const double x = alpha / (2.0 * EIGEN_PI);
  // Continued-fraction convergents p_k/q_k of x; best rational
  // approximations with bounded denominator are convergents or
  // semiconvergents, so scanning both is exact.
  double frac = x;
  long p_prev = 1, q_prev = 0;
  long p_curr = static_cast<long>(std::floor(frac)), q_curr = 1;
  auto check = [&](long p, long q) {
    if (q < 1 || q > max_den) return false;
    if (std::abs(x - static_cast<double>(p) / static_cast<double>(q)) < tol) {
      if (p_out) *p_out = p;
      if (q_out) *q_out = q;
      return true;
    }
    return false;
  };
  if (check(p_curr, q_curr)) return true;

  for (int iter = 0; iter < 64 && q_curr <= max_den; ++iter) {
    const double rem = frac - std::floor(frac);
    if (rem < 1e-15) break;
    frac = 1.0 / rem;
    const long a = static_cast<long>(std::floor(frac));
    // Semiconvergents (t < a), then the next convergent (t = a).
    for (long t = 1; t <= a; ++t) {
      const long p = t * p_curr + p_prev;
      const long q = t * q_curr + q_prev;
      if (q > max_den) return false;
      if (check(p, q)) return true;
    }
    const long p_next = a * p_curr + p_prev;
    const long q_next = a * q_curr + q_prev;
    p_prev = p_curr;
    q_prev = q_curr;
    p_curr = p_next;
    q_curr = q_next;
  }
  return false;
}

namespace {

constexpr char kCheckpointMagic[8] = {'R', 'L', 'C', 'K', 'P', 'T', '0', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const QuantumState& state,
                     const WidthSeries& series, const CheckpointMeta& meta) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint32_t>(state.grid.n));
    write_pod(out, static_cast<std::int64_t>(state.kick_count));
    write_pod(out, meta.params);
    write_pod(out, meta.m0);
    write_pod(out, meta.dm);
    write_pod(out, meta.theta0);
    write_pod(out, static_cast<std::uint64_t>(series.samples.size()));
    for (const auto& s : series.samples) {
      write_pod(out, static_cast<std::int64_t>(s.t));
      write_pod(out, s.s1);
      write_pod(out, s.s2);
    }
    out.write(reinterpret_cast<const char*>(state.amps.data()),
              static_cast<std::streamsize>(sizeof(std::complex<double>) * state.amps.size()));
    if (!out) throw IoError("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("not a rotorlab checkpoint: " + path.string());
  }
  std::uint32_t version = 0;
  read_pod(in, version);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  std::uint32_t n = 0;
  read_pod(in, n);
  std::int64_t kick_count = 0;
  read_pod(in, kick_count);

  CheckpointMeta meta;
  read_pod(in, meta.params);
  meta.grid_n = static_cast<int>(n);
  read_pod(in, meta.m0);
  read_pod(in, meta.dm);
  read_pod(in, meta.theta0);

  std::uint64_t sample_count = 0;
  read_pod(in, sample_count);

  Checkpoint cp{QuantumState(GridSpec(static_cast<int>(n))), WidthSeries{}, meta};
  cp.series.params = meta.params;
  cp.series.grid = cp.state.grid;
  cp.series.samples.resize(sample_count);
  for (auto& s : cp.series.samples) {
    std::int64_t t = 0;
    read_pod(in, t);
    s.t = t;
    read_pod(in, s.s1);
    read_pod(in, s.s2);
  }
  cp.state.kick_count = kick_count;
  in.read(reinterpret_cast<char*>(cp.state.amps.data()),
          static_cast<std::streamsize>(sizeof(std::complex<double>) * cp.state.amps.size()));
  if (!in) throw IoError("truncated checkpoint " + path.string());
  return cp;
}

}  // namespace rotorlab

#include "rotorlab/scaling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "rotorlab/errors.hpp"

namespace rotorlab {

namespace {

double spread_squared(const QuantumState& state) {
  const Eigen::ArrayXd m = state.grid.momenta();
  const Eigen::ArrayXd p1 = state.amps.abs2().rowwise().sum();
  const Eigen::ArrayXd p2 = state.amps.abs2().colwise().sum();
  return (m.square() * p1).sum() + (m.square() * p2).sum();
}

double one_kick_spread(const SystemParams& params, const GridSpec& grid) {
  QuantumState state(grid);
  state.amps(0, 0) = 1.0;
  SplitStepPropagator prop(grid, params, /*leakage_threshold=*/1.0);
  prop.step(state);

  // Grid adequacy: the one-kick spread must be negligible outside |m| < n/4.
  const int quarter = grid.n / 4;
  double outside = 0.0;
  for (int k1 = 0; k1 < grid.n; ++k1) {
    const bool out1 = std::abs(grid.momentum_at(k1)) >= quarter;
    for (int k2 = 0; k2 < grid.n; ++k2) {
      if (out1 || std::abs(grid.momentum_at(k2)) >= quarter) {
        outside += std::norm(state.amps(k1, k2));
      }
    }
  }
  if (outside >= 1e-10) {
    throw GridError("mean_free_path: " + std::to_string(outside) +
                    " probability outside |m| < n/4; increase the grid");
  }
  return spread_squared(state);
}

}  // namespace

double mean_free_path(const SystemParams& params, const GridSpec& grid) {
  const double l2 = one_kick_spread(params, grid);
  const double l2_doubled = one_kick_spread(params, GridSpec(grid.n * 2));
  const double l = std::sqrt(l2);
  const double l_doubled = std::sqrt(l2_doubled);
  if (std::abs(l - l_doubled) > 1e-6 * std::max(1.0, l)) {
    throw GridError("mean_free_path: not grid-converged (l changes by " +
                    std::to_string(std::abs(l - l_doubled)) + " on doubling n)");
  }
  return l;
}

std::vector<double> scaling_recurrence(double l, double c, double a, long delta_t,
                                       int n_blocks) {
  std::vector<double> s2(static_cast<std::size_t>(n_blocks) + 1);
  s2[0] = l * l;
  for (int k = 0; k < n_blocks; ++k) {
    const double s = std::sqrt(s2[static_cast<std::size_t>(k)]);
    s2[static_cast<std::size_t>(k) + 1] =
        s2[static_cast<std::size_t>(k)] +
        static_cast<double>(delta_t) * (c * l - a * std::log(s / l));
    if (!(s2[static_cast<std::size_t>(k) + 1] > 0.0)) {
      // Recurrence collapsed; signal with NaN so the objective rejects it.
      s2[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::quiet_NaN();
      for (int j = k + 2; j <= n_blocks; ++j) {
        s2[static_cast<std::size_t>(j)] = std::numeric_limits<double>::quiet_NaN();
      }
      break;
    }
  }
  return s2;
}

namespace {

double recurrence_residual(const std::vector<double>& data_s2, double l, double c, double a,
                           long delta_t) {
  const int n_blocks = static_cast<int>(data_s2.size()) - 1;
  const std::vector<double> model = scaling_recurrence(l, c, a, delta_t, n_blocks);
  double sum = 0.0;
  for (int k = 1; k <= n_blocks; ++k) {
    const double d = model[static_cast<std::size_t>(k)] - data_s2[static_cast<std::size_t>(k)];
    if (std::isnan(d)) return std::numeric_limits<double>::infinity();
    sum += d * d;
  }
  return sum;
}

constexpr double kBoxMax = 20.0;

}  // namespace

ScalingFit fit_scaling(const WidthSeries& series, double l, long delta_t) {
  if (!(l > 0.0)) throw UsageError("fit_scaling: l must be > 0");
  if (delta_t < 1) throw UsageError("fit_scaling: delta_t must be >= 1");
  if (series.samples.empty()) throw UsageError("fit_scaling: empty series");

  const long t_max = series.samples.back().t;
  const int n_blocks = static_cast<int>(t_max / delta_t);
  if (n_blocks < 10) {
    throw UsageError("fit_scaling: series spans " + std::to_string(n_blocks) +
                     " blocks of delta_t=" + std::to_string(delta_t) + ", need >= 10");
  }

  // S^2 at block boundaries from the nearest recorded sample.
  std::vector<double> data_s2(static_cast<std::size_t>(n_blocks) + 1);
  std::size_t cursor = 0;
  for (int k = 0; k <= n_blocks; ++k) {
    const long target = static_cast<long>(k) * delta_t;
    while (cursor + 1 < series.samples.size() &&
           std::abs(series.samples[cursor + 1].t - target) <=
               std::abs(series.samples[cursor].t - target)) {
      ++cursor;
    }
    const WidthSample& s = series.samples[cursor];
    data_s2[static_cast<std::size_t>(k)] = 0.5 * (s.s1 * s.s1 + s.s2 * s.s2);
  }

  auto objective = [&](double c, double a) {
    if (c < 0.0 || a <= 0.0 || c > kBoxMax || a > kBoxMax) {
      return std::numeric_limits<double>::infinity();
    }
    return recurrence_residual(data_s2, l, c, a, delta_t);
  };

  // Coarse 100 x 100 grid over the documented box.
  double best_c = 0.0, best_a = kBoxMax / 100.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const double c = kBoxMax * i / 99.0;
    for (int j = 0; j < 100; ++j) {
      const double a = kBoxMax * (j + 1) / 100.0;
      const double r = objective(c, a);
      if (r < best) {
        best = r;
        best_c = c;
        best_a = a;
      }
    }
  }
  if (!std::isfinite(best)) {
    throw FitError("fit_scaling: no admissible (c, a) in the search box");
  }

  // Nelder-Mead on (c, a) from the best grid cell.
  struct Vertex {
    double c, a, f;
  };
  auto make = [&](double c, double a) { return Vertex{c, a, objective(c, a)}; };
  const double hc = std::max(0.02, 0.05 * std::max(best_c, 1.0));
  const double ha = std::max(0.02, 0.05 * std::max(best_a, 1.0));
  std::array<Vertex, 3> simplex = {make(best_c, best_a), make(best_c + hc, best_a),
                                   make(best_c, best_a + ha)};
  const int max_iter = 500;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& x, const Vertex& y) { return x.f < y.f; });
    const Vertex& lo = simplex[0];
    Vertex& hi = simplex[2];
    const double size = std::max(
        std::max(std::abs(simplex[1].c - lo.c) + std::abs(simplex[1].a - lo.a),
                 std::abs(hi.c - lo.c) + std::abs(hi.a - lo.a)),
        0.0);
    const double scale = std::abs(lo.c) + std::abs(lo.a) + 1e-12;
    const double f_spread = std::abs(hi.f - lo.f) / (std::abs(lo.f) + 1e-300);
    if (size / scale < 1e-6 && (f_spread < 1e-9 || hi.f == lo.f)) break;

    const double cc = 0.5 * (simplex[0].c + simplex[1].c);
    const double ca = 0.5 * (simplex[0].a + simplex[1].a);
    Vertex refl = make(cc + (cc - hi.c), ca + (ca - hi.a));
    if (refl.f < lo.f) {
      Vertex exp_ = make(cc + 2.0 * (cc - hi.c), ca + 2.0 * (ca - hi.a));
      hi = exp_.f < refl.f ? exp_ : refl;
    } else if (refl.f < simplex[1].f) {
      hi = refl;
    } else {
      Vertex contr = make(cc + 0.5 * (hi.c - cc), ca + 0.5 * (hi.a - ca));
      if (contr.f < hi.f) {
        hi = contr;
      } else {
        // Shrink toward the best vertex.
        simplex[1] = make(lo.c + 0.5 * (simplex[1].c - lo.c), lo.a + 0.5 * (simplex[1].a - lo.a));
        simplex[2] = make(lo.c + 0.5 * (simplex[2].c - lo.c), lo.a + 0.5 * (simplex[2].a - lo.a));
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(),
            [](const Vertex& x, const Vertex& y) { return x.f < y.f; });
  const double c = simplex[0].c;
  const double a = simplex[0].a;

  const double eps = 1e-6 * kBoxMax;
  if (c <= eps || a <= eps) {
    throw FitError("fit_scaling: degenerate fit (c or a vanishes; series is not in the "
                   "weak-localization regime)");
  }
  if (c >= kBoxMax - eps || a >= kBoxMax - eps) {
    throw FitError("fit_scaling: optimum sticks to the search-box boundary");
  }

  ScalingFit fit;
  fit.l = l;
  fit.c = c;
  fit.a = a;
  fit.b = c / a;
  fit.lambda_big = saturation_length(l, fit.b);
  fit.residual = simplex[0].f;
  fit.delta_t = delta_t;
  return fit;
}

std::string to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::Localized:
      return "Localized";
    case RegimeLabel::Intermediate:
      return "Intermediate";
    case RegimeLabel::QuasiDiffusive:
      return "QuasiDiffusive";
  }
  return "Unknown";
}

namespace {

// Centered moving average with edge-replicated padding; w forced odd.
Eigen::ArrayXd moving_average(const Eigen::ArrayXd& x, int w) {
  w = std::max(3, w | 1);
  const auto ns = x.size();
  const int half = w / 2;
  Eigen::ArrayXd out(ns);
  // Prefix sums over the padded sequence, evaluated lazily.
  auto padded = [&](Eigen::Index i) {
    if (i < half) return x[0];
    if (i >= half + ns) return x[ns - 1];
    return x[i - half];
  };
  double acc = 0.0;
  for (int i = 0; i < w; ++i) acc += padded(i);
  out[0] = acc / w;
  for (Eigen::Index i = 1; i < ns; ++i) {
    acc += padded(i + w - 1) - padded(i - 1);
    out[i] = acc / w;
  }
  return out;
}

double ls_slope(const Eigen::ArrayXd& t, const Eigen::ArrayXd& y) {
  const double tm = t.mean();
  const double ym = y.mean();
  const double denom = (t - tm).square().sum();
  if (denom <= 0.0) return 0.0;
  return ((t - tm) * (y - ym)).sum() / denom;
}

constexpr int kBlocks = 64;
constexpr int kSmoothBlocks = 5;
constexpr double kLateFraction = 0.30;

}  // namespace

RegimeResult classify_regime(const WidthSeries& series, double classical_d,
                             const ClassifierThresholds& thresholds) {
  const auto& samples = series.samples;
  const auto ns = static_cast<Eigen::Index>(samples.size());
  if (ns < 32) throw UsageError("classify_regime: need at least 32 samples");
  const double span = static_cast<double>(samples.back().t - samples.front().t);
  if (span < 2000.0) {
    throw UsageError("classify_regime: series must cover at least 2000 kicks");
  }

  Eigen::ArrayXd t(ns), y(ns);
  for (Eigen::Index i = 0; i < ns; ++i) {
    t[i] = static_cast<double>(samples[i].t);
    y[i] = 0.5 * (samples[i].s1 * samples[i].s1 + samples[i].s2 * samples[i].s2);
  }

  const Eigen::ArrayXd y_pre = moving_average(y, 5);
  const int w = std::max(3, static_cast<int>(ns * kSmoothBlocks / kBlocks) | 1);
  const Eigen::ArrayXd y_smooth = moving_average(y, w);
  const Eigen::ArrayXd s_smooth = y_smooth.max(0.0).sqrt();

  const double t0 = t[0];
  const double t_late = t0 + kLateFraction * span;

  // Peak one-block growth rate of S^2 in the early region.
  double peak = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < kBlocks; ++b) {
    const double lo = t0 + span * b / kBlocks;
    const double hi = t0 + span * (b + 1) / kBlocks;
    if (hi > t_late) break;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ns; ++i) {
      if (t[i] >= lo && t[i] <= hi) idx.push_back(i);
    }
    if (idx.size() < 3) continue;
    Eigen::ArrayXd tb(static_cast<Eigen::Index>(idx.size())),
        yb(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      tb[static_cast<Eigen::Index>(i)] = t[idx[i]];
      yb[static_cast<Eigen::Index>(i)] = y_pre[idx[i]];
    }
    peak = std::max(peak, ls_slope(tb, yb));
  }

  // Late window views.
  Eigen::Index late_begin = 0;
  while (late_begin < ns && t[late_begin] < t_late) ++late_begin;
  const Eigen::Index n_late = ns - late_begin;
  if (n_late < 8) throw UsageError("classify_regime: too few samples in the late window");
  const Eigen::ArrayXd t_l = t.tail(n_late);
  const Eigen::ArrayXd ysm_l = y_smooth.tail(n_late);
  const Eigen::ArrayXd ssm_l = s_smooth.tail(n_late);

  const double late_slope = ls_slope(t_l, ysm_l);
  double rho;
  if (!(peak > 0.0)) {
    // Flat early region (degenerate series): no rise to compare against.
    rho = late_slope > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    rho = late_slope / peak;
  }

  const double s_range = s_smooth.maxCoeff() - s_smooth.minCoeff();
  const double tol = 1e-3 * (s_range + 1e-300);
  Eigen::Index nondecreasing = 0;
  for (Eigen::Index i = 1; i < n_late; ++i) {
    if (ssm_l[i] - ssm_l[i - 1] >= -tol) ++nondecreasing;
  }
  const double mono = n_late > 1 ? static_cast<double>(nondecreasing) / (n_late - 1) : 1.0;

  // Quadratic detrend of smoothed S over the late window.
  Eigen::MatrixXd design(n_late, 3);
  design.col(0).setOnes();
  design.col(1) = t_l.matrix();
  design.col(2) = t_l.square().matrix();
  const Eigen::VectorXd coeffs = design.colPivHouseholderQr().solve(ssm_l.matrix());
  const Eigen::ArrayXd resid = ssm_l - (design * coeffs).array();
  const double osc = std::sqrt(resid.square().mean()) / ssm_l.mean();

  RegimeResult result;
  result.diagnostics.rho = rho;
  result.diagnostics.oscillation_index = osc;
  result.diagnostics.monotonicity_index = mono;
  result.diagnostics.early_slope_ratio =
      classical_d > 0.0 && peak > 0.0 ? peak / classical_d : 0.0;

  if (rho < thresholds.rho_localized && osc < thresholds.oscillation_max) {
    result.label = RegimeLabel::Localized;
  } else if (mono >= thresholds.monotonicity_min && rho >= thresholds.rho_diffusive &&
             rho <= 1.0 && osc < thresholds.oscillation_max) {
    result.label = RegimeLabel::QuasiDiffusive;
  } else {
    result.label = RegimeLabel::Intermediate;
  }
  return result;
}

}  // namespace rotorlab

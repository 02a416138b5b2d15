#include "rotorlab/runner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "rotorlab/classical.hpp"
#include "rotorlab/errors.hpp"
#include "rotorlab/quantum.hpp"
#include "rotorlab/scaling.hpp"

namespace rotorlab {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void run_classical_point(const RunConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  // Angle spread conjugate to the momentum packet width (minimum-uncertainty
  // pairing), so classical and quantum runs start from matching phase-space
  // distributions.
  const double dtheta = 1.0 / (2.0 * config.initial_state.dm);
  ClassicalEnsemble ensemble =
      sample_initial_ensemble(config.ensemble_n, config.seed, config.initial_state.m0,
                              config.initial_state.dm, config.initial_state.theta0, dtheta);

  std::vector<MomentStats> series;
  series.reserve(static_cast<std::size_t>(config.n_kicks / config.sample_every) + 1);
  series.push_back(ensemble_moments(ensemble));
  for (long t = 1; t <= config.n_kicks; ++t) {
    classical_step_inplace(ensemble, config.params);
    if (t % config.sample_every == 0) series.push_back(ensemble_moments(ensemble));
  }
  write_classical_widths_csv(out_dir / "classical_widths.csv", series);

  DiffusionReport report;
  report.fit_t_min = config.n_kicks / 10;
  report.fit_t_max = config.n_kicks;
  const auto [d1, d2] = fit_diffusion(series, report.fit_t_min, report.fit_t_max);
  report.d1 = d1;
  report.d2 = d2;
  const QuasiLinearCoefficients ql = quasi_linear_coefficients(config.params);
  report.d1_0 = ql.d1_0;
  report.d2_0 = ql.d2_0;
  write_diffusion_json(out_dir / "classical_diffusion.json", report);
}

namespace {

CheckpointMeta checkpoint_meta(const RunConfig& config) {
  CheckpointMeta meta;
  meta.params = config.params;
  meta.grid_n = config.grid_n;
  meta.m0 = config.initial_state.m0;
  meta.dm = config.initial_state.dm;
  meta.theta0 = config.initial_state.theta0;
  return meta;
}

bool meta_matches(const CheckpointMeta& a, const CheckpointMeta& b) {
  const SystemParams &p = a.params, &q = b.params;
  return a.grid_n == b.grid_n && a.m0 == b.m0 && a.dm == b.dm && a.theta0 == b.theta0 &&
         p.lambda1 == q.lambda1 && p.lambda2 == q.lambda2 && p.lambda3 == q.lambda3 &&
         p.lambda4 == q.lambda4 && p.alpha1 == q.alpha1 && p.alpha2 == q.alpha2;
}

void write_quantum_reports(const RunConfig& config, const fs::path& out_dir,
                           const WidthSeries& series) {
  write_quantum_widths_csv(out_dir / "quantum_widths.csv", series);

  ScalingReport report;
  report.l = mean_free_path(config.params, GridSpec(kMeanFreePathGrid));
  try {
    report.fit = fit_scaling(series, report.l, config.delta_t);
    report.has_fit = true;
  } catch (const Error& e) {
    report.fit_error = e.what();
  }
  const long span = series.samples.empty()
                        ? 0
                        : series.samples.back().t - series.samples.front().t;
  if (span >= 2000 && series.samples.size() >= 32) {
    const QuasiLinearCoefficients ql = quasi_linear_coefficients(config.params);
    report.regime =
        classify_regime(series, 0.5 * (ql.d1_0 + ql.d2_0), config.classifier);
    report.has_regime = true;
  }
  write_scaling_json(out_dir / "scaling_fit.json", report);
}

}  // namespace

void run_quantum_point(const RunConfig& config, const fs::path& out_dir, bool resume) {
  fs::create_directories(out_dir);

  long p = 0, q = 0;
  for (double alpha : {config.params.alpha1, config.params.alpha2}) {
    if (commensurate_alpha(alpha, 4096, 1e-9, &p, &q)) {
      std::cerr << "warning: alpha = " << alpha << " is commensurate with 2*pi (~" << p << "/"
                << q << "); expect extended Bloch-like states instead of localization\n";
    }
  }

  const GridSpec grid(config.grid_n);
  const fs::path checkpoint_path = out_dir / "checkpoint.bin";
  const CheckpointMeta meta = checkpoint_meta(config);

  QuantumState state(grid);
  WidthSeries series;
  bool resumed = false;
  if (resume && fs::exists(checkpoint_path)) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    if (!meta_matches(cp.meta, meta)) {
      throw ConfigError("checkpoint " + checkpoint_path.string() +
                        " belongs to a different run configuration; refusing to resume");
    }
    state = std::move(cp.state);
    series = std::move(cp.series);
    resumed = true;
  }
  if (!resumed) {
    state = build_initial_state(grid, config.initial_state.m0, config.initial_state.dm,
                                config.initial_state.theta0, config.leakage_threshold);
  }
  series.params = config.params;
  series.grid = grid;

  EvolveOptions opts;
  opts.leakage_threshold = config.leakage_threshold;
  opts.snapshot_times = config.snapshot_times;
  std::sort(opts.snapshot_times.begin(), opts.snapshot_times.end());
  opts.on_snapshot = [&](const QuantumState& s) {
    write_section_csv(out_dir / ("section_t" + std::to_string(s.kick_count) + ".csv"),
                      momentum_section(s, 0));
  };
  opts.checkpoint_every = config.checkpoint_every;
  opts.on_checkpoint = [&](const QuantumState& s, const WidthSeries& w) {
    save_checkpoint(checkpoint_path, s, w, meta);
  };
  // Snapshots already taken before the resume point must not rerun.
  if (state.kick_count > 0) {
    std::erase_if(opts.snapshot_times, [&](long t) { return t <= state.kick_count; });
  }

  const long remaining = config.n_kicks - state.kick_count;
  if (remaining > 0) {
    try {
      evolve(state, config.params, remaining, config.sample_every, series, opts);
    } catch (const LeakageError&) {
      // Keep the partial series on disk for diagnosis, then re-throw so the
      // caller records the failure.
      write_quantum_widths_csv(out_dir / "quantum_widths.csv", series);
      throw;
    }
  }
  if (config.checkpoint_every > 0) {
    save_checkpoint(checkpoint_path, state, series, meta);
  }
  write_quantum_reports(config, out_dir, series);
}

std::string point_dir_name(double lambda3, double lambda4) {
  return "l3_" + format_double(lambda3) + "_l4_" + format_double(lambda4);
}

namespace {

struct PointOutcome {
  std::string status = "ok";
  double wall_seconds = 0.0;
  bool quantum_ok = false;
};

PointOutcome run_point(const RunConfig& config, const fs::path& dir, bool resume) {
  PointOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (config.mode == RunMode::Classical || config.mode == RunMode::Both) {
      run_classical_point(config, dir);
    }
    if (config.mode == RunMode::Quantum || config.mode == RunMode::Both) {
      run_quantum_point(config, dir, resume);
      outcome.quantum_ok = true;
    }
  } catch (const std::exception& e) {
    outcome.status = e.what();
  }
  outcome.wall_seconds = seconds_since(start);
  return outcome;
}

// Reads back the per-point scaling report to fill the sweep tables.
void fill_tables(const fs::path& dir, bool quantum_ok, std::string& regime_cell,
                 std::string& l_cell, std::string& b_cell, std::string& lambda_cell) {
  regime_cell.clear();
  l_cell.clear();
  b_cell.clear();
  lambda_cell.clear();
  if (!quantum_ok) return;
  std::ifstream in(dir / "scaling_fit.json");
  if (!in) return;
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception&) {
    return;
  }
  if (doc.contains("l")) l_cell = format_double(doc["l"].get<double>());
  std::string regime = doc.value("regime", std::string());
  if (regime == "Localized") regime_cell = "L";
  if (regime == "Intermediate") regime_cell = "I";
  if (regime == "QuasiDiffusive") regime_cell = "D";
  // The recurrence parameters only mean something in the quasi-diffusive
  // regime; elsewhere the fit is not meaningful and the cell stays blank.
  if (regime == "QuasiDiffusive" && doc.contains("b")) {
    b_cell = format_double(doc["b"].get<double>());
    lambda_cell = format_double(doc["lambda_big"].get<double>());
  }
}

}  // namespace

std::vector<ManifestEntry> run(const RunConfig& config, const std::string& config_text,
                               const fs::path& output_dir, const RunnerOptions& options) {
  fs::create_directories(output_dir);
  std::vector<ManifestEntry> entries;

  if (!config.sweep) {
    const PointOutcome outcome = run_point(config, output_dir, options.resume);
    entries.push_back({"run", outcome.status, outcome.wall_seconds});
    write_manifest_json(output_dir / "manifest.json", config, config_text, entries);
    return entries;
  }

  const auto& l3s = config.sweep->lambda3_values;
  const auto& l4s = config.sweep->lambda4_values;
  const std::size_t n_points = l3s.size() * l4s.size();
  std::vector<PointOutcome> outcomes(n_points);
  std::vector<RunConfig> configs(n_points);
  std::vector<fs::path> dirs(n_points);
  for (std::size_t r = 0; r < l3s.size(); ++r) {
    for (std::size_t c = 0; c < l4s.size(); ++c) {
      const std::size_t i = r * l4s.size() + c;
      configs[i] = config;
      configs[i].sweep.reset();
      configs[i].params.lambda3 = l3s[r];
      configs[i].params.lambda4 = l4s[c];
      dirs[i] = output_dir / point_dir_name(l3s[r], l4s[c]);
    }
  }

  const int workers =
      std::max(1, std::min<int>(options.max_parallel, static_cast<int>(n_points)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_points) return;
      outcomes[i] = run_point(configs[i], dirs[i], options.resume);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SweepTable regime{"regime", l3s, l4s, {}}, l_tab{"l", l3s, l4s, {}},
      b_tab{"b", l3s, l4s, {}}, lam_tab{"lambda", l3s, l4s, {}};
  for (std::size_t r = 0; r < l3s.size(); ++r) {
    std::vector<std::string> rrow(l4s.size()), lrow(l4s.size()), brow(l4s.size()),
        lamrow(l4s.size());
    for (std::size_t c = 0; c < l4s.size(); ++c) {
      const std::size_t i = r * l4s.size() + c;
      fill_tables(dirs[i], outcomes[i].quantum_ok, rrow[c], lrow[c], brow[c], lamrow[c]);
      entries.push_back({point_dir_name(l3s[r], l4s[c]), outcomes[i].status,
                         outcomes[i].wall_seconds});
    }
    regime.cells.push_back(std::move(rrow));
    l_tab.cells.push_back(std::move(lrow));
    b_tab.cells.push_back(std::move(brow));
    lam_tab.cells.push_back(std::move(lamrow));
  }
  if (config.mode != RunMode::Classical) {
    write_sweep_table_csv(output_dir / "regime_table.csv", regime);
    write_sweep_table_csv(output_dir / "l_table.csv", l_tab);
    write_sweep_table_csv(output_dir / "b_table.csv", b_tab);
    write_sweep_table_csv(output_dir / "lambda_table.csv", lam_tab);
  }
  write_manifest_json(output_dir / "manifest.json", config, config_text, entries);
  return entries;
}

}  // namespace rotorlab

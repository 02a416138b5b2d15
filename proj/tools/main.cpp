// rotorlab command line front end.
//
// Subcommands:
//   quantum-run     evolve one quantum point and emit widths/sections/fit
//   classical-run   evolve one classical ensemble and emit widths/diffusion
//   sweep           run every (lambda3, lambda4) point and emit the tables
//   mean-free-path  print the one-kick mean free path for the parameters
//   scaling-fit     fit the log-corrected diffusion law to an existing
//                   widths CSV and print the result as JSON
//   classify        label an existing widths CSV and print the result

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "rotorlab/config.hpp"
#include "rotorlab/errors.hpp"
#include "rotorlab/output.hpp"
#include "rotorlab/runner.hpp"
#include "rotorlab/scaling.hpp"
#include "rotorlab/version.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  bool resume = false;
  int max_parallel = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool run_flags) {
  cmd->add_option("--config", args.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--output", args.output_dir, "Output directory");
  if (run_flags) {
    cmd->add_flag("--resume", args.resume, "Resume from checkpoints when present");
    cmd->add_option("--max-parallel", args.max_parallel,
                    "Concurrent sweep points (each quantum point holds a full grid "
                    "in memory)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "Override the configured RNG seed");
  }
}

/// Loads the config document, or the all-defaults config when no path was
/// given. Returns the parsed config and the raw text echoed into the
/// manifest.
std::pair<rotorlab::RunConfig, std::string> load_args_config(const CommonArgs& args) {
  if (args.config_path.empty()) {
    rotorlab::RunConfig config;
    config.validate();
    return {config, "{}"};
  }
  std::ifstream in(args.config_path, std::ios::binary);
  if (!in) throw rotorlab::IoError("cannot open config file: " + args.config_path);
  std::ostringstream text;
  text << in.rdbuf();
  return {rotorlab::parse_config(text.str()), text.str()};
}

/// Precedence: --output flag, then the config's output_dir, then
/// ROTORLAB_OUTPUT, then ./rotorlab_output.
fs::path resolve_output_dir(const CommonArgs& args, const rotorlab::RunConfig& config) {
  if (!args.output_dir.empty()) return args.output_dir;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("ROTORLAB_OUTPUT"); env != nullptr && *env != '\0')
    return env;
  return "rotorlab_output";
}

int execute_run(const CommonArgs& args, rotorlab::RunConfig config,
                const std::string& config_text) {
  if (args.seed) config.seed = *args.seed;
  const fs::path out_dir = resolve_output_dir(args, config);
  rotorlab::RunnerOptions options;
  options.resume = args.resume;
  options.max_parallel = args.max_parallel;
  const auto entries = rotorlab::run(config, config_text, out_dir, options);
  int failures = 0;
  for (const auto& entry : entries) {
    if (entry.status == "ok") continue;
    ++failures;
    std::cerr << entry.name << ": " << entry.status << "\n";
  }
  std::cout << "artifacts written to " << out_dir.string() << "\n";
  if (failures > 0) {
    std::cerr << failures << " of " << entries.size() << " runs failed\n";
    return 1;
  }
  return 0;
}

int cmd_single_run(const CommonArgs& args, rotorlab::RunMode mode) {
  auto [config, text] = load_args_config(args);
  config.mode = mode;
  config.sweep.reset();
  return execute_run(args, std::move(config), text);
}

int cmd_sweep(const CommonArgs& args) {
  auto [config, text] = load_args_config(args);
  if (!config.sweep)
    throw rotorlab::ConfigError("config: sweep: required for the sweep subcommand");
  return execute_run(args, std::move(config), text);
}

int cmd_mean_free_path(const CommonArgs& args, int grid_n) {
  auto [config, text] = load_args_config(args);
  const double l =
      rotorlab::mean_free_path(config.params, rotorlab::GridSpec(grid_n));
  std::cout << rotorlab::format_double(l) << "\n";
  return 0;
}

int cmd_scaling_fit(const CommonArgs& args, const std::string& csv_path,
                    std::optional<double> l_override, std::optional<long> delta_t) {
  auto [config, text] = load_args_config(args);
  const auto series = rotorlab::read_widths_csv(csv_path);
  const double l = l_override ? *l_override
                              : rotorlab::mean_free_path(
                                    config.params,
                                    rotorlab::GridSpec(rotorlab::kMeanFreePathGrid));
  const long dt = delta_t ? *delta_t : config.delta_t;
  const rotorlab::ScalingFit fit = rotorlab::fit_scaling(series, l, dt);
  nlohmann::json doc;
  doc["l"] = fit.l;
  doc["c"] = fit.c;
  doc["a"] = fit.a;
  doc["b"] = fit.b;
  doc["lambda_big"] = fit.lambda_big;
  doc["residual"] = fit.residual;
  doc["delta_t"] = fit.delta_t;
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_classify(const CommonArgs& args, const std::string& csv_path,
                 double classical_d) {
  auto [config, text] = load_args_config(args);
  const auto series = rotorlab::read_widths_csv(csv_path);
  const rotorlab::RegimeResult result =
      rotorlab::classify_regime(series, classical_d, config.classifier);
  nlohmann::json doc;
  doc["regime"] = rotorlab::to_string(result.label);
  doc["diagnostics"]["rho"] = result.diagnostics.rho;
  doc["diagnostics"]["oscillation_index"] = result.diagnostics.oscillation_index;
  doc["diagnostics"]["monotonicity_index"] = result.diagnostics.monotonicity_index;
  doc["diagnostics"]["early_slope_ratio"] = result.diagnostics.early_slope_ratio;
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotorlab: coupled kicked rotor simulation laboratory"};
  app.set_version_flag("--version", std::string("rotorlab ") + rotorlab::kVersion);
  app.require_subcommand(1);

  CommonArgs quantum_args;
  CLI::App* quantum = app.add_subcommand("quantum-run", "Evolve one quantum point");
  add_common(quantum, quantum_args, true);

  CommonArgs classical_args;
  CLI::App* classical =
      app.add_subcommand("classical-run", "Evolve one classical ensemble");
  add_common(classical, classical_args, true);

  CommonArgs sweep_args;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Run every coupling point in the configured sweep");
  add_common(sweep, sweep_args, true);

  CommonArgs mfp_args;
  int mfp_grid = rotorlab::kMeanFreePathGrid;
  CLI::App* mfp = app.add_subcommand(
      "mean-free-path", "Print the one-kick mean free path for the parameters");
  add_common(mfp, mfp_args, false);
  mfp->add_option("--grid", mfp_grid, "Evaluation grid size (power of two)")
      ->check(CLI::PositiveNumber);

  CommonArgs fit_args;
  std::string fit_csv;
  std::optional<double> fit_l;
  std::optional<long> fit_delta_t;
  CLI::App* fit =
      app.add_subcommand("scaling-fit", "Fit the diffusion law to a widths CSV");
  add_common(fit, fit_args, false);
  fit->add_option("csv", fit_csv, "quantum_widths.csv to fit")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--l", fit_l, "Mean free path (default: computed from the config)");
  fit->add_option("--delta-t", fit_delta_t, "Block size in kicks")
      ->check(CLI::PositiveNumber);

  CommonArgs classify_args;
  std::string classify_csv;
  double classify_d = 0.0;
  CLI::App* classify = app.add_subcommand("classify", "Label a widths CSV");
  add_common(classify, classify_args, false);
  classify->add_option("csv", classify_csv, "quantum_widths.csv to label")
      ->required()
      ->check(CLI::ExistingFile);
  classify->add_option("--classical-d", classify_d,
                       "Classical diffusion rate (diagnostics only)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (quantum->parsed()) return cmd_single_run(quantum_args, rotorlab::RunMode::Quantum);
    if (classical->parsed())
      return cmd_single_run(classical_args, rotorlab::RunMode::Classical);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
    if (mfp->parsed()) return cmd_mean_free_path(mfp_args, mfp_grid);
    if (fit->parsed()) return cmd_scaling_fit(fit_args, fit_csv, fit_l, fit_delta_t);
    if (classify->parsed()) return cmd_classify(classify_args, classify_csv, classify_d);
  } catch (const rotorlab::ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const rotorlab::UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const rotorlab::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}

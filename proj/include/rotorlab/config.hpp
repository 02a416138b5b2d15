#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rotorlab/model.hpp"
#include "rotorlab/scaling.hpp"

namespace rotorlab {

enum class RunMode { Classical, Quantum, Both };

std::string to_string(RunMode mode);

struct SweepSpec {
  std::vector<double> lambda3_values;
  std::vector<double> lambda4_values;
};

struct InitialStateSpec {
  double m0 = 0.0;
  double dm = 1.25786;
  double theta0 = 0.0;
};

/// Fully validated run description. Defaults are the full-scale values;
/// every field can be set from the JSON config document.
struct RunConfig {
  SystemParams params;
  int grid_n = 2048;
  long n_kicks = 30000;
  long sample_every = 10;
  long ensemble_n = 1000000;
  std::uint64_t seed = 12345;
  long delta_t = 300;
  long checkpoint_every = 1000;
  std::vector<long> snapshot_times = {1000, 5000, 30000};
  RunMode mode = RunMode::Quantum;
  std::optional<SweepSpec> sweep;
  std::string output_dir;
  InitialStateSpec initial_state;
  ClassifierThresholds classifier;
  double leakage_threshold = 1e-8;

  void validate() const;
};

/// Parses and validates a JSON config document. Unknown keys, type
/// mismatches and invariant violations raise ConfigError naming the
/// offending field path.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace rotorlab

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rotorlab/config.hpp"
#include "rotorlab/output.hpp"

namespace rotorlab {

struct RunnerOptions {
  bool resume = false;
  int max_parallel = 1;
};

/// Executes the classical pipeline for one parameter point: evolves the
/// ensemble, writes classical_widths.csv and classical_diffusion.json
/// into out_dir.
void run_classical_point(const RunConfig& config, const std::filesystem::path& out_dir);

/// Executes the quantum pipeline for one parameter point: evolves the
/// wavefunction (with optional checkpoint resume), writes
/// quantum_widths.csv, section_t<T>.csv snapshots, and scaling_fit.json.
/// Throws LeakageError when the run is invalidated; artifacts produced up
/// to that kick are kept on disk.
void run_quantum_point(const RunConfig& config, const std::filesystem::path& out_dir,
                       bool resume);

/// Runs the config's mode (single point or sweep) under output_dir and
/// writes manifest.json. Per-point failures in a sweep are recorded and
/// do not abort the remaining points. Returns the manifest entries.
std::vector<ManifestEntry> run(const RunConfig& config, const std::string& config_text,
                               const std::filesystem::path& output_dir,
                               const RunnerOptions& options = {});

/// Directory name for one sweep point, stable across runs.
std::string point_dir_name(double lambda3, double lambda4);

/// Grid size used to evaluate the one-kick mean free path (the spread is
/// converged far below this size; kept fixed so results do not depend on
/// the evolution grid).
inline constexpr int kMeanFreePathGrid = 512;

}  // namespace rotorlab

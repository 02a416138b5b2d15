#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rotorlab/classical.hpp"
#include "rotorlab/config.hpp"
#include "rotorlab/quantum.hpp"
#include "rotorlab/scaling.hpp"

namespace rotorlab {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

void write_quantum_widths_csv(const std::filesystem::path& path, const WidthSeries& series);

/// Reads a CSV with columns t, s1, s2 (header required) back into a series.
WidthSeries read_widths_csv(const std::filesystem::path& path);

void write_classical_widths_csv(const std::filesystem::path& path,
                                const std::vector<MomentStats>& series);

void write_section_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<int, double>>& section);

struct DiffusionReport {
  double d1 = 0.0;
  double d2 = 0.0;
  double d1_0 = 0.0;
  double d2_0 = 0.0;
  long fit_t_min = 0;
  long fit_t_max = 0;
};

void write_diffusion_json(const std::filesystem::path& path, const DiffusionReport& report);

/// scaling_fit.json contents; the fit block is absent when the fit failed
/// (expected for non-quasi-diffusive series) and `fit_error` carries the
/// reason instead.
struct ScalingReport {
  double l = 0.0;
  bool has_fit = false;
  ScalingFit fit;
  std::string fit_error;
  bool has_regime = false;
  RegimeResult regime;
};

void write_scaling_json(const std::filesystem::path& path, const ScalingReport& report);

/// Sweep tables in rows-lambda3 x columns-lambda4 layout. Cells hold
/// preformatted strings; empty cells stay empty (non-quasi-diffusive
/// points in the l/b/lambda tables).
struct SweepTable {
  std::string value_name;
  std::vector<double> lambda3_values;
  std::vector<double> lambda4_values;
  std::vector<std::vector<std::string>> cells;  // [row][col]
};

void write_sweep_table_csv(const std::filesystem::path& path, const SweepTable& table);

struct ManifestEntry {
  std::string name;
  std::string status;  // "ok" or the failure diagnostic
  double wall_seconds = 0.0;
};

void write_manifest_json(const std::filesystem::path& path, const RunConfig& config,
                         const std::string& config_text,
                         const std::vector<ManifestEntry>& entries);

}  // namespace rotorlab

#include "rotorlab/output.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

#include "rotorlab/errors.hpp"
#include "rotorlab/version.hpp"

namespace rotorlab {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_quantum_widths_csv(const std::filesystem::path& path, const WidthSeries& series) {
  auto out = open_out(path);
  out << "t,s1,s2\n";
  for (const auto& s : series.samples) {
    out << s.t << ',' << format_double(s.s1) << ',' << format_double(s.s2) << '\n';
  }
  finish(out, path);
}

WidthSeries read_widths_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty widths file " + path.string());
  if (line.rfind("t,s1,s2", 0) != 0) {
    throw IoError(path.string() + ": expected header t,s1,s2");
  }
  WidthSeries series;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    WidthSample sample;
    try {
      if (!std::getline(row, field, ',')) throw std::invalid_argument("t");
      sample.t = std::stol(field);
      if (!std::getline(row, field, ',')) throw std::invalid_argument("s1");
      sample.s1 = std::stod(field);
      if (!std::getline(row, field, ',')) throw std::invalid_argument("s2");
      sample.s2 = std::stod(field);
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (!series.samples.empty() && sample.t <= series.samples.back().t) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": t must be strictly increasing");
    }
    series.samples.push_back(sample);
  }
  return series;
}

void write_classical_widths_csv(const std::filesystem::path& path,
                                const std::vector<MomentStats>& series) {
  auto out = open_out(path);
  out << "t,var_p1,var_p2,mean_p1,mean_p2\n";
  for (const auto& s : series) {
    out << s.t << ',' << format_double(s.var_p1) << ',' << format_double(s.var_p2) << ','
        << format_double(s.mean_p1) << ',' << format_double(s.mean_p2) << '\n';
  }
  finish(out, path);
}

void write_section_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<int, double>>& section) {
  auto out = open_out(path);
  out << "m1,probability\n";
  for (const auto& [m1, p] : section) {
    out << m1 << ',' << format_double(p) << '\n';
  }
  finish(out, path);
}

namespace {

using nlohmann::json;

json diagnostics_json(const RegimeResult& regime) {
  return json{{"rho", regime.diagnostics.rho},
              {"oscillation_index", regime.diagnostics.oscillation_index},
              {"monotonicity_index", regime.diagnostics.monotonicity_index},
              {"early_slope_ratio", regime.diagnostics.early_slope_ratio}};
}

void dump(const std::filesystem::path& path, const json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

}  // namespace

void write_diffusion_json(const std::filesystem::path& path, const DiffusionReport& report) {
  dump(path, json{{"d1", report.d1},
                  {"d2", report.d2},
                  {"d1_0", report.d1_0},
                  {"d2_0", report.d2_0},
                  {"ratio1", report.d1_0 > 0 ? report.d1 / report.d1_0 : 0.0},
                  {"ratio2", report.d2_0 > 0 ? report.d2 / report.d2_0 : 0.0},
                  {"fit_t_min", report.fit_t_min},
                  {"fit_t_max", report.fit_t_max}});
}

void write_scaling_json(const std::filesystem::path& path, const ScalingReport& report) {
  json doc{{"l", report.l}};
  if (report.has_fit) {
    doc["c"] = report.fit.c;
    doc["a"] = report.fit.a;
    doc["b"] = report.fit.b;
    doc["lambda_big"] = report.fit.lambda_big;
    doc["residual"] = report.fit.residual;
    doc["delta_t"] = report.fit.delta_t;
  } else if (!report.fit_error.empty()) {
    doc["fit_error"] = report.fit_error;
  }
  if (report.has_regime) {
    doc["regime"] = to_string(report.regime.label);
    doc["diagnostics"] = diagnostics_json(report.regime);
  }
  dump(path, doc);
}

void write_sweep_table_csv(const std::filesystem::path& path, const SweepTable& table) {
  auto out = open_out(path);
  out << table.value_name;
  for (double l4 : table.lambda4_values) out << ',' << format_double(l4);
  out << '\n';
  for (std::size_t r = 0; r < table.lambda3_values.size(); ++r) {
    out << format_double(table.lambda3_values[r]);
    for (std::size_t c = 0; c < table.lambda4_values.size(); ++c) {
      out << ',' << table.cells.at(r).at(c);
    }
    out << '\n';
  }
  finish(out, path);
}

void write_manifest_json(const std::filesystem::path& path, const RunConfig& config,
                         const std::string& config_text,
                         const std::vector<ManifestEntry>& entries) {
  json runs = json::array();
  for (const auto& e : entries) {
    runs.push_back(json{{"name", e.name},
                        {"status", e.status},
                        {"wall_seconds", e.wall_seconds}});
  }
  json doc{{"version", kVersion},
           {"seed", config.seed},
           {"mode", to_string(config.mode)},
           {"grid_n", config.grid_n},
           {"n_kicks", config.n_kicks},
           {"config", config_text.empty() ? json::object() : json::parse(config_text)},
           {"runs", runs}};
  dump(path, doc);
}

}  // namespace rotorlab

#include "rotorlab/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "rotorlab/errors.hpp"
#include "rotorlab/grid.hpp"

namespace rotorlab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + ": " + what);
}

void expect_keys(const json& obj, const std::string& path,
                 const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      fail(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + key, "expected a number");
  return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const std::string& key,
                 long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + key, "expected an integer");
  return v.get<long>();
}

std::vector<double> get_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& item : v) {
    if (!item.is_number()) fail(path, "expected an array of numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

}  // namespace

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Classical:
      return "classical";
    case RunMode::Quantum:
      return "quantum";
    case RunMode::Both:
      return "both";
  }
  return "unknown";
}

void RunConfig::validate() const {
  params.validate();
  GridSpec(grid_n).validate();  // power-of-two check
  if (n_kicks < 1) throw ConfigError("config: n_kicks: must be >= 1");
  if (sample_every < 1) throw ConfigError("config: sample_every: must be >= 1");
  if (delta_t < 1) throw ConfigError("config: delta_t: must be >= 1");
  if (delta_t % sample_every != 0) {
    throw ConfigError("config: sample_every: must divide delta_t (" +
                      std::to_string(sample_every) + " does not divide " +
                      std::to_string(delta_t) + ")");
  }
  if (ensemble_n < 2) throw ConfigError("config: ensemble_n: must be >= 2");
  if (checkpoint_every < 0) throw ConfigError("config: checkpoint_every: must be >= 0");
  for (long t : snapshot_times) {
    if (t < 0) throw ConfigError("config: snapshot_times: must be >= 0");
  }
  if (sweep) {
    if (sweep->lambda3_values.empty() || sweep->lambda4_values.empty()) {
      throw ConfigError("config: sweep: lambda3_values and lambda4_values must be nonempty");
    }
    for (double v : sweep->lambda3_values) {
      if (v < 0) throw ConfigError("config: sweep.lambda3_values: must be >= 0");
    }
    for (double v : sweep->lambda4_values) {
      if (v < 0) throw ConfigError("config: sweep.lambda4_values: must be >= 0");
    }
  }
  if (!(initial_state.dm > 0)) throw ConfigError("config: initial_state.dm: must be > 0");
  if (!(leakage_threshold > 0)) {
    throw ConfigError("config: leakage_threshold: must be > 0");
  }
  if (!(classifier.rho_localized > 0) || !(classifier.rho_diffusive > 0) ||
      !(classifier.oscillation_max > 0) || !(classifier.monotonicity_min > 0)) {
    throw ConfigError("config: classifier: thresholds must be > 0");
  }
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  expect_keys(doc, "",
              {"params", "grid_n", "n_kicks", "sample_every", "ensemble_n", "seed", "delta_t",
               "checkpoint_every", "snapshot_times", "mode", "sweep", "output_dir",
               "initial_state", "classifier", "leakage_threshold"});

  RunConfig cfg;

  if (doc.contains("params")) {
    const json& p = doc.at("params");
    if (!p.is_object()) throw ConfigError("config: params: expected an object");
    expect_keys(p, "params", {"lambda1", "lambda2", "lambda3", "lambda4", "alpha1", "alpha2"});
    cfg.params.lambda1 = get_number(p, "params.", "lambda1", cfg.params.lambda1);
    cfg.params.lambda2 = get_number(p, "params.", "lambda2", cfg.params.lambda2);
    cfg.params.lambda3 = get_number(p, "params.", "lambda3", cfg.params.lambda3);
    cfg.params.lambda4 = get_number(p, "params.", "lambda4", cfg.params.lambda4);
    cfg.params.alpha1 = get_number(p, "params.", "alpha1", cfg.params.alpha1);
    cfg.params.alpha2 = get_number(p, "params.", "alpha2", cfg.params.alpha2);
  }

  cfg.grid_n = static_cast<int>(get_integer(doc, "", "grid_n", cfg.grid_n));
  cfg.n_kicks = get_integer(doc, "", "n_kicks", cfg.n_kicks);
  cfg.sample_every = get_integer(doc, "", "sample_every", cfg.sample_every);
  cfg.ensemble_n = get_integer(doc, "", "ensemble_n", cfg.ensemble_n);
  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_integer()) throw ConfigError("config: seed: expected an integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.delta_t = get_integer(doc, "", "delta_t", cfg.delta_t);
  cfg.checkpoint_every = get_integer(doc, "", "checkpoint_every", cfg.checkpoint_every);

  if (doc.contains("snapshot_times")) {
    const json& v = doc.at("snapshot_times");
    if (!v.is_array()) throw ConfigError("config: snapshot_times: expected an array");
    cfg.snapshot_times.clear();
    for (const auto& item : v) {
      if (!item.is_number_integer()) {
        throw ConfigError("config: snapshot_times: expected integers");
      }
      cfg.snapshot_times.push_back(item.get<long>());
    }
  }

  if (doc.contains("mode")) {
    const json& v = doc.at("mode");
    if (!v.is_string()) throw ConfigError("config: mode: expected a string");
    const std::string s = v.get<std::string>();
    if (s == "classical") {
      cfg.mode = RunMode::Classical;
    } else if (s == "quantum") {
      cfg.mode = RunMode::Quantum;
    } else if (s == "both") {
      cfg.mode = RunMode::Both;
    } else {
      throw ConfigError("config: mode: must be one of classical, quantum, both");
    }
  }

  if (doc.contains("sweep")) {
    const json& v = doc.at("sweep");
    if (!v.is_object()) throw ConfigError("config: sweep: expected an object");
    expect_keys(v, "sweep", {"lambda3_values", "lambda4_values"});
    SweepSpec sweep;
    if (v.contains("lambda3_values")) {
      sweep.lambda3_values = get_number_list(v.at("lambda3_values"), "sweep.lambda3_values");
    }
    if (v.contains("lambda4_values")) {
      sweep.lambda4_values = get_number_list(v.at("lambda4_values"), "sweep.lambda4_values");
    }
    cfg.sweep = std::move(sweep);
  }

  if (doc.contains("output_dir")) {
    const json& v = doc.at("output_dir");
    if (!v.is_string()) throw ConfigError("config: output_dir: expected a string");
    cfg.output_dir = v.get<std::string>();
  }

  if (doc.contains("initial_state")) {
    const json& v = doc.at("initial_state");
    if (!v.is_object()) throw ConfigError("config: initial_state: expected an object");
    expect_keys(v, "initial_state", {"m0", "dm", "theta0"});
    cfg.initial_state.m0 = get_number(v, "initial_state.", "m0", cfg.initial_state.m0);
    cfg.initial_state.dm = get_number(v, "initial_state.", "dm", cfg.initial_state.dm);
    cfg.initial_state.theta0 =
        get_number(v, "initial_state.", "theta0", cfg.initial_state.theta0);
  }

  if (doc.contains("classifier")) {
    const json& v = doc.at("classifier");
    if (!v.is_object()) throw ConfigError("config: classifier: expected an object");
    expect_keys(v, "classifier",
                {"rho_localized", "rho_diffusive", "oscillation_max", "monotonicity_min"});
    cfg.classifier.rho_localized =
        get_number(v, "classifier.", "rho_localized", cfg.classifier.rho_localized);
    cfg.classifier.rho_diffusive =
        get_number(v, "classifier.", "rho_diffusive", cfg.classifier.rho_diffusive);
    cfg.classifier.oscillation_max =
        get_number(v, "classifier.", "oscillation_max", cfg.classifier.oscillation_max);
    cfg.classifier.monotonicity_min =
        get_number(v, "classifier.", "monotonicity_min", cfg.classifier.monotonicity_min);
  }

  cfg.leakage_threshold = get_number(doc, "", "leakage_threshold", cfg.leakage_threshold);

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace rotorlab

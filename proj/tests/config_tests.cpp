#include <doctest.h>

#include <string>

#include "rotorlab/config.hpp"
#include "rotorlab/errors.hpp"

using namespace rotorlab;

namespace {

std::string thrown_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& err) {
    return err.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty document yields the full-scale defaults") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.grid_n == 2048);
  CHECK(cfg.n_kicks == 30000);
  CHECK(cfg.sample_every == 10);
  CHECK(cfg.delta_t == 300);
  CHECK(cfg.ensemble_n == 1000000);
  CHECK(cfg.checkpoint_every == 1000);
  CHECK(cfg.seed == 12345);
  CHECK(cfg.mode == RunMode::Quantum);
  CHECK(cfg.params.lambda1 == 0.0);
  CHECK(cfg.params.lambda4 == 0.0);
  CHECK(cfg.params.alpha1 == 1.0);
  CHECK(cfg.params.alpha2 == 1.0);
  CHECK(cfg.initial_state.m0 == 0.0);
  CHECK(cfg.initial_state.dm == doctest::Approx(1.25786));
  CHECK(cfg.initial_state.theta0 == 0.0);
  CHECK(cfg.leakage_threshold == 1e-8);
  CHECK(cfg.snapshot_times == std::vector<long>{1000, 5000, 30000});
  CHECK(!cfg.sweep.has_value());
  CHECK(cfg.output_dir.empty());
  CHECK(cfg.classifier.rho_localized == 0.05);
  CHECK(cfg.classifier.rho_diffusive == 0.15);
}

TEST_CASE("all fields parse and validate") {
  const auto cfg = parse_config(R"({
    "params": {"lambda1": 0.5, "lambda2": 0.5, "lambda3": 3.0, "lambda4": 3.0,
               "alpha1": 1.0, "alpha2": 1.0},
    "grid_n": 512,
    "n_kicks": 5000,
    "sample_every": 5,
    "ensemble_n": 100000,
    "seed": 99,
    "delta_t": 250,
    "checkpoint_every": 500,
    "snapshot_times": [1000, 2000, 5000],
    "mode": "both",
    "sweep": {"lambda3_values": [0.0, 0.5], "lambda4_values": [1.0, 1.5, 2.0]},
    "output_dir": "/tmp/somewhere",
    "initial_state": {"m0": 2.0, "dm": 1.5, "theta0": 0.25},
    "classifier": {"rho_localized": 0.04, "rho_diffusive": 0.2,
                   "oscillation_max": 0.12, "monotonicity_min": 0.9},
    "leakage_threshold": 1e-4
  })");
  CHECK(cfg.grid_n == 512);
  CHECK(cfg.n_kicks == 5000);
  CHECK(cfg.seed == 99);
  CHECK(cfg.mode == RunMode::Both);
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->lambda3_values.size() == 2);
  CHECK(cfg.sweep->lambda4_values.size() == 3);
  CHECK(cfg.output_dir == "/tmp/somewhere");
  CHECK(cfg.initial_state.theta0 == 0.25);
  CHECK(cfg.classifier.oscillation_max == 0.12);
  CHECK(cfg.leakage_threshold == 1e-4);
  CHECK(cfg.params.lambda3 == 3.0);
}

TEST_CASE("49-point coupling sweep parses") {
  const auto cfg = parse_config(R"({
    "params": {"lambda1": 0.5, "lambda2": 0.5},
    "sweep": {"lambda3_values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
              "lambda4_values": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]}
  })");
  REQUIRE(cfg.sweep.has_value());
  CHECK(cfg.sweep->lambda3_values.size() * cfg.sweep->lambda4_values.size() == 49);
}

TEST_CASE("unknown keys are rejected with their field path") {
  CHECK(thrown_message(R"({"grid_m": 512})").find("grid_m") != std::string::npos);
  const auto nested = thrown_message(R"({"params": {"lambda9": 1.0}})");
  CHECK(nested.find("params.lambda9") != std::string::npos);
  CHECK(thrown_message(R"({"sweep": {"lambda5_values": []}})").find("sweep.lambda5_values") !=
        std::string::npos);
}

TEST_CASE("type mismatches name the offending field") {
  CHECK(thrown_message(R"({"grid_n": "big"})").find("grid_n") != std::string::npos);
  CHECK(thrown_message(R"({"n_kicks": 1.5})").find("n_kicks") != std::string::npos);
  CHECK(thrown_message(R"({"mode": "fast"})").find("mode") != std::string::npos);
  CHECK(thrown_message(R"({"params": {"lambda1": "x"}})").find("params.lambda1") !=
        std::string::npos);
  CHECK(thrown_message(R"({"snapshot_times": [1.5]})").find("snapshot_times") !=
        std::string::npos);
}

TEST_CASE("invariant violations are rejected") {
  // sampling stride must divide the block size
  CHECK_THROWS_AS(parse_config(R"({"sample_every": 7, "delta_t": 300})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"grid_n": 1000})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"ensemble_n": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n_kicks": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"snapshot_times": [-5]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"lambda3_values": [1.0]}})"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"sweep": {"lambda3_values": [1.0], "lambda4_values": [-1.0]}})"),
      ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"initial_state": {"dm": 0.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"leakage_threshold": 0.0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"params": {"lambda1": -0.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"params": {"alpha1": 0.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
}

TEST_CASE("missing config files raise an io error") {
  CHECK_THROWS_AS(load_config("/nonexistent/rotorlab.json"), IoError);
}

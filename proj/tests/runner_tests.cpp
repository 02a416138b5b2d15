#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "rotorlab/config.hpp"
#include "rotorlab/errors.hpp"
#include "rotorlab/runner.hpp"

using namespace rotorlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "rotorlab_runner_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing file ", path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

// Small enough to finish in milliseconds; leakage checks disabled because
// a 32/64-point grid is saturated by design in these tests.
RunConfig small_quantum_config() {
  RunConfig cfg;
  cfg.params = {0.5, 0.5, 1.0, 1.0, 1.0, 1.0};
  cfg.grid_n = 64;
  cfg.n_kicks = 50;
  cfg.sample_every = 10;
  cfg.checkpoint_every = 0;
  cfg.snapshot_times = {20};
  cfg.mode = RunMode::Quantum;
  cfg.leakage_threshold = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("sweep point directories have stable names") {
  CHECK(point_dir_name(0.5, 1.0) == "l3_0.5_l4_1");
  CHECK(point_dir_name(2.0, 2.5) == "l3_2_l4_2.5");
  CHECK(point_dir_name(0.0, 3.0) == "l3_0_l4_3");
}

TEST_CASE("classical point writes widths and a diffusion report") {
  const auto dir = fresh_dir("classical_point");
  RunConfig cfg;
  cfg.params = {0.5, 0.5, 2.0, 2.5, 1.0, 1.0};
  cfg.ensemble_n = 1000;
  cfg.n_kicks = 100;
  cfg.sample_every = 2;
  cfg.mode = RunMode::Classical;
  run_classical_point(cfg, dir);

  const auto widths = slurp(dir / "classical_widths.csv");
  CHECK(widths.rfind("t,var_p1,var_p2", 0) == 0);
  CHECK(count_lines(widths) == 52);  // header + t = 0, 2, ..., 100

  const auto doc = nlohmann::json::parse(slurp(dir / "classical_diffusion.json"));
  CHECK(doc["d1_0"].get<double>() == doctest::Approx(6.75));
  CHECK(doc["ratio1"].get<double>() ==
        doctest::Approx(doc["d1"].get<double>() / 6.75));
  CHECK(doc["fit_t_min"].get<long>() == 10);
  CHECK(doc["fit_t_max"].get<long>() == 100);
}

TEST_CASE("quantum point writes widths, sections and the scaling report") {
  const auto dir = fresh_dir("quantum_point");
  const auto cfg = small_quantum_config();
  run_quantum_point(cfg, dir, false);

  const auto widths = slurp(dir / "quantum_widths.csv");
  CHECK(count_lines(widths) == 7);  // header + t = 0, 10, ..., 50
  CHECK(fs::exists(dir / "section_t20.csv"));
  CHECK(slurp(dir / "section_t20.csv").rfind("m1,probability", 0) == 0);

  // 50 kicks cannot cover ten 300-kick blocks, so the fit must report a
  // failure while the mean free path is still present; the series is also
  // far too short for a regime label.
  const auto doc = nlohmann::json::parse(slurp(dir / "scaling_fit.json"));
  CHECK(doc["l"].get<double>() > 0.0);
  CHECK(doc.contains("fit_error"));
  CHECK(!doc.contains("c"));
  CHECK(!doc.contains("regime"));
}

TEST_CASE("quantum evolution is deterministic for a fixed config") {
  const auto dir_a = fresh_dir("det_a");
  const auto dir_b = fresh_dir("det_b");
  const auto cfg = small_quantum_config();
  run_quantum_point(cfg, dir_a, false);
  run_quantum_point(cfg, dir_b, false);
  CHECK(slurp(dir_a / "quantum_widths.csv") == slurp(dir_b / "quantum_widths.csv"));
  CHECK(slurp(dir_a / "section_t20.csv") == slurp(dir_b / "section_t20.csv"));
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
  const auto dir_full = fresh_dir("resume_full");
  const auto dir_split = fresh_dir("resume_split");

  auto cfg = small_quantum_config();
  cfg.n_kicks = 100;
  cfg.checkpoint_every = 40;
  cfg.snapshot_times = {50};
  run_quantum_point(cfg, dir_full, false);

  auto partial = cfg;
  partial.n_kicks = 60;
  run_quantum_point(partial, dir_split, false);
  REQUIRE(fs::exists(dir_split / "checkpoint.bin"));
  run_quantum_point(cfg, dir_split, true);

  CHECK(slurp(dir_full / "quantum_widths.csv") == slurp(dir_split / "quantum_widths.csv"));
  CHECK(slurp(dir_full / "section_t50.csv") == slurp(dir_split / "section_t50.csv"));
  CHECK(count_lines(slurp(dir_split / "quantum_widths.csv")) == 12);
}

TEST_CASE("resume refuses a checkpoint from different parameters") {
  const auto dir = fresh_dir("resume_mismatch");
  auto cfg = small_quantum_config();
  cfg.checkpoint_every = 20;
  run_quantum_point(cfg, dir, false);

  auto other = cfg;
  other.params.lambda3 = 2.0;
  CHECK_THROWS_AS(run_quantum_point(other, dir, true), ConfigError);
}

TEST_CASE("sweep output does not depend on the worker count") {
  auto cfg = small_quantum_config();
  cfg.grid_n = 32;
  cfg.n_kicks = 100;
  cfg.sample_every = 2;
  cfg.ensemble_n = 400;
  cfg.mode = RunMode::Both;
  cfg.snapshot_times = {};
  cfg.sweep = SweepSpec{{0.0, 0.5}, {1.0, 2.0}};

  const auto dir_serial = fresh_dir("sweep_serial");
  const auto dir_parallel = fresh_dir("sweep_parallel");
  const auto entries_serial = run(cfg, "", dir_serial, {false, 1});
  const auto entries_parallel = run(cfg, "", dir_parallel, {false, 4});

  REQUIRE(entries_serial.size() == 4);
  REQUIRE(entries_parallel.size() == 4);
  for (const auto& e : entries_serial) CHECK(e.status == "ok");

  for (double l3 : {0.0, 0.5}) {
    for (double l4 : {1.0, 2.0}) {
      const auto name = point_dir_name(l3, l4);
      CHECK(slurp(dir_serial / name / "quantum_widths.csv") ==
            slurp(dir_parallel / name / "quantum_widths.csv"));
      CHECK(slurp(dir_serial / name / "classical_widths.csv") ==
            slurp(dir_parallel / name / "classical_widths.csv"));
    }
  }
  for (const char* table :
       {"regime_table.csv", "l_table.csv", "b_table.csv", "lambda_table.csv"}) {
    CHECK(slurp(dir_serial / table) == slurp(dir_parallel / table));
  }

  // 100 kicks is far below the regime classifier's minimum span, so the
  // regime table must be all blanks while l is filled in everywhere.
  const auto regime = slurp(dir_serial / "regime_table.csv");
  CHECK(regime == "regime,1,2\n0,,\n0.5,,\n");
  const auto l_table = slurp(dir_serial / "l_table.csv");
  CHECK(l_table.rfind("l,1,2\n", 0) == 0);
  CHECK(l_table.find(",,") == std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(dir_serial / "manifest.json"));
  CHECK(manifest["runs"].size() == 4);
  CHECK(manifest["config"].is_object());
}

TEST_CASE("leakage aborts the point but keeps the partial series") {
  const auto dir = fresh_dir("leakage");
  RunConfig cfg;
  cfg.params = {0.5, 0.5, 3.0, 3.0, 1.0, 1.0};
  cfg.grid_n = 32;
  cfg.n_kicks = 200;
  cfg.sample_every = 1;
  cfg.checkpoint_every = 0;
  cfg.snapshot_times = {};
  cfg.mode = RunMode::Quantum;
  cfg.leakage_threshold = 1e-6;

  const auto entries = run(cfg, "", dir, {});
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].status.find("edge leakage") != std::string::npos);

  const auto widths = slurp(dir / "quantum_widths.csv");
  CHECK(count_lines(widths) >= 2);  // header plus at least the t = 0 sample
  CHECK(count_lines(widths) < 202);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["runs"][0]["status"].get<std::string>() ==
        entries[0].status);
}

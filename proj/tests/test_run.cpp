#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "excurlab/analytic.hpp"
#include "excurlab/config.hpp"
#include "excurlab/run.hpp"

using namespace excurlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("excurlab_") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// Non-comment lines of a CSV: first entry is the header row.
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

RunConfig base_config(const fs::path& out_csv) {
  RunConfig cfg;
  cfg.set("interval", "0,1");
  cfg.set("seed", "5");
  cfg.set("out", out_csv.string());
  return cfg;
}

}  // namespace

TEST_SUITE("run") {

TEST_CASE("simulate writes the pinned CSV schema deterministically") {
  TempDir tmp("run_simulate");
  const fs::path csv = tmp.path / "straddle.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("t", "2");
  cfg.set("n", "40");
  cfg.set("start", "0.5");

  const CommandResult first = run_command("simulate", cfg);
  CHECK(first.passed);
  REQUIRE(first.written_files.size() == 2);
  CHECK(first.written_files[0] == csv.string());
  CHECK(fs::exists(first.written_files[0]));
  CHECK(fs::exists(first.written_files[1]));
  CHECK(first.report_text.find("RESULT: PASS") != std::string::npos);

  const std::string text = slurp(csv);
  CHECK(text.rfind("# excurlab 0.1.0\n", 0) == 0);
  const auto lines = csv_lines(text);
  REQUIRE(lines.size() == 41);  // header + one row per accepted observation
  CHECK(lines[0] ==
        "replicate,t,sigma,d,x_sigma,lifetime,endpoint_disp,sup_disp,"
        "occ_above_mid,never_exited");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    CHECK(split_cells(lines[i]).size() == 10);
  }

  const json summary = json::parse(slurp(first.written_files[1]));
  CHECK(summary["tool"] == "excurlab");
  CHECK(summary["version"] == "0.1.0");
  CHECK(summary["subcommand"] == "simulate");
  CHECK(summary["seed"] == 5);
  CHECK(summary["pass"] == true);
  CHECK(summary["config"]["t"] == "2");
  CHECK(summary["config"].contains("workers") == false);
  REQUIRE(summary["checks"].size() == 1);
  CHECK(summary["checks"][0]["name"] == "run_completed");
  CHECK(summary["checks"][0]["numbers"]["accepted"] == 40);
  CHECK(summary["checks"][0]["numbers"]["never_exited"] == 0);
  CHECK(summary["multiple_testing"]["n_gating_checks"] == 1);
  CHECK(summary["outputs"].size() == 2);
  CHECK(summary["details"]["candidates"].get<std::uint64_t>() >= 40);

  // Reruns — including with a different worker count — are byte-identical.
  const std::string summary_text = slurp(first.written_files[1]);
  cfg.set("workers", "3");
  const CommandResult second = run_command("simulate", cfg);
  CHECK(second.passed);
  CHECK(slurp(csv) == text);
  CHECK(slurp(first.written_files[1]) == summary_text);
}

TEST_CASE("analytic emits one row per grid point with tight tail bounds") {
  TempDir tmp("run_analytic");
  const fs::path csv = tmp.path / "table.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("grid_x", "0.25,0.75");
  cfg.set("grid_s", "0.5,1");

  const CommandResult res = run_command("analytic", cfg);
  CHECK(res.passed);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "x,s,psi,psi_bound,limit_cdf,limit_cdf_bound,exit_rate,"
        "exit_rate_bound,ito_tail");

  const Interval iv(0.0, 1.0);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    REQUIRE(cells.size() == 9);
    const double x = std::stod(cells[0]);
    const double s = std::stod(cells[1]);
    CHECK(std::stod(cells[2]) ==
          doctest::Approx(psi(iv, x, s)).epsilon(1e-12));
    CHECK(std::stod(cells[4]) ==
          doctest::Approx(limit_cdf(iv, s)).epsilon(1e-12));
    CHECK(std::stod(cells[6]) ==
          doctest::Approx(exit_rate(iv, iv.a, s)).epsilon(1e-12));
    CHECK(std::stod(cells[8]) ==
          doctest::Approx(ito_tail(s)).epsilon(1e-12));
    CHECK(std::stod(cells[3]) <= 1e-12);
  }

  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 1);
  CHECK(summary["checks"][0]["name"] == "series_tail_bounds");
  CHECK(summary["checks"][0]["pass"] == true);
}

TEST_CASE("identity check reports one row per bucket and an overall gate") {
  TempDir tmp("run_identity");
  const fs::path csv = tmp.path / "identity.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("seed", "99");
  cfg.set("t", "2");
  cfg.set("n", "600");
  cfg.set("start", "0.5");
  cfg.set("buckets", "2");
  cfg.set("min_bucket", "30");
  cfg.set("reference_draws", "400");
  cfg.set("edge_draws", "200");

  const CommandResult res = run_command("check-thm32", cfg);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 13);  // header + 3 functionals x 2 sides x 2 buckets
  CHECK(lines[0] ==
        "functional,x_sigma,s_low,s_high,s_mid,n_obs,empirical_mean,"
        "reference_mean,combined_se,allowance,skipped,pass");

  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 13);
  CHECK(summary["checks"][12]["name"] == "bucket_pass_fraction");
  CHECK(summary["checks"][12]["gating"] == true);
  CHECK(summary["checks"][0]["gating"] == false);
  CHECK(summary["details"]["s_edges"].size() == 3);
  CHECK(summary["details"]["pass_fraction"].get<double>() >= 0.8);
  CHECK(res.passed);
}

TEST_CASE("convergence table gates on the largest observation time") {
  TempDir tmp("run_converge");
  const fs::path csv = tmp.path / "table.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("seed", "17");
  cfg.set("t_list", "12");
  cfg.set("n", "500");
  cfg.set("n_p0", "1000");
  cfg.set("start", "0");

  const CommandResult res = run_command("converge", cfg);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 2);
  CHECK(split_cells(lines[1]).size() == 19);
  CHECK(split_cells(lines[1])[0] == "12");

  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 5);  // single row, no improvement check
  for (const auto& check : summary["checks"]) {
    CHECK(check["gating"] == true);
  }
  CHECK(summary["details"]["gating_t"] == 12.0);
  CHECK(res.passed);
}

TEST_CASE("application compares the two estimators cell by cell") {
  TempDir tmp("run_application");
  const fs::path csv = tmp.path / "cells.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("seed", "21");
  cfg.set("t", "20");
  cfg.set("n", "600");
  cfg.set("n_p0", "600");
  cfg.set("u_list", "0.25");
  cfg.set("y_list", "0.2");

  const CommandResult res = run_command("application", cfg);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] ==
        "u,y,direct_hits,direct_estimate,direct_lower,direct_upper,p0_hits,"
        "p0_estimate,p0_lower,p0_upper,p0_from_b_hits,combined_se,agree");

  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 2);
  CHECK(summary["checks"][0]["name"] == "cell/u=0.25/y=0.2");
  CHECK(summary["checks"][1]["name"] == "upper_boundary_contribution_zero");
  CHECK(summary["checks"][1]["numbers"]["p0_from_b_hits_total"] == 0);
  CHECK(res.passed);
}

TEST_CASE("rate check emits a single summary row with consistent verdicts") {
  TempDir tmp("run_rate");
  const fs::path csv = tmp.path / "rate.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("seed", "91");
  cfg.set("horizon", "30");
  cfg.set("replicates", "4");
  cfg.set("epsilon", "0.005");

  const CommandResult res = run_command("rate-check", cfg);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 2);
  const auto cells = split_cells(lines[1]);
  REQUIRE(cells.size() == 11);
  CHECK(cells[0] == "4");
  CHECK(cells[1] == "30");

  // At this miniature scale the 10% band may or may not hold; the contract
  // here is consistency between the CSV verdict, the check row, and the
  // exit status.
  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 1);
  const bool pass = summary["checks"][0]["pass"].get<bool>();
  CHECK((cells[10] == "1") == pass);
  CHECK(summary["pass"].get<bool>() == pass);
  CHECK(res.passed == pass);
  CHECK(summary["checks"][0]["numbers"]["rel_tol"] == 0.1);
}

TEST_CASE("sampler certification reports every comparison") {
  TempDir tmp("run_cert");
  const fs::path csv = tmp.path / "cert.csv";
  RunConfig cfg = base_config(csv);
  cfg.set("seed", "52");
  cfg.set("n_draws", "60");
  cfg.set("s_list", "0.25");

  const CommandResult res = run_command("validate-samplers", cfg);
  const auto lines = csv_lines(slurp(csv));
  REQUIRE(lines.size() == 3);  // header + one row per boundary
  CHECK(split_cells(lines[1])[0] == "0");
  CHECK(split_cells(lines[2])[0] == "1");

  const json summary = json::parse(res.summary_json);
  REQUIRE(summary["checks"].size() == 7);  // 2 x 3 functionals + regime
  CHECK(summary["checks"][6]["name"].get<std::string>().rfind(
            "regime_agreement", 0) == 0);
  CHECK(summary["multiple_testing"]["n_stochastic_checks"] == 7);
  CHECK(res.passed);
}

TEST_CASE("configuration failures surface before any file is written") {
  TempDir tmp("run_errors");
  const fs::path csv = tmp.path / "never" / "written.csv";
  RunConfig cfg = base_config(csv);
  CHECK_THROWS_AS(run_command("simulate", cfg), std::invalid_argument);
  CHECK_THROWS_AS(run_command("no-such-command", cfg), std::invalid_argument);
  CHECK_FALSE(fs::exists(csv.parent_path()));
}

}  // TEST_SUITE

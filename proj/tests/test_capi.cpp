#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "excurlab.h"

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

struct ConfigHandle {
  xl_config* cfg;
  ConfigHandle() : cfg(xl_config_create()) { REQUIRE(cfg != nullptr); }
  ~ConfigHandle() { xl_config_destroy(cfg); }
};

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and registries are exposed") {
  CHECK(std::strcmp(xl_version(), "0.1.0") == 0);

  REQUIRE(xl_known_key_count() > 0);
  bool saw_interval = false;
  for (size_t i = 0; i < xl_known_key_count(); ++i) {
    REQUIRE(xl_known_key_name(i) != nullptr);
    REQUIRE(xl_known_key_help(i) != nullptr);
    if (std::strcmp(xl_known_key_name(i), "interval") == 0) {
      saw_interval = true;
    }
  }
  CHECK(saw_interval);
  CHECK(xl_known_key_name(xl_known_key_count()) == nullptr);
  CHECK(xl_known_key_help(xl_known_key_count()) == nullptr);

  REQUIRE(xl_subcommand_count() == 7);
  CHECK(std::strcmp(xl_subcommand_name(0), "simulate") == 0);
  for (size_t i = 0; i < xl_subcommand_count(); ++i) {
    REQUIRE(xl_subcommand_help(i) != nullptr);
    CHECK(std::strlen(xl_subcommand_help(i)) > 0);
  }
  CHECK(xl_subcommand_name(xl_subcommand_count()) == nullptr);
  CHECK(xl_subcommand_help(xl_subcommand_count()) == nullptr);
}

TEST_CASE("config set, get, and error reporting") {
  ConfigHandle h;
  CHECK(xl_config_set(h.cfg, "interval", "0,1") == XL_OK);
  CHECK(std::strcmp(xl_last_error(), "") == 0);

  char buf[16];
  CHECK(xl_config_get(h.cfg, "interval", buf, sizeof buf) == XL_OK);
  CHECK(std::strcmp(buf, "0,1") == 0);

  // Truncation stays NUL-terminated.
  CHECK(xl_config_set(h.cfg, "t_list", "1,2,5,10,20,50") == XL_OK);
  char tiny[4];
  CHECK(xl_config_get(h.cfg, "t_list", tiny, sizeof tiny) == XL_OK);
  CHECK(std::strcmp(tiny, "1,2") == 0);

  CHECK(xl_config_set(h.cfg, "no_such_key", "1") == XL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(xl_last_error()).find("unknown key") != std::string::npos);
  CHECK(xl_config_set(h.cfg, "seed", "not-a-number") ==
        XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_config_get(h.cfg, "seed", buf, sizeof buf) ==
        XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_config_set(nullptr, "seed", "1") == XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_config_get(h.cfg, "interval", nullptr, 8) ==
        XL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config files load with parse and io status codes") {
  TempDir tmp("capi_files");
  const fs::path good = tmp.path / "good.conf";
  const fs::path bad = tmp.path / "bad.conf";
  {
    std::ofstream(good) << "interval = 0,1\nseed = 3\n";
    std::ofstream(bad) << "interval = 0,1\nwat = 7\n";
  }

  ConfigHandle h;
  CHECK(xl_config_load_file(h.cfg, good.string().c_str()) == XL_OK);
  char buf[8];
  CHECK(xl_config_get(h.cfg, "seed", buf, sizeof buf) == XL_OK);
  CHECK(std::strcmp(buf, "3") == 0);

  CHECK(xl_config_load_file(h.cfg, bad.string().c_str()) == XL_ERR_PARSE);
  CHECK(std::string(xl_last_error()).find("line 2") != std::string::npos);
  CHECK(xl_config_load_file(h.cfg, (tmp.path / "absent.conf").string().c_str()) ==
        XL_ERR_IO);
}

TEST_CASE("run command executes end to end through the C surface") {
  TempDir tmp("capi_run");
  const fs::path csv = tmp.path / "study.csv";

  ConfigHandle h;
  REQUIRE(xl_config_set(h.cfg, "interval", "0,1") == XL_OK);
  REQUIRE(xl_config_set(h.cfg, "seed", "11") == XL_OK);
  REQUIRE(xl_config_set(h.cfg, "t", "2") == XL_OK);
  REQUIRE(xl_config_set(h.cfg, "n", "25") == XL_OK);
  REQUIRE(xl_config_set(h.cfg, "start", "0.5") == XL_OK);
  REQUIRE(xl_config_set(h.cfg, "out", csv.string().c_str()) == XL_OK);

  xl_run* run = nullptr;
  REQUIRE(xl_run_command(h.cfg, "simulate", &run) == XL_OK);
  REQUIRE(run != nullptr);
  CHECK(xl_run_passed(run) == 1);
  CHECK(std::string(xl_run_summary_json(run))
            .find("\"subcommand\": \"simulate\"") != std::string::npos);
  CHECK(std::string(xl_run_report_text(run)).find("RESULT: PASS") !=
        std::string::npos);
  REQUIRE(xl_run_output_count(run) == 2);
  for (size_t i = 0; i < xl_run_output_count(run); ++i) {
    REQUIRE(xl_run_output_path(run, i) != nullptr);
    CHECK(fs::exists(xl_run_output_path(run, i)));
  }
  CHECK(xl_run_output_path(run, 2) == nullptr);
  CHECK(slurp(csv).rfind("# excurlab 0.1.0\n", 0) == 0);
  xl_run_destroy(run);

  // Unknown subcommand and missing keys are invalid-argument failures that
  // leave the output handle null.
  run = nullptr;
  CHECK(xl_run_command(h.cfg, "no-such", &run) == XL_ERR_INVALID_ARGUMENT);
  CHECK(run == nullptr);
  ConfigHandle empty;
  CHECK(xl_run_command(empty.cfg, "simulate", &run) ==
        XL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(xl_last_error()).find("'interval'") != std::string::npos);

  // An unwritable output target surfaces as an I/O failure.
  REQUIRE(xl_config_set(h.cfg, "out", "/proc/version/nope.csv") == XL_OK);
  CHECK(xl_run_command(h.cfg, "simulate", &run) == XL_ERR_IO);
  CHECK(run == nullptr);
}

TEST_CASE("direct analytic evaluations agree with their exact relations") {
  double v1 = 0.0;
  double v2 = 0.0;

  // Unit value at t = 2/pi, exactly.
  REQUIRE(xl_ito_tail(2.0 / M_PI, &v1) == XL_OK);
  CHECK(v1 == doctest::Approx(1.0).epsilon(1e-15));
  REQUIRE(xl_ito_tail(1.0, &v1) == XL_OK);
  REQUIRE(xl_ito_tail(2.0, &v2) == XL_OK);
  CHECK(v1 > v2);

  // Survival decreases with age.
  REQUIRE(xl_psi(0.0, 1.0, 0.5, 0.5, &v1) == XL_OK);
  REQUIRE(xl_psi(0.0, 1.0, 0.5, 1.0, &v2) == XL_OK);
  CHECK(v1 > v2);
  CHECK(v1 < 1.0);
  CHECK(v2 > 0.0);

  // CDF round-trips through its inverse.
  REQUIRE(xl_limit_cdf_inverse(0.0, 1.0, 0.3, &v1) == XL_OK);
  REQUIRE(xl_limit_cdf(0.0, 1.0, v1, &v2) == XL_OK);
  CHECK(v2 == doctest::Approx(0.3).epsilon(1e-8));

  // Boundary derivative relation: psi(a + e, s) / (2 e) approaches the
  // excursion rate as e shrinks.
  const double eps = 1e-3;
  REQUIRE(xl_psi(0.0, 1.0, eps, 0.5, &v1) == XL_OK);
  REQUIRE(xl_exit_rate(0.0, 1.0, 0.5, &v2) == XL_OK);
  CHECK(v1 / (2.0 * eps) == doctest::Approx(v2).epsilon(0.01));

  // Argument errors.
  CHECK(xl_psi(1.0, 0.0, 0.5, 0.5, &v1) == XL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(xl_last_error()).size() > 0);
  CHECK(xl_psi(0.0, 1.0, 0.5, 0.5, nullptr) == XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_ito_tail(2.0, nullptr) == XL_ERR_INVALID_ARGUMENT);
}

}  // TEST_SUITE

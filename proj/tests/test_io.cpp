#include <doctest.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "excurlab/config.hpp"
#include "excurlab/errors.hpp"
#include "excurlab/format.hpp"
#include "excurlab/io.hpp"

using namespace excurlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double reparse(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  REQUIRE(res.ec == std::errc());
  return v;
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

}  // namespace

TEST_SUITE("io") {

TEST_CASE("double formatting is shortest round-trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(0.0) == "0");
  for (double v : {1.0 / 3.0, 1e-9, 6.02214076e23, -0.3333333333333333,
                   12345.678901234567, 5e-324}) {
    CHECK(reparse(format_double(v)) == v);
  }
  CHECK(format_uint(0) == "0");
  CHECK(format_uint(18446744073709551615ull) == "18446744073709551615");
  CHECK(join_doubles({0.25, 0.5, 1.0}) == "0.25,0.5,1");
  CHECK(join_doubles({}) == "");
}

TEST_CASE("comment header carries version, seed, hash, and the full echo") {
  RunConfig cfg;
  cfg.load_text("interval = 0,1\nt = 10\nn = 1000\nseed = 1\n", "inline");
  const ResolvedConfig rc = resolve_config(cfg, "simulate");
  const std::string header = comment_header(rc);

  CHECK(header.rfind("# excurlab 0.1.0\n", 0) == 0);
  CHECK(header.find("# seed = 1\n") != std::string::npos);
  CHECK(header.find("# config_hash = " + rc.config_hash + "\n") !=
        std::string::npos);
  CHECK(header.find("#   interval = 0,1\n") != std::string::npos);
  CHECK(header.find("#   t = 10\n") != std::string::npos);
  CHECK(header.back() == '\n');

  // Every line is a comment; no CR anywhere.
  std::istringstream lines(header);
  std::string line;
  std::size_t count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.rfind("#", 0) == 0);
    CHECK(line.find('\r') == std::string::npos);
    ++count;
  }
  // Version, seed, hash, "config:", and one line per echoed key.
  std::size_t echo_lines = 0;
  for (char c : rc.echo) echo_lines += c == '\n';
  CHECK(count == 4 + echo_lines);
}

TEST_CASE("summary path replaces the csv suffix") {
  CHECK(summary_path_for("x.csv") == "x_summary.json");
  CHECK(summary_path_for("dir/y.csv") == "dir/y_summary.json");
  CHECK(summary_path_for("noext") == "noext_summary.json");
  CHECK(summary_path_for(".csv") == ".csv_summary.json");
}

TEST_CASE("output paths honor the output-directory environment variable") {
  unsetenv(kOutDirEnvVar);
  CHECK(resolve_out_path("plain.csv") == "plain.csv");
  CHECK(resolve_out_path("/abs/file.csv") == "/abs/file.csv");

  setenv(kOutDirEnvVar, "/some/dir", 1);
  CHECK(resolve_out_path("plain.csv") == "/some/dir/plain.csv");
  CHECK(resolve_out_path("sub/file.csv") == "/some/dir/sub/file.csv");
  CHECK(resolve_out_path("/abs/file.csv") == "/abs/file.csv");

  setenv(kOutDirEnvVar, "", 1);
  CHECK(resolve_out_path("plain.csv") == "plain.csv");
  unsetenv(kOutDirEnvVar);
}

TEST_CASE("text files are written exactly, creating parent directories") {
  TempDir tmp("io_write");
  const fs::path nested = tmp.path / "a" / "b" / "out.csv";
  const std::string content = "# header\nx,y\n1,2\n";
  write_text_file(nested.string(), content);
  CHECK(slurp(nested) == content);

  // Overwrite truncates.
  write_text_file(nested.string(), "short\n");
  CHECK(slurp(nested) == "short\n");

  // A regular file in the parent chain is a filesystem error.
  const fs::path blocker = tmp.path / "file";
  write_text_file(blocker.string(), "x");
  CHECK_THROWS_AS(
      write_text_file((blocker / "impossible.csv").string(), "x"), IoError);
}

}  // TEST_SUITE

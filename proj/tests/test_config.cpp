#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

#include "excurlab/config.hpp"
#include "excurlab/errors.hpp"

using namespace excurlab;

namespace {

bool has_line(const std::string& text, const std::string& line) {
  std::string needle = line + "\n";
  if (text.rfind(needle, 0) == 0) return true;
  return text.find("\n" + needle) != std::string::npos;
}

RunConfig minimal_simulate() {
  RunConfig cfg;
  cfg.load_text("interval = 0,1\nt = 10\nn = 1000\nseed = 1\n", "inline");
  return cfg;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("line parsing accepts comments, blanks, and loose spacing") {
  RunConfig cfg;
  cfg.load_text("# leading comment\n"
                "\n"
                "interval=0,1\r\n"
                "  seed =  9  \n"
                "   # indented comment\n"
                "t = 2.5\n",
                "inline");
  CHECK(cfg.has("interval"));
  CHECK(cfg.raw("interval") == "0,1");
  CHECK(cfg.raw("seed") == "9");
  CHECK(cfg.raw("t") == "2.5");
  CHECK_FALSE(cfg.has("n"));
  CHECK_THROWS_AS(cfg.raw("n"), std::invalid_argument);
}

TEST_CASE("unknown keys and malformed lines are hard errors with location") {
  RunConfig cfg;
  try {
    cfg.load_text("seed = 1\nfoo = 2\n", "myconf");
    FAIL("expected unknown-key error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("myconf line 2") != std::string::npos);
    CHECK(msg.find("unknown key 'foo'") != std::string::npos);
  }
  CHECK_THROWS_AS(cfg.set("bogus", "1"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.load_text("just words\n", "x"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.load_text("= value\n", "x"), std::invalid_argument);
}

TEST_CASE("value syntax is checked at set time with the key named") {
  RunConfig cfg;
  const std::pair<const char*, const char*> cases[] = {
      {"seed", "abc"},    {"seed", "-3"},       {"t", "oops"},
      {"t", "1e999"},     {"n", "2.5"},         {"interval", "1"},
      {"interval", "1,2,3"}, {"t_list", "1,,2"}, {"t_list", ""},
      {"out", "  "}};
  for (auto [key, value] : cases) {
    try {
      cfg.set(key, value);
      FAIL("expected rejection of " << key << " = '" << value << "'");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("'" + std::string(key) + "'") !=
            std::string::npos);
    }
  }
  // Scientific notation and signs are fine where a double is expected.
  cfg.set("t", "2.5e-1");
  cfg.set("start", "-0.25");
  CHECK(cfg.raw("t") == "2.5e-1");
}

TEST_CASE("missing config file raises an I/O error") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.load_file("/no/such/dir/conf.txt"), IoError);
}

TEST_CASE("later settings win, so flags override file values") {
  RunConfig cfg = minimal_simulate();
  cfg.set("seed", "7");
  const ResolvedConfig rc = resolve_config(cfg, "simulate");
  CHECK(rc.seed == 7);
}

TEST_CASE("minimal simulate config resolves with defaults filled") {
  const ResolvedConfig rc = resolve_config(minimal_simulate(), "simulate");
  CHECK(rc.subcommand == "simulate");
  CHECK(rc.interval.a == 0.0);
  CHECK(rc.interval.b == 1.0);
  CHECK(rc.t == 10.0);
  CHECK(rc.n == 1000);
  CHECK(rc.seed == 1);
  CHECK(rc.start == 0.0);                 // defaults to the lower endpoint
  CHECK(rc.coarse_dt == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(rc.fine_dt == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(rc.workers == 1);
  CHECK(rc.out == "simulate.csv");

  CHECK(has_line(rc.echo, "subcommand = simulate"));
  CHECK(has_line(rc.echo, "interval = 0,1"));
  CHECK(has_line(rc.echo, "t = 10"));
  CHECK(has_line(rc.echo, "n = 1000"));
  CHECK(has_line(rc.echo, "seed = 1"));
  CHECK(has_line(rc.echo, "start = 0"));
  CHECK(has_line(rc.echo, "out = simulate.csv"));
  // Sorted by key, one per line.
  CHECK(rc.echo.find("coarse_dt") < rc.echo.find("fine_dt"));
  CHECK(rc.echo.find("fine_dt") < rc.echo.find("interval"));

  CHECK(rc.config_hash.size() == 16);
  CHECK(rc.config_hash.find_first_not_of("0123456789abcdef") ==
        std::string::npos);

  // Same input, same hash; different input, different hash.
  const ResolvedConfig again = resolve_config(minimal_simulate(), "simulate");
  CHECK(again.echo == rc.echo);
  CHECK(again.config_hash == rc.config_hash);
  RunConfig other = minimal_simulate();
  other.set("n", "1001");
  CHECK(resolve_config(other, "simulate").config_hash != rc.config_hash);
}

TEST_CASE("worker count never enters the echoed config or its hash") {
  RunConfig cfg = minimal_simulate();
  const ResolvedConfig one = resolve_config(cfg, "simulate");
  cfg.set("workers", "5");
  const ResolvedConfig five = resolve_config(cfg, "simulate");
  CHECK(five.workers == 5);
  CHECK(five.echo == one.echo);
  CHECK(five.config_hash == one.config_hash);
  CHECK(one.echo.find("workers") == std::string::npos);
}

TEST_CASE("reversed interval is rejected naming the interval key") {
  RunConfig cfg;
  cfg.load_text("interval = 1,0\nseed = 1\nt = 1\n", "inline");
  try {
    resolve_config(cfg, "simulate");
    FAIL("expected interval error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'interval'") != std::string::npos);
  }
}

TEST_CASE("required keys are reported per subcommand") {
  RunConfig cfg;
  cfg.set("interval", "0,1");
  try {
    resolve_config(cfg, "simulate");
    FAIL("expected missing-seed error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'seed'") != std::string::npos);
  }
  cfg.set("seed", "3");
  try {
    resolve_config(cfg, "simulate");
    FAIL("expected missing-t error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("'t'") != std::string::npos);
  }
  // converge does not need t: it has a default t_list.
  const ResolvedConfig rc = resolve_config(cfg, "converge");
  CHECK(rc.t_list.size() == 6);
  CHECK(rc.t_list.front() == 1.0);
  CHECK(rc.t_list.back() == 50.0);
  // analytic needs neither t nor grid steps.
  const ResolvedConfig an = resolve_config(cfg, "analytic");
  CHECK(an.grid_x.size() == 3);
  CHECK(an.grid_s.size() == 3);
  CHECK(an.out == "analytic.csv");
}

TEST_CASE("cross-field validation names the offending key") {
  auto expect_error = [](RunConfig cfg, const char* sub, const char* key) {
    try {
      resolve_config(cfg, sub);
      FAIL("expected error naming " << key);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("'" + std::string(key) + "'") !=
            std::string::npos);
    }
  };

  RunConfig base = minimal_simulate();

  {
    RunConfig cfg = base;
    cfg.set("coarse_dt", "0");
    expect_error(cfg, "simulate", "coarse_dt");
  }
  {
    RunConfig cfg = base;
    cfg.set("fine_dt", "0.01");  // above the default coarse step
    expect_error(cfg, "simulate", "fine_dt");
  }
  {
    RunConfig cfg = base;
    cfg.set("start", "-0.5");
    expect_error(cfg, "simulate", "start");
  }
  {
    RunConfig cfg = base;
    cfg.set("t", "-1");
    expect_error(cfg, "simulate", "t");
  }
  {
    RunConfig cfg = base;
    cfg.set("workers", "0");
    expect_error(cfg, "simulate", "workers");
  }
  {
    RunConfig cfg = base;
    cfg.set("grid_x", "0.5,1.5");
    expect_error(cfg, "analytic", "grid_x");
  }
  {
    RunConfig cfg = base;
    cfg.set("u_list", "0.25,0");
    expect_error(cfg, "application", "u_list");
  }
  {
    RunConfig cfg = base;
    cfg.set("n_draws", "1");
    expect_error(cfg, "validate-samplers", "n_draws");
  }
  CHECK_THROWS_AS(resolve_config(base, "no-such-command"),
                  std::invalid_argument);
}

TEST_CASE("echo contains exactly the keys the subcommand consumes") {
  RunConfig cfg = minimal_simulate();
  cfg.set("horizon", "25");  // known key, but foreign to simulate
  const ResolvedConfig sim = resolve_config(cfg, "simulate");
  CHECK(sim.echo.find("horizon") == std::string::npos);
  CHECK(sim.echo.find("u_list") == std::string::npos);

  const ResolvedConfig rate = resolve_config(cfg, "rate-check");
  CHECK(has_line(rate.echo, "horizon = 25"));
  CHECK(has_line(rate.echo, "s_threshold = 0.5"));
  CHECK(rate.echo.find("\nt = ") == std::string::npos);
  CHECK(rate.out == "rate-check.csv");
}

TEST_CASE("content hash matches the FNV-1a 64-bit reference values") {
  // Reference digests for the empty string and "a" from the FNV
  // specification.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}

TEST_CASE("registry metadata lines up with the known keys") {
  const auto& keys = RunConfig::known_keys();
  const auto& reg = key_registry();
  REQUIRE(keys.size() == reg.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    CHECK(keys[i] == reg[i].name);
    CHECK_FALSE(reg[i].help.empty());
  }
  CHECK(std::find(keys.begin(), keys.end(), "interval") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "workers") != keys.end());
  const auto& subs = subcommands();
  CHECK(subs.size() == 7);
  CHECK(subs.front() == "simulate");
  CHECK(std::find(subs.begin(), subs.end(), "validate-samplers") != subs.end());
}

}  // TEST_SUITE

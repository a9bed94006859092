// Command-line front end for the Brownian excursion laboratory.
//
// This translation unit talks to the library exclusively through the C API
// in excurlab.h: flags are generated from the library's key registry, so
// the CLI has no knowledge of key semantics beyond their help strings.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "excurlab.h"

namespace {

std::string flag_for_key(const std::string& key) {
  std::string flag = "--";
  for (char c : key) flag.push_back(c == '_' ? '-' : c);
  return flag;
}

int fail_with(const char* stage, xl_status status) {
  std::fprintf(stderr, "excurlab: %s: %s\n", stage, xl_last_error());
  // Usage and configuration problems exit 2, execution/I/O problems 3; a
  // completed run that fails its pass criteria exits 1 elsewhere.
  return (status == XL_ERR_INVALID_ARGUMENT || status == XL_ERR_PARSE) ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo and analytic laboratory for Brownian excursions "
               "straddling a fixed time in an interval"};
  app.set_version_flag("--version", xl_version());
  app.require_subcommand(1);

  // One string slot per registry key, shared by all subcommands; CLI11
  // stores into these and `count()` tells us which were provided.
  std::map<std::string, std::string> values;
  std::string config_file;
  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < xl_subcommand_count(); ++i) {
    CLI::App* sub =
        app.add_subcommand(xl_subcommand_name(i), xl_subcommand_help(i));
    sub->add_option("--config", config_file,
                    "config file with 'key = value' lines; explicit flags "
                    "override it");
    for (size_t k = 0; k < xl_known_key_count(); ++k) {
      const std::string key = xl_known_key_name(k);
      sub->add_option(flag_for_key(key), values[key], xl_known_key_help(k));
    }
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = nullptr;
  for (CLI::App* sub : subs) {
    if (sub->parsed()) chosen = sub;
  }
  if (chosen == nullptr) {
    std::fprintf(stderr, "excurlab: no subcommand selected\n");
    return 2;
  }

  xl_config* cfg = xl_config_create();
  if (cfg == nullptr) {
    std::fprintf(stderr, "excurlab: out of memory\n");
    return 3;
  }

  int rc = 0;
  xl_run* run = nullptr;
  do {
    if (chosen->count("--config") > 0) {
      const xl_status st = xl_config_load_file(cfg, config_file.c_str());
      if (st != XL_OK) {
        rc = fail_with("config", st);
        break;
      }
    }
    bool flag_error = false;
    for (size_t k = 0; k < xl_known_key_count(); ++k) {
      const std::string key = xl_known_key_name(k);
      if (chosen->count(flag_for_key(key)) == 0) continue;
      const xl_status st = xl_config_set(cfg, key.c_str(), values[key].c_str());
      if (st != XL_OK) {
        rc = fail_with("flags", st);
        flag_error = true;
        break;
      }
    }
    if (flag_error) break;

    const xl_status st = xl_run_command(cfg, chosen->get_name().c_str(), &run);
    if (st != XL_OK) {
      rc = fail_with("run", st);
      break;
    }
    std::fputs(xl_run_report_text(run), stdout);
    rc = xl_run_passed(run) ? 0 : 1;
  } while (false);

  xl_run_destroy(run);
  xl_config_destroy(cfg);
  return rc;
}

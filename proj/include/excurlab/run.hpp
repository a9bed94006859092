#pragma once

// Experiment orchestration: one entry point per run that resolves the
// configuration, executes the requested driver, writes the primary CSV and
// its companion machine-readable summary JSON, and reports an overall
// verdict.  Exit-code policy for callers: succeed iff `passed` is true.

#include <string>
#include <vector>

#include "excurlab/config.hpp"

namespace excurlab {

struct CommandResult {
  // True iff every gating in-run pass criterion held.  Purely generative
  // commands (simulate, analytic) gate only on successful completion.
  bool passed = false;
  std::string summary_json;   // machine-readable summary, pretty-printed
  std::string report_text;    // human-readable check lines
  std::vector<std::string> written_files;  // resolved paths, CSV first
};

// Runs `subcommand` with the given raw configuration.  Throws
// std::invalid_argument for configuration errors and std::runtime_error for
// execution or I/O failures; nothing is written when resolution fails.
CommandResult run_command(const std::string& subcommand, const RunConfig& cfg);

}  // namespace excurlab

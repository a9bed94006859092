#pragma once

// Output plumbing: provenance comment headers, CSV cell formatting, output
// path resolution (environment-variable default directory), and atomic-ish
// text file writing.  All text is UTF-8 with LF line endings.

#include <string>

#include "excurlab/config.hpp"

namespace excurlab {

// Environment variable holding the default output directory for relative
// output paths.
inline constexpr const char* kOutDirEnvVar = "EXCURLAB_OUT_DIR";

// '#'-prefixed provenance block placed at the top of every CSV output:
// tool version, master seed, config content hash, and the fully resolved
// configuration, one key per line.  Ends with a newline.
std::string comment_header(const ResolvedConfig& cfg);

// Resolves an output path: absolute paths pass through; relative paths are
// joined onto $EXCURLAB_OUT_DIR when that is set and non-empty, else they
// stay relative to the working directory.
std::string resolve_out_path(const std::string& out);

// Companion summary path: replaces a trailing ".csv" (case-sensitive) with
// "_summary.json", else appends "_summary.json".
std::string summary_path_for(const std::string& csv_path);

// Writes content to path (binary, so LF stays LF), creating parent
// directories as needed.  Throws std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace excurlab

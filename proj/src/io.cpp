#include "excurlab/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "excurlab/errors.hpp"

namespace excurlab {

std::string comment_header(const ResolvedConfig& cfg) {
  std::string out;
  out += "# ";
  out += kToolName;
  out += " ";
  out += kToolVersion;
  out += "\n# seed = ";
  out += std::to_string(cfg.seed);
  out += "\n# config_hash = ";
  out += cfg.config_hash;
  out += "\n# config:\n";
  std::istringstream lines(cfg.echo);
  std::string line;
  while (std::getline(lines, line)) {
    out += "#   ";
    out += line;
    out += "\n";
  }
  return out;
}

std::string resolve_out_path(const std::string& out) {
  namespace fs = std::filesystem;
  fs::path p(out);
  if (p.is_absolute()) return p.string();
  const char* dir = std::getenv(kOutDirEnvVar);
  if (dir != nullptr && dir[0] != '\0') {
    return (fs::path(dir) / p).string();
  }
  return p.string();
}

std::string summary_path_for(const std::string& csv_path) {
  const std::string suffix = ".csv";
  if (csv_path.size() > suffix.size() &&
      csv_path.compare(csv_path.size() - suffix.size(), suffix.size(),
                       suffix) == 0) {
    return csv_path.substr(0, csv_path.size() - suffix.size()) +
           "_summary.json";
  }
  return csv_path + "_summary.json";
}

void write_text_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" +
                               p.parent_path().string() + "': " + ec.message());
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) {
    throw IoError("write failed for '" + path + "'");
  }
}

}  // namespace excurlab

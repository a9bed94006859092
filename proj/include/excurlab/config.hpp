#pragma once

// Line-oriented `key = value` run configuration: parsing with precise
// errors, typed validated access, subcommand-aware defaults, and a resolved
// echo (with content hash) that gives every output file its provenance
// header.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "excurlab/types.hpp"

namespace excurlab {

inline constexpr const char* kToolName = "excurlab";
inline constexpr const char* kToolVersion = "0.1.0";

// Raw configuration: an ordered key -> value map of strings.  Keys must come
// from the known-key registry; unknown keys are hard errors at insertion
// time, and each value is syntax-checked for its registered type.
class RunConfig {
 public:
  // Starts empty; defaults are applied per subcommand at resolve time.
  RunConfig() = default;

  // Parses `key = value` lines (UTF-8, '#' comments, blank lines allowed)
  // and overlays them onto this config.  Errors carry the 1-based line
  // number and the offending key.
  void load_text(const std::string& text, const std::string& origin);
  void load_file(const std::string& path);

  // Sets one key (same validation as file lines; later wins, so CLI flags
  // override file values by being applied afterwards).
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  // Raw string access; throws if absent.
  const std::string& raw(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return kv_; }

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> kv_;
};

// Registry metadata for front ends that generate one flag per key.
struct KeyInfo {
  std::string name;
  std::string help;
};
const std::vector<KeyInfo>& key_registry();

// A fully resolved configuration for one subcommand: every key the command
// consumes, with defaults filled in and cross-field validation done.
struct ResolvedConfig {
  std::string subcommand;
  Interval interval{0.0, 1.0};
  std::uint64_t seed = 0;
  double t = 0.0;                    // observation time (t-based commands)
  std::vector<double> t_list;        // converge
  std::size_t n = 0;                 // accepted-observation target
  double start = 0.0;
  double coarse_dt = 0.0;
  double fine_dt = 0.0;
  unsigned workers = 1;
  double series_tol = 1e-12;
  std::string out;                   // primary CSV path (may be relative)
  std::vector<double> grid_x;        // analytic
  std::vector<double> grid_s;        // analytic
  std::size_t buckets = 8;           // check-thm32
  std::size_t reference_draws = 4000;
  std::size_t edge_draws = 2000;
  double tail_offset = 0.25;
  std::size_t min_bucket = 100;
  std::size_t n_p0 = 20000;          // application / converge reference
  std::vector<double> u_list;        // application
  std::vector<double> y_list;
  double horizon = 200.0;            // rate-check
  double s_threshold = 0.5;
  std::size_t replicates = 50;
  double epsilon = 1e-3;             // rate-check strip width
  double eps_cert = 1e-3;            // validate-samplers offset
  std::vector<double> s_list;        // validate-samplers ages
  std::size_t n_draws = 10000;       // validate-samplers draws per side

  // Deterministic `key = value` lines of everything above, sorted by key;
  // echoed into output headers.
  std::string echo;
  // FNV-1a 64-bit hash of the echo, as 16 hex digits.
  std::string config_hash;
};

// The fixed subcommand set.
const std::vector<std::string>& subcommands();
// One-line description for a subcommand index (parallel to subcommands()).
const std::string& subcommand_help(std::size_t index);

// Validates presence and consistency of everything `subcommand` needs and
// fills defaults (grid steps default to 1e-3*(b-a)^2 coarse and
// 1e-6*(b-a)^2 fine; start defaults to the lower boundary; out defaults to
// "<subcommand>.csv").  Throws std::invalid_argument with the offending
// key's name on any violation.
ResolvedConfig resolve_config(const RunConfig& cfg, const std::string& subcommand);

// FNV-1a 64-bit content hash, 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace excurlab

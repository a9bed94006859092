#include "excurlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "excurlab/errors.hpp"
#include "excurlab/format.hpp"

namespace excurlab {
namespace {

enum class ValueType { kDouble, kUInt, kSize, kDoubleList, kString, kInterval };

struct KeySpec {
  const char* name;
  ValueType type;
  const char* help;
};

// The complete key registry.  Any key outside this list is rejected at the
// point it is set, whether that is a file line or a CLI flag.
const KeySpec kRegistry[] = {
    {"interval", ValueType::kInterval,
     "interval endpoints 'a,b' with a < b (required)"},
    {"seed", ValueType::kUInt, "master RNG seed (required)"},
    {"t", ValueType::kDouble,
     "observation time the sampled excursion must straddle"},
    {"t_list", ValueType::kDoubleList,
     "comma-separated observation times for the convergence table"},
    {"n", ValueType::kSize, "target number of accepted observations"},
    {"start", ValueType::kDouble,
     "path starting point (default: lower interval endpoint)"},
    {"coarse_dt", ValueType::kDouble,
     "coarse simulation step (default 1e-3*(b-a)^2)"},
    {"fine_dt", ValueType::kDouble,
     "refinement step for exit-time location (default 1e-6*(b-a)^2)"},
    {"workers", ValueType::kSize,
     "worker threads; affects wall time only, never output bytes"},
    {"out", ValueType::kString,
     "primary CSV output path (default '<subcommand>.csv')"},
    {"series_tol", ValueType::kDouble, "series truncation tolerance"},
    {"grid_x", ValueType::kDoubleList,
     "comma-separated evaluation points for analytic tables"},
    {"grid_s", ValueType::kDoubleList,
     "comma-separated ages for analytic tables"},
    {"buckets", ValueType::kSize, "age-quantile buckets per boundary side"},
    {"reference_draws", ValueType::kSize,
     "aged-excursion draws per bucket midpoint"},
    {"edge_draws", ValueType::kSize, "aged-excursion draws per bucket edge"},
    {"tail_offset", ValueType::kDouble,
     "lifetime-tail threshold offset above the bucket reference age"},
    {"min_bucket", ValueType::kSize,
     "minimum observations for a bucket to be tested"},
    {"n_p0", ValueType::kSize, "draws from the limiting law"},
    {"u_list", ValueType::kDoubleList,
     "comma-separated age thresholds for the application grid"},
    {"y_list", ValueType::kDoubleList,
     "comma-separated displacement thresholds for the application grid"},
    {"horizon", ValueType::kDouble, "simulation horizon for the rate check"},
    {"s_threshold", ValueType::kDouble,
     "minimum excursion lifetime counted by the rate check"},
    {"replicates", ValueType::kSize, "independent paths for the rate check"},
    {"epsilon", ValueType::kDouble,
     "strip half-width for local-time estimation"},
    {"eps_cert", ValueType::kDouble,
     "oracle start offset for sampler certification"},
    {"s_list", ValueType::kDoubleList,
     "comma-separated ages for sampler certification"},
    {"n_draws", ValueType::kSize,
     "draws per certified (boundary, age) pair"},
};

const KeySpec* find_key(const std::string& name) {
  for (const auto& spec : kRegistry) {
    if (name == spec.name) return &spec;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const char* expect,
                            const std::string& got) {
  throw std::invalid_argument("key '" + key + "' expects " + expect +
                              ", got '" + got + "'");
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() ||
      !std::isfinite(out)) {
    bad_value(key, "a finite number", text);
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(key, "an unsigned integer", text);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) bad_value(key, "comma-separated numbers", text);
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) bad_value(key, "comma-separated numbers", text);
  return out;
}

void check_syntax(const KeySpec& spec, const std::string& value) {
  switch (spec.type) {
    case ValueType::kDouble:
      parse_double(spec.name, value);
      break;
    case ValueType::kUInt:
    case ValueType::kSize:
      parse_uint(spec.name, value);
      break;
    case ValueType::kDoubleList:
      parse_double_list(spec.name, value);
      break;
    case ValueType::kInterval: {
      auto parts = parse_double_list(spec.name, value);
      if (parts.size() != 2) {
        bad_value(spec.name, "two comma-separated numbers 'a,b'", value);
      }
      break;
    }
    case ValueType::kString:
      if (trim(value).empty()) bad_value(spec.name, "a non-empty string", value);
      break;
  }
}

[[noreturn]] void missing_key(const std::string& subcommand,
                              const std::string& key) {
  throw std::invalid_argument("subcommand '" + subcommand +
                              "' requires key '" + key + "'");
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) {
    throw std::invalid_argument("key '" + key + "' must be positive, got " +
                                format_double(v));
  }
}

void require_min(const std::string& key, std::uint64_t v, std::uint64_t lo) {
  if (v < lo) {
    throw std::invalid_argument("key '" + key + "' must be at least " +
                                format_uint(lo) + ", got " + format_uint(v));
  }
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& spec : kRegistry) out.emplace_back(spec.name);
    return out;
  }();
  return keys;
}

const std::vector<KeyInfo>& key_registry() {
  static const std::vector<KeyInfo> infos = [] {
    std::vector<KeyInfo> out;
    for (const auto& spec : kRegistry) out.push_back({spec.name, spec.help});
    return out;
  }();
  return infos;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) {
    throw std::invalid_argument("unknown key '" + key + "'");
  }
  const std::string v = trim(value);
  check_syntax(*spec, v);
  kv_[key] = v;
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    const auto where = origin + " line " + format_uint(lineno);
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument(where + ": expected 'key = value', got '" +
                                  t + "'");
    }
    try {
      set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path);
}

bool RunConfig::has(const std::string& key) const {
  return kv_.count(key) != 0;
}

const std::string& RunConfig::raw(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    throw std::invalid_argument("key '" + key + "' is not set");
  }
  return it->second;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "simulate",   "analytic",   "check-thm32",      "converge",
      "application", "rate-check", "validate-samplers"};
  return names;
}

const std::string& subcommand_help(std::size_t index) {
  static const std::vector<std::string> helps = {
      "sample excursions straddling time t; one observation per CSV row",
      "tabulate survival, limiting-age, and rate series with truncation "
      "bounds",
      "finite-t identity check: straddling excursions vs the "
      "age-conditioned excursion law, bucket by bucket",
      "track convergence of the straddle observables to the limiting law "
      "as t grows",
      "event probability on a grid: direct estimator vs limiting-law "
      "sampler",
      "long-run excursion count per unit boundary local time vs the "
      "analytic rate",
      "certify the excursion samplers against a near-boundary Brownian "
      "oracle"};
  static const std::string empty;
  return index < helps.size() ? helps[index] : empty;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[15 - i] = digits[(h >> (4 * i)) & 0xf];
  }
  return std::string(buf, 16);
}

ResolvedConfig resolve_config(const RunConfig& cfg,
                              const std::string& subcommand) {
  const auto& subs = subcommands();
  if (std::find(subs.begin(), subs.end(), subcommand) == subs.end()) {
    throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
  }

  ResolvedConfig r;
  r.subcommand = subcommand;

  const bool needs_t = subcommand == "simulate" || subcommand == "check-thm32" ||
                       subcommand == "application";
  const bool uses_paths = subcommand != "analytic";
  const bool uses_study = subcommand == "simulate" ||
                          subcommand == "check-thm32" ||
                          subcommand == "converge";

  // --- required keys -------------------------------------------------------
  if (!cfg.has("interval")) missing_key(subcommand, "interval");
  if (!cfg.has("seed")) missing_key(subcommand, "seed");
  if (needs_t && !cfg.has("t")) missing_key(subcommand, "t");

  {
    auto parts = parse_double_list("interval", cfg.raw("interval"));
    if (parts.size() != 2 || !(parts[0] < parts[1])) {
      throw std::invalid_argument(
          "key 'interval' expects 'a,b' with a < b, got '" +
          cfg.raw("interval") + "'");
    }
    r.interval = Interval(parts[0], parts[1]);
  }
  const double len2 = r.interval.length() * r.interval.length();
  r.seed = parse_uint("seed", cfg.raw("seed"));

  // --- echoed key set with defaults ---------------------------------------
  // Every key the subcommand consumes gets a resolved value; nothing else is
  // read or echoed, so the provenance header lists exactly what shaped the
  // run.
  std::map<std::string, std::string> echo_kv;
  echo_kv["subcommand"] = subcommand;
  echo_kv["interval"] = format_double(r.interval.a) + "," +
                        format_double(r.interval.b);
  echo_kv["seed"] = format_uint(r.seed);

  auto take_double = [&](const char* key, double def) {
    double v = cfg.has(key) ? parse_double(key, cfg.raw(key)) : def;
    echo_kv[key] = format_double(v);
    return v;
  };
  auto take_size = [&](const char* key, std::uint64_t def) {
    std::uint64_t v = cfg.has(key) ? parse_uint(key, cfg.raw(key)) : def;
    echo_kv[key] = format_uint(v);
    return v;
  };
  auto take_list = [&](const char* key, const std::vector<double>& def) {
    std::vector<double> v =
        cfg.has(key) ? parse_double_list(key, cfg.raw(key)) : def;
    echo_kv[key] = join_doubles(v);
    return v;
  };

  r.out = cfg.has("out") ? cfg.raw("out") : subcommand + ".csv";
  echo_kv["out"] = r.out;

  if (uses_paths) {
    r.coarse_dt = take_double("coarse_dt", 1e-3 * len2);
    r.fine_dt = take_double("fine_dt", 1e-6 * len2);
    require_positive("coarse_dt", r.coarse_dt);
    require_positive("fine_dt", r.fine_dt);
    if (r.fine_dt > r.coarse_dt) {
      throw std::invalid_argument(
          "key 'fine_dt' must not exceed coarse_dt (" +
          format_double(r.fine_dt) + " > " + format_double(r.coarse_dt) + ")");
    }
    // Workers shape wall time only, never output bytes, so the key stays
    // out of the echoed config and its hash: reruns with different worker
    // counts must produce byte-identical files.
    r.workers = static_cast<unsigned>(
        cfg.has("workers") ? parse_uint("workers", cfg.raw("workers")) : 1);
    require_min("workers", r.workers, 1);
  }

  if (needs_t) {
    r.t = parse_double("t", cfg.raw("t"));
    require_positive("t", r.t);
    echo_kv["t"] = format_double(r.t);
  }

  if (uses_study || subcommand == "application") {
    r.n = take_size("n", 10000);
    require_min("n", r.n, 1);
  }

  if (uses_study) {
    r.start = take_double("start", r.interval.a);
    if (!(r.start >= r.interval.a && r.start <= r.interval.b)) {
      throw std::invalid_argument("key 'start' must lie in [" +
                                  format_double(r.interval.a) + ", " +
                                  format_double(r.interval.b) + "], got " +
                                  format_double(r.start));
    }
  }

  if (subcommand == "analytic") {
    r.series_tol = take_double("series_tol", 1e-12);
    require_positive("series_tol", r.series_tol);
    r.grid_x = take_list("grid_x", {0.25, 0.5, 0.75});
    for (double x : r.grid_x) {
      if (!(x >= r.interval.a && x <= r.interval.b)) {
        throw std::invalid_argument("key 'grid_x' entries must lie in [" +
                                    format_double(r.interval.a) + ", " +
                                    format_double(r.interval.b) + "], got " +
                                    format_double(x));
      }
    }
    r.grid_s = take_list("grid_s", {0.1, 0.5, 1.0});
    for (double s : r.grid_s) require_positive("grid_s", s);
  }

  if (subcommand == "check-thm32") {
    r.buckets = take_size("buckets", 8);
    require_min("buckets", r.buckets, 2);
    r.reference_draws = take_size("reference_draws", 4000);
    require_min("reference_draws", r.reference_draws, 2);
    r.edge_draws = take_size("edge_draws", 2000);
    require_min("edge_draws", r.edge_draws, 2);
    r.tail_offset = take_double("tail_offset", 0.25);
    require_positive("tail_offset", r.tail_offset);
    r.min_bucket = take_size("min_bucket", 100);
    require_min("min_bucket", r.min_bucket, 2);
  }

  if (subcommand == "converge") {
    r.t_list = take_list("t_list", {1.0, 2.0, 5.0, 10.0, 20.0, 50.0});
    for (double t : r.t_list) require_positive("t_list", t);
    r.n_p0 = take_size("n_p0", 20000);
    require_min("n_p0", r.n_p0, 2);
  }

  if (subcommand == "application") {
    r.n_p0 = take_size("n_p0", 20000);
    require_min("n_p0", r.n_p0, 2);
    r.u_list = take_list("u_list", {0.25, 0.5, 1.0});
    for (double u : r.u_list) require_positive("u_list", u);
    r.y_list = take_list("y_list", {0.1, 0.3, 0.5});
    for (double y : r.y_list) require_positive("y_list", y);
  }

  if (subcommand == "rate-check") {
    r.horizon = take_double("horizon", 200.0);
    require_positive("horizon", r.horizon);
    r.s_threshold = take_double("s_threshold", 0.5);
    require_positive("s_threshold", r.s_threshold);
    r.replicates = take_size("replicates", 50);
    require_min("replicates", r.replicates, 1);
    r.epsilon = take_double("epsilon", 1e-3);
    require_positive("epsilon", r.epsilon);
  }

  if (subcommand == "validate-samplers") {
    r.eps_cert = take_double("eps_cert", 1e-3);
    require_positive("eps_cert", r.eps_cert);
    r.s_list = take_list("s_list", {0.25, 1.0});
    for (double s : r.s_list) require_positive("s_list", s);
    r.n_draws = take_size("n_draws", 10000);
    require_min("n_draws", r.n_draws, 2);
  }

  std::string echo;
  for (const auto& [k, v] : echo_kv) {
    echo += k;
    echo += " = ";
    echo += v;
    echo += '\n';
  }
  r.echo = std::move(echo);
  r.config_hash = fnv1a_hex(r.echo);
  return r;
}

}  // namespace excurlab

#include "excurlab.h"

#include <cstring>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>

#include "excurlab/analytic.hpp"
#include "excurlab/config.hpp"
#include "excurlab/errors.hpp"
#include "excurlab/run.hpp"
#include "excurlab/types.hpp"

struct xl_config {
  excurlab::RunConfig cfg;
};

struct xl_run {
  excurlab::CommandResult res;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Runs fn under a catch-all boundary: no exception escapes the C ABI.
// `parse_context` upgrades invalid-argument errors to XL_ERR_PARSE, which
// is the right classification while reading config text.
template <typename Fn>
xl_status guarded(Fn&& fn, bool parse_context = false) noexcept {
  try {
    g_last_error.clear();
    return fn();
  } catch (const excurlab::IoError& e) {
    set_error(e.what());
    return XL_ERR_IO;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return parse_context ? XL_ERR_PARSE : XL_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return XL_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    set_error(e.what());
    return XL_ERR_RUNTIME;
  } catch (...) {
    set_error("unknown error");
    return XL_ERR_RUNTIME;
  }
}

xl_status require(bool ok, const char* msg) {
  if (ok) return XL_OK;
  set_error(msg);
  return XL_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* xl_version(void) { return excurlab::kToolVersion; }

const char* xl_last_error(void) { return g_last_error.c_str(); }

xl_config* xl_config_create(void) { return new (std::nothrow) xl_config(); }

void xl_config_destroy(xl_config* cfg) { delete cfg; }

xl_status xl_config_load_file(xl_config* cfg, const char* path) {
  if (require(cfg != nullptr, "null config") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(path != nullptr, "null path") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    cfg->cfg.load_file(path);
    return XL_OK;
  }, /*parse_context=*/true);
}

xl_status xl_config_set(xl_config* cfg, const char* key, const char* value) {
  if (require(cfg != nullptr, "null config") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(key != nullptr, "null key") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(value != nullptr, "null value") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    cfg->cfg.set(key, value);
    return XL_OK;
  });
}

xl_status xl_config_get(const xl_config* cfg, const char* key, char* buf,
                        size_t buf_len) {
  if (require(cfg != nullptr, "null config") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(key != nullptr, "null key") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(buf != nullptr && buf_len > 0, "null or empty buffer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::string& v = cfg->cfg.raw(key);
    const size_t n = v.size() < buf_len - 1 ? v.size() : buf_len - 1;
    std::memcpy(buf, v.data(), n);
    buf[n] = '\0';
    return XL_OK;
  });
}

size_t xl_known_key_count(void) { return excurlab::key_registry().size(); }

const char* xl_known_key_name(size_t index) {
  const auto& reg = excurlab::key_registry();
  return index < reg.size() ? reg[index].name.c_str() : nullptr;
}

const char* xl_known_key_help(size_t index) {
  const auto& reg = excurlab::key_registry();
  return index < reg.size() ? reg[index].help.c_str() : nullptr;
}

size_t xl_subcommand_count(void) { return excurlab::subcommands().size(); }

const char* xl_subcommand_name(size_t index) {
  const auto& subs = excurlab::subcommands();
  return index < subs.size() ? subs[index].c_str() : nullptr;
}

const char* xl_subcommand_help(size_t index) {
  if (index >= excurlab::subcommands().size()) return nullptr;
  return excurlab::subcommand_help(index).c_str();
}

xl_status xl_run_command(const xl_config* cfg, const char* subcommand,
                         xl_run** out) {
  if (require(cfg != nullptr, "null config") != XL_OK) return XL_ERR_INVALID_ARGUMENT;
  if (require(subcommand != nullptr, "null subcommand") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  if (require(out != nullptr, "null output handle") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&] {
    auto run = std::make_unique<xl_run>();
    run->res = excurlab::run_command(subcommand, cfg->cfg);
    *out = run.release();
    return XL_OK;
  });
}

int xl_run_passed(const xl_run* run) {
  return run != nullptr && run->res.passed ? 1 : 0;
}

const char* xl_run_summary_json(const xl_run* run) {
  return run != nullptr ? run->res.summary_json.c_str() : "";
}

const char* xl_run_report_text(const xl_run* run) {
  return run != nullptr ? run->res.report_text.c_str() : "";
}

size_t xl_run_output_count(const xl_run* run) {
  return run != nullptr ? run->res.written_files.size() : 0;
}

const char* xl_run_output_path(const xl_run* run, size_t index) {
  if (run == nullptr || index >= run->res.written_files.size()) return nullptr;
  return run->res.written_files[index].c_str();
}

void xl_run_destroy(xl_run* run) { delete run; }

xl_status xl_psi(double a, double b, double x, double s, double* out) {
  if (require(out != nullptr, "null output pointer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = excurlab::psi(excurlab::Interval(a, b), x, s);
    return XL_OK;
  });
}

xl_status xl_limit_cdf(double a, double b, double s, double* out) {
  if (require(out != nullptr, "null output pointer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = excurlab::limit_cdf(excurlab::Interval(a, b), s);
    return XL_OK;
  });
}

xl_status xl_limit_cdf_inverse(double a, double b, double p, double* out) {
  if (require(out != nullptr, "null output pointer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = excurlab::limit_cdf_inverse(excurlab::Interval(a, b), p);
    return XL_OK;
  });
}

xl_status xl_ito_tail(double t, double* out) {
  if (require(out != nullptr, "null output pointer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *out = excurlab::ito_tail(t);
    return XL_OK;
  });
}

xl_status xl_exit_rate(double a, double b, double s, double* out) {
  if (require(out != nullptr, "null output pointer") != XL_OK) {
    return XL_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const excurlab::Interval iv(a, b);
    *out = excurlab::exit_rate(iv, iv.a, s);
    return XL_OK;
  });
}

}  // extern "C"

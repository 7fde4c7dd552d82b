#include "lorasim/lorasim.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "lorasim/config.hpp"
#include "lorasim/experiment.hpp"

struct lorasim_report {
  lorasim::MetricsReport report;
};

namespace {

thread_local std::string g_last_error;

lorasim_status fail(lorasim_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

lorasim_status give(const std::string& s, char** out) {
  *out = dup(s);
  if (!*out) return fail(LORASIM_ERR_INTERNAL, "out of memory");
  return LORASIM_OK;
}

// Maps exceptions thrown by the core onto status codes.
template <typename F>
lorasim_status guard(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const lorasim::ConfigError& e) {
    return fail(LORASIM_ERR_CONFIG, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(LORASIM_ERR_CONFIG, e.what());
  } catch (const lorasim::ArtifactError& e) {
    return fail(LORASIM_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(LORASIM_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(LORASIM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(LORASIM_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(LORASIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LORASIM_ERR_INTERNAL, "unknown error");
  }
}

lorasim::ExperimentSpec parse_spec(const char* text) {
  return lorasim::experiment_from_json(nlohmann::json::parse(text));
}

}  // namespace

extern "C" {

const char* lorasim_version(void) {
  static const std::string v = lorasim::code_version();
  return v.c_str();
}

const char* lorasim_last_error(void) { return g_last_error.c_str(); }

void lorasim_string_free(char* s) { std::free(s); }

lorasim_status lorasim_run_json(const char* config_json, lorasim_report** out) {
  if (!config_json || !out) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guard([&] {
    const auto cfg = lorasim::run_config_from_json(nlohmann::json::parse(config_json));
    *out = new lorasim_report{lorasim::engine::run(cfg)};
    return LORASIM_OK;
  });
}

void lorasim_report_free(lorasim_report* report) { delete report; }

lorasim_status lorasim_report_timeseries_csv(const lorasim_report* report, char** out) {
  if (!report || !out) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::ostringstream ss;
    lorasim::write_timeseries_csv(report->report, ss);
    return give(ss.str(), out);
  });
}

lorasim_status lorasim_report_summary_json(const lorasim_report* report, char** out) {
  if (!report || !out) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return give(lorasim::summary_json(report->report).dump(2), out); });
}

lorasim_status lorasim_report_totals(const lorasim_report* report, uint64_t* sent,
                                     uint64_t* received, double* energy_mj) {
  if (!report) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  if (sent) *sent = report->report.total_sent;
  if (received) *received = report->report.gateway_received;
  if (energy_mj) *energy_mj = report->report.total_energy_mj;
  return LORASIM_OK;
}

lorasim_status lorasim_preset_names(char** out_json) {
  if (!out_json) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return give(nlohmann::json(lorasim::preset_names()).dump(), out_json); });
}

lorasim_status lorasim_preset_json(const char* name, char** out_json) {
  if (!name || !out_json) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return give(lorasim::to_json(lorasim::preset(name)).dump(2), out_json); });
}

lorasim_status lorasim_experiment_normalize(const char* spec_json, char** out_json) {
  if (!spec_json || !out_json) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] { return give(lorasim::to_json(parse_spec(spec_json)).dump(2), out_json); });
}

lorasim_status lorasim_experiment_run(const char* spec_json, unsigned jobs, int verbose,
                                      size_t* failed) {
  if (!spec_json) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  if (failed) *failed = 0;
  return guard([&] {
    const auto spec = parse_spec(spec_json);
    const auto result = lorasim::run_experiment(spec, jobs, verbose ? &std::cerr : nullptr);
    const std::size_t n = result.failures();
    if (failed) *failed = n;
    if (n > 0) {
      std::string msg = std::to_string(n) + " of " + std::to_string(result.runs.size()) +
                        " runs failed:";
      for (const auto& r : result.runs) {
        if (!r.ok) msg += "\n  " + r.stem + ": " + r.error;
      }
      return fail(LORASIM_ERR_PARTIAL, msg);
    }
    return LORASIM_OK;
  });
}

lorasim_status lorasim_summarize(const char* dir, char** out_table) {
  if (!dir || !out_table) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    std::ostringstream ss;
    lorasim::print_summary(lorasim::summarize(dir), ss);
    return give(ss.str(), out_table);
  });
}

lorasim_status lorasim_time_on_air(int payload_bytes, int sf, double* out_s) {
  if (!out_s) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    // the formula extends past SF12 but the radio does not
    lorasim::phy::sinr_threshold_db(sf);
    *out_s = lorasim::phy::time_on_air_s(payload_bytes, sf, lorasim::RadioConstants{});
    return LORASIM_OK;
  });
}

lorasim_status lorasim_sensitivity(int sf, double bandwidth_hz, double* out_dbm) {
  if (!out_dbm) return fail(LORASIM_ERR_INVALID_ARGUMENT, "null argument");
  return guard([&] {
    *out_dbm = lorasim::phy::receiver_sensitivity_dbm(sf, bandwidth_hz);
    return LORASIM_OK;
  });
}

}  // extern "C"

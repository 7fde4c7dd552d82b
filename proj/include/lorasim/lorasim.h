#ifndef LORASIM_LORASIM_H
#define LORASIM_LORASIM_H

/* C interface to the simulator. Every function returns a status code;
 * lorasim_last_error() describes the most recent failure on this thread.
 * Strings returned through out-parameters are owned by the caller and must
 * be released with lorasim_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(LORASIM_BUILDING)
#define LORASIM_API __declspec(dllexport)
#else
#define LORASIM_API __declspec(dllimport)
#endif
#else
#define LORASIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lorasim_status {
  LORASIM_OK = 0,
  LORASIM_ERR_INVALID_ARGUMENT = 1,
  LORASIM_ERR_CONFIG = 2,
  LORASIM_ERR_IO = 3,
  LORASIM_ERR_PARTIAL = 4,
  LORASIM_ERR_INTERNAL = 5
} lorasim_status;

typedef struct lorasim_report lorasim_report;

LORASIM_API const char* lorasim_version(void);
LORASIM_API const char* lorasim_last_error(void);
LORASIM_API void lorasim_string_free(char* s);

/* Single run from a JSON run configuration. */
LORASIM_API lorasim_status lorasim_run_json(const char* config_json, lorasim_report** out);
LORASIM_API void lorasim_report_free(lorasim_report* report);
LORASIM_API lorasim_status lorasim_report_timeseries_csv(const lorasim_report* report, char** out);
LORASIM_API lorasim_status lorasim_report_summary_json(const lorasim_report* report, char** out);
LORASIM_API lorasim_status lorasim_report_totals(const lorasim_report* report, uint64_t* sent,
                                                 uint64_t* received, double* energy_mj);

/* Experiments. The spec is JSON; a "preset" key selects a built-in grid. */
LORASIM_API lorasim_status lorasim_preset_names(char** out_json);
LORASIM_API lorasim_status lorasim_preset_json(const char* name, char** out_json);
LORASIM_API lorasim_status lorasim_experiment_normalize(const char* spec_json, char** out_json);
/* Returns LORASIM_ERR_PARTIAL when some runs failed; artifacts of the
 * others are kept. `failed` may be NULL. */
LORASIM_API lorasim_status lorasim_experiment_run(const char* spec_json, unsigned jobs,
                                                  int verbose, size_t* failed);
LORASIM_API lorasim_status lorasim_summarize(const char* dir, char** out_table);

/* Radio helpers. */
LORASIM_API lorasim_status lorasim_time_on_air(int payload_bytes, int sf, double* out_s);
LORASIM_API lorasim_status lorasim_sensitivity(int sf, double bandwidth_hz, double* out_dbm);

#ifdef __cplusplus
}
#endif

#endif

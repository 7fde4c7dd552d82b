#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "lorasim/lorasim.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void test_helpers(void) {
  double toa = 0.0;
  CHECK(lorasim_time_on_air(50, 7, &toa) == LORASIM_OK);
  CHECK(fabs(toa - 0.097536) < 1e-9);
  CHECK(lorasim_time_on_air(50, 12, &toa) == LORASIM_OK);
  CHECK(fabs(toa - 2.138112) < 1e-9);
  CHECK(lorasim_time_on_air(50, 13, &toa) == LORASIM_ERR_INVALID_ARGUMENT);
  CHECK(strlen(lorasim_last_error()) > 0);
  CHECK(lorasim_time_on_air(50, 7, NULL) == LORASIM_ERR_INVALID_ARGUMENT);

  double rs = 0.0;
  CHECK(lorasim_sensitivity(12, 125e3, &rs) == LORASIM_OK);
  CHECK(rs == -136.0);
  CHECK(lorasim_sensitivity(7, 300e3, &rs) == LORASIM_ERR_INVALID_ARGUMENT);
  CHECK(strlen(lorasim_version()) > 0);
}

static void test_single_run(void) {
  const char* cfg =
      "{\"agent\": \"d-lora\", \"scenario\": {\"n_nodes\": 5, \"duration_h\": 2, \"window_h\": 1}}";
  lorasim_report* report = NULL;
  CHECK(lorasim_run_json(cfg, &report) == LORASIM_OK);
  CHECK(report != NULL);
  if (!report) return;

  uint64_t sent = 0, received = 0;
  double energy = 0.0;
  CHECK(lorasim_report_totals(report, &sent, &received, &energy) == LORASIM_OK);
  CHECK(sent > 0);
  CHECK(received <= sent);
  CHECK(energy > 0.0);

  char* csv = NULL;
  CHECK(lorasim_report_timeseries_csv(report, &csv) == LORASIM_OK);
  CHECK(csv && strncmp(csv, "# lorasim timeseries v1\n", 24) == 0);
  lorasim_string_free(csv);

  char* summary = NULL;
  CHECK(lorasim_report_summary_json(report, &summary) == LORASIM_OK);
  CHECK(summary && strstr(summary, "\"lorasim-summary/1\"") != NULL);
  lorasim_string_free(summary);
  lorasim_report_free(report);
  lorasim_report_free(NULL);
}

static void test_errors(void) {
  lorasim_report* report = NULL;
  CHECK(lorasim_run_json("{\"agent\": \"nobody\"}", &report) == LORASIM_ERR_CONFIG);
  CHECK(report == NULL);
  CHECK(strstr(lorasim_last_error(), "nobody") != NULL);
  CHECK(lorasim_run_json("{not json", &report) == LORASIM_ERR_CONFIG);
  CHECK(lorasim_run_json(NULL, &report) == LORASIM_ERR_INVALID_ARGUMENT);
  CHECK(lorasim_run_json("{}", NULL) == LORASIM_ERR_INVALID_ARGUMENT);

  char* table = NULL;
  CHECK(lorasim_summarize("/nonexistent/lorasim/dir", &table) == LORASIM_ERR_IO);
  CHECK(table == NULL);
}

static void test_presets(void) {
  char* names = NULL;
  CHECK(lorasim_preset_names(&names) == LORASIM_OK);
  CHECK(names && strstr(names, "fig8-9") != NULL);
  lorasim_string_free(names);

  char* spec = NULL;
  CHECK(lorasim_preset_json("fig4", &spec) == LORASIM_OK);
  CHECK(spec && strstr(spec, "n_nodes") != NULL);
  lorasim_string_free(spec);
  CHECK(lorasim_preset_json("fig99", &spec) == LORASIM_ERR_CONFIG);

  char* norm = NULL;
  CHECK(lorasim_experiment_normalize("{\"preset\": \"fig7\", \"seeds\": [9]}", &norm) == LORASIM_OK);
  CHECK(norm && strstr(norm, "\"preset\": \"fig7\"") != NULL);
  CHECK(norm && strstr(norm, "\"seeds\": [\n    9\n  ]") != NULL);
  lorasim_string_free(norm);
}

static void test_experiment(void) {
  const char* spec =
      "{\"agents\": [\"random\", \"cd-lora\"], \"seeds\": [1, 2], "
      "\"scenario\": {\"n_nodes\": 4, \"duration_h\": 1, \"window_h\": 0.5}, "
      "\"output_dir\": \"capi-experiment\"}";
  size_t failed = 99;
  CHECK(lorasim_experiment_run(spec, 1, 0, &failed) == LORASIM_OK);
  CHECK(failed == 0);
  char* table = NULL;
  CHECK(lorasim_summarize("capi-experiment", &table) == LORASIM_OK);
  CHECK(table && strstr(table, "cd-lora") != NULL);
  lorasim_string_free(table);

  const char* partial =
      "{\"agents\": [\"cd-lora\"], \"seeds\": [1], "
      "\"scenario\": {\"n_nodes\": 2, \"duration_h\": 1}, "
      "\"channel_plan\": {\"nodes\": [{\"node\": 0, \"channel\": 0, \"sf_actions\": [12]}, "
      "{\"node\": 1, \"channel\": 1, \"sf_actions\": [12]}]}, "
      "\"sweep\": {\"axis\": \"n_nodes\", \"values\": [2, 3]}, "
      "\"output_dir\": \"capi-partial\"}";
  CHECK(lorasim_experiment_run(partial, 1, 0, &failed) == LORASIM_ERR_PARTIAL);
  CHECK(failed == 1);
  CHECK(strstr(lorasim_last_error(), "n_nodes3") != NULL);
}

int main(void) {
  test_helpers();
  test_single_run();
  test_errors();
  test_presets();
  test_experiment();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("all C API checks passed\n");
  return 0;
}

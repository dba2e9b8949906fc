/*
 * C interface to the collaborative deep learning simulator. All functions
 * return a cdl_status; on failure cdl_last_error() describes what went wrong
 * (the message is thread-local and valid until the next failing call on the
 * same thread). Strings returned through out-parameters are heap-allocated
 * and must be released with cdl_string_free().
 */
#ifndef CDL_H
#define CDL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdl_status {
    CDL_OK = 0,
    CDL_ERR_INVALID_ARGUMENT = 1, /* violated call contract */
    CDL_ERR_CONFIG = 2,           /* invalid configuration */
    CDL_ERR_DATA = 3,             /* malformed or insufficient input data */
    CDL_ERR_INTERNAL = 4
} cdl_status;

/* Opaque handle to a completed experiment run. */
typedef struct cdl_run cdl_run;

const char* cdl_version(void);
const char* cdl_last_error(void);
void cdl_string_free(char* s);

/* Run the full experiment pipeline from a JSON config document. Relative
 * data paths inside the document resolve against the caller's working
 * directory. */
cdl_status cdl_run_experiment(const char* config_json, cdl_run** out_run);

/* Same, reading the config from a file; relative data paths resolve against
 * the file's directory. */
cdl_status cdl_run_experiment_file(const char* config_path, cdl_run** out_run);

void cdl_run_free(cdl_run* run);

/* Report payloads for a completed run. `pretty` > 0 indents the JSON. */
cdl_status cdl_run_report_json(const cdl_run* run, int pretty, char** out_json);
cdl_status cdl_run_losses_csv(const cdl_run* run, char** out_csv);  /* device,round,loss */
cdl_status cdl_run_summary_csv(const cdl_run* run, char** out_csv); /* device,strategy,theta,phi,tau,payoff */
double cdl_run_cooperation_rate(const cdl_run* run);

/* Optimal 1-D k-means over a JSON array (ids 0..n-1) or object of id->value.
 * k <= 0 selects k by silhouette. Returns clusters, centers, and the
 * fair-strategy profile as JSON. */
cdl_status cdl_cluster_values(const char* values_json, int k, char** out_json);

/* Payoffs, pure-strategy equilibria and per-player free-rider conditions for
 * a loss table {"theta":[...],"phi":[...],"tau":[...]} and a payoff config
 * {"benefit":B,"costs":{...}}. */
cdl_status cdl_analyze_game(const char* losses_json, const char* payoff_json, char** out_json);

/* Parse ARAS day files, window them into labeled feature rows, and return the
 * merged dataset as CSV (header f0..f19,label). */
cdl_status cdl_ingest_aras(const char* const* paths, size_t n_paths, int window_seconds,
                           int resident, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* CDL_H */

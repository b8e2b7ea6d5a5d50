#ifndef TP2DP2_H
#define TP2DP2_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(TP2DP2_BUILDING)
#    define TP2DP2_API __declspec(dllexport)
#  else
#    define TP2DP2_API __declspec(dllimport)
#  endif
#else
#  define TP2DP2_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tp2dp2_status {
    TP2DP2_OK = 0,
    TP2DP2_INVALID_ARGUMENT = 1,  /* bad config, recipe or argument */
    TP2DP2_IO = 2,                /* file could not be read or written */
    TP2DP2_INVALID_DATASET = 3,   /* dataset fails validation or parsing */
    TP2DP2_NUMERICAL = 4,         /* numerical failure inside the model */
    TP2DP2_INTERNAL = 5
} tp2dp2_status;

typedef struct tp2dp2_dataset tp2dp2_dataset;
typedef struct tp2dp2_fit_result tp2dp2_fit_result;

/* Strings handed out through char** parameters are owned by the caller and
 * released with tp2dp2_string_free. */
TP2DP2_API const char* tp2dp2_version(void);
/* Message for the last failing call on this thread; empty when none. */
TP2DP2_API const char* tp2dp2_last_error(void);
TP2DP2_API void tp2dp2_string_free(char* s);

/* Datasets */
TP2DP2_API tp2dp2_status tp2dp2_dataset_simulate(const char* recipe_json, tp2dp2_dataset** out);
TP2DP2_API tp2dp2_status tp2dp2_dataset_load(const char* path, tp2dp2_dataset** out);
/* Writes the JSON-lines file and its .meta.json sidecar. */
TP2DP2_API tp2dp2_status tp2dp2_dataset_save(const tp2dp2_dataset* data, const char* path);
TP2DP2_API tp2dp2_status tp2dp2_dataset_size(const tp2dp2_dataset* data, size_t* num_sequences, int* num_types);
TP2DP2_API tp2dp2_status tp2dp2_dataset_metadata(const tp2dp2_dataset* data, char** json_out);
/* JSON array of {"sequence_id", "rule", "detail"}; empty when valid. */
TP2DP2_API tp2dp2_status tp2dp2_dataset_validate(const tp2dp2_dataset* data, char** json_out);
/* Seeded split into training and held-out parts. */
TP2DP2_API tp2dp2_status tp2dp2_dataset_split(const tp2dp2_dataset* data, double holdout_fraction,
                                              unsigned long long seed, tp2dp2_dataset** train,
                                              tp2dp2_dataset** heldout);
TP2DP2_API void tp2dp2_dataset_free(tp2dp2_dataset* data);

/* Configs */
TP2DP2_API tp2dp2_status tp2dp2_config_resolve(const char* config_json, char** resolved_json);

/* Fitting. The config's "dataset" section, if any, is ignored. */
TP2DP2_API tp2dp2_status tp2dp2_fit(const tp2dp2_dataset* data, const char* config_json, tp2dp2_fit_result** out);
TP2DP2_API tp2dp2_status tp2dp2_fit_report(const tp2dp2_fit_result* fit, char** json_out);
TP2DP2_API tp2dp2_status tp2dp2_fit_timing(const tp2dp2_fit_result* fit, char** json_out);
TP2DP2_API tp2dp2_status tp2dp2_fit_trace(const tp2dp2_fit_result* fit, char** jsonl_out);
TP2DP2_API tp2dp2_status tp2dp2_fit_write_trace(const tp2dp2_fit_result* fit, const char* path);
/* 1 when the fit stopped early after tp2dp2_request_stop. */
TP2DP2_API int tp2dp2_fit_interrupted(const tp2dp2_fit_result* fit);
TP2DP2_API void tp2dp2_fit_free(tp2dp2_fit_result* fit);

/* Evaluation of a report against a dataset; see the README for fields. */
TP2DP2_API tp2dp2_status tp2dp2_evaluate(const char* report_json, const tp2dp2_dataset* data, char** json_out);

/* Asks running fits to stop after the current sweep. Safe to call from a
 * signal handler. */
TP2DP2_API void tp2dp2_request_stop(void);
TP2DP2_API void tp2dp2_clear_stop(void);

#ifdef __cplusplus
}
#endif

#endif

/*
 * stresscal C API.
 *
 * Opaque handles own their resources; release them with the matching
 * *_free function. Every fallible call returns an sc_status. On failure the
 * message is available from sc_last_error() on the calling thread until the
 * next failing call on that thread.
 */
#ifndef STRESSCAL_H
#define STRESSCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(STRESSCAL_BUILDING_LIBRARY)
#define SC_API __attribute__((visibility("default")))
#else
#define SC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sc_status {
  SC_OK = 0,
  SC_E_USAGE = 1,
  SC_E_CONFIG = 2,
  SC_E_SCHEMA = 3,
  SC_E_PARSE = 4,
  SC_E_IO = 5,
  SC_E_EMPTY_INPUT = 6,
  SC_E_INSUFFICIENT_DATA = 7,
  SC_E_PARAMETER = 8,
  SC_E_SHAPE = 9,
  SC_E_INCOMPATIBLE_FORMAT = 10,
  SC_E_PROTOCOL = 11,
  SC_E_CONTAMINATION = 12,
  SC_E_POLICY = 13,
  SC_E_INTERNAL = 99
} sc_status;

typedef struct sc_config sc_config;
typedef struct sc_table sc_table;
typedef struct sc_model sc_model;

/* Receives text produced by a call (summaries, warnings). */
typedef void (*sc_text_fn)(const char* text, void* user);

SC_API const char* sc_version(void);
SC_API const char* sc_status_name(sc_status status);
SC_API const char* sc_last_error(void);

/* Routes library warnings; NULL restores the default (stderr). */
SC_API void sc_set_warning_handler(sc_text_fn fn, void* user);

/* Run configuration. Keys are "section.key"; see config_defaults(). */
SC_API sc_status sc_config_new(sc_config** out);
SC_API sc_status sc_config_load(const char* path, sc_config** out);
SC_API sc_status sc_config_set(sc_config* config, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf. *needed receives the full
 * length including the terminator; SC_E_USAGE when the key is unset. */
SC_API sc_status sc_config_get(const sc_config* config, const char* key, char* buf, size_t len,
                               size_t* needed);
/* Checks every key and value without running anything. */
SC_API sc_status sc_config_validate(const sc_config* config);
SC_API void sc_config_free(sc_config* config);

/* Pipeline stages. `out` may be NULL. */
SC_API sc_status sc_run_extract(const sc_config* config, sc_text_fn out, void* user);
SC_API sc_status sc_run_train(const sc_config* config, sc_text_fn out, void* user);
SC_API sc_status sc_run_evaluate(const sc_config* config, sc_text_fn out, void* user);
SC_API sc_status sc_run_calibrate(const sc_config* config, sc_text_fn out, void* user);
SC_API sc_status sc_run_rank_features(const sc_config* config, sc_text_fn out, void* user);
SC_API sc_status sc_run_report(const sc_config* config, sc_text_fn out, void* user);

/* Feature tables. */
SC_API sc_status sc_table_load(const char* csv_path, const char* schema_path, sc_table** out);
SC_API size_t sc_table_num_rows(const sc_table* table);
SC_API size_t sc_table_num_features(const sc_table* table);
SC_API size_t sc_table_num_labels(const sc_table* table);
/* Row-major copy of the feature matrix; len must be rows * features. */
SC_API sc_status sc_table_copy_features(const sc_table* table, double* out, size_t len);
SC_API void sc_table_free(sc_table* table);

/* Models. */
SC_API sc_status sc_model_load(const char* path, sc_model** out);
SC_API sc_status sc_model_save(const sc_model* model, const char* path);
SC_API size_t sc_model_num_features(const sc_model* model);
SC_API size_t sc_model_num_trees(const sc_model* model);
/* Fits with the config's model/transform settings on the table. */
SC_API sc_status sc_model_fit(const sc_config* config, const sc_table* table, sc_model** out);
/* Predicts one raw feature row. Classification yields the label index. */
SC_API sc_status sc_model_predict(const sc_model* model, const double* features, size_t n,
                                  double* out);
/* Normalized mean-decrease-impurity importances, one per feature. */
SC_API sc_status sc_model_importances(const sc_model* model, double* out, size_t n);
SC_API void sc_model_free(sc_model* model);

#ifdef __cplusplus
}
#endif

#endif /* STRESSCAL_H */

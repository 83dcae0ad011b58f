#ifndef PIDON_PIDON_H
#define PIDON_PIDON_H

/* C interface to the pidon library: reference solver, physics-informed
 * operator training, evaluation and ablations. Every call returns a status;
 * on failure pidon_last_error() describes it (thread-local). Strings returned
 * through char** are owned by the caller and freed with pidon_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PIDON_API __declspec(dllexport)
#else
#define PIDON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define PIDON_ABI_VERSION 1

typedef enum pidon_status {
  PIDON_OK = 0,
  PIDON_ERR_INVALID_INPUT = 1,
  PIDON_ERR_DOMAIN = 2,
  PIDON_ERR_SOLVER = 3,
  PIDON_ERR_IO = 4,
  PIDON_ERR_VERSION_MISMATCH = 5,
  PIDON_ERR_DIVERGED = 6,
  PIDON_ERR_INTERNAL = 99
} pidon_status;

typedef enum pidon_field {
  PIDON_FIELD_TOOL_TEMPERATURE = 0,
  PIDON_FIELD_PART_TEMPERATURE = 1,
  PIDON_FIELD_DEGREE_OF_CURE = 2
} pidon_field;

typedef enum pidon_design_set { PIDON_DESIGNS_TRAIN = 0, PIDON_DESIGNS_TEST = 1 } pidon_design_set;

typedef struct pidon_config pidon_config;     /* run configuration */
typedef struct pidon_solution pidon_solution; /* solver or prediction field */
typedef struct pidon_model pidon_model;       /* operator triplet + optimizer state + history */

/* Called after every training epoch; return nonzero to stop early. */
typedef int (*pidon_epoch_callback)(int epoch, const char* phase, double total_loss, void* user);
/* Non-fatal diagnostics (cache misses, property mismatches). */
typedef void (*pidon_warning_callback)(const char* message, void* user);

PIDON_API const char* pidon_version(void);
PIDON_API int pidon_abi_version(void);
PIDON_API const char* pidon_last_error(void);
PIDON_API const char* pidon_status_name(pidon_status status);
PIDON_API void pidon_string_free(char* s);
PIDON_API void pidon_set_warning_callback(pidon_warning_callback cb, void* user);

/* ---- configuration ---- */
/* path == NULL gives the built-in defaults. */
PIDON_API pidon_status pidon_config_load(const char* path, pidon_config** out);
PIDON_API pidon_status pidon_config_parse(const char* json_text, const char* base_dir, pidon_config** out);
PIDON_API pidon_status pidon_config_set_seed(pidon_config* cfg, uint64_t seed);
PIDON_API pidon_status pidon_config_set_design_seeds(pidon_config* cfg, uint64_t train_seed, uint64_t test_seed);
/* name is one of h_top, h_bot, r1, r2, ht1, ht2, hd1, hd2, L_t, L_c (units as in the config file). */
PIDON_API pidon_status pidon_config_set_design_variable(pidon_config* cfg, const char* name, double value);
PIDON_API pidon_status pidon_config_to_json(const pidon_config* cfg, char** out);
PIDON_API void pidon_config_free(pidon_config* cfg);

/* ---- reference solver ---- */
PIDON_API pidon_status pidon_simulate(const pidon_config* cfg, pidon_solution** out);
/* Designs given as CSV text with the header produced by pidon_sample_designs. */
PIDON_API pidon_status pidon_sample_designs(const pidon_config* cfg, pidon_design_set which, char** csv_out);

/* ---- solutions ---- */
PIDON_API pidon_status pidon_solution_csv(const pidon_solution* s, char** out);
PIDON_API pidon_status pidon_solution_manifest(const pidon_solution* s, char** out);
PIDON_API pidon_status pidon_solution_exotherm(const pidon_solution* s, double* T_max_C, double* t_s, double* x_local);
PIDON_API pidon_status pidon_solution_probe(const pidon_solution* s, pidon_field field, double x_local, double t_s,
                                            double* out);
PIDON_API void pidon_solution_free(pidon_solution* s);

/* ---- training ---- */
/* resume may be NULL. checkpoint_path (may be NULL) receives periodic and divergence checkpoints. */
PIDON_API pidon_status pidon_train(const pidon_config* cfg, const pidon_model* resume, const char* checkpoint_path,
                                   pidon_epoch_callback cb, void* user, pidon_model** out);
PIDON_API int pidon_model_diverged(const pidon_model* m);
PIDON_API int pidon_model_epochs_done(const pidon_model* m);
PIDON_API pidon_status pidon_model_history_csv(const pidon_model* m, char** out);
/* Final loss breakdown of the last training call (JSON). */
PIDON_API pidon_status pidon_model_summary_json(const pidon_model* m, char** out);
PIDON_API pidon_status pidon_model_save(const pidon_model* m, const char* path);
PIDON_API pidon_status pidon_model_load(const char* path, pidon_model** out);
PIDON_API void pidon_model_free(pidon_model* m);

/* ---- prediction and evaluation ---- */
/* Field for the config's design on the evaluation grid. */
PIDON_API pidon_status pidon_predict(const pidon_model* m, const pidon_config* cfg, pidon_solution** out);
/* Reference for the config's design on the evaluation grid (cached when configured). */
PIDON_API pidon_status pidon_reference(const pidon_config* cfg, pidon_solution** out);
/* designs_csv == NULL evaluates the config's test set. Returns metrics JSON. */
PIDON_API pidon_status pidon_evaluate(const pidon_model* m, const pidon_config* cfg, const char* designs_csv,
                                      char** metrics_json);
/* Mid-point traces for the config's design. */
PIDON_API pidon_status pidon_plot_data(const pidon_model* m, const pidon_config* cfg, char** csv_out);
/* kind: "decoder", "curriculum" or "domain_decomp". Returns the report JSON. */
PIDON_API pidon_status pidon_ablate(const pidon_config* cfg, const char* kind, char** report_json);

#ifdef __cplusplus
}
#endif

#endif

/* darcysurrogate - C API for the Darcy-flow surrogate modeling library.
 *
 * The library bundles a finite-volume ground-truth simulator (single-phase
 * implicit, two-phase IMPES), branch-trunk discrete neural operators with
 * time embedding, and latent-space adaptive sampling (PCA + systematic
 * resampling + GMM/BIC). All entry points are deterministic for fixed
 * seeds and configs.
 *
 * Conventions:
 *   - functions return DFS_OK (0) on success, a nonzero dfs_status on
 *     failure; dfs_last_error() returns a thread-local message for the
 *     most recent failure on the calling thread
 *   - *_json arguments accept either a path to a JSON file or inline JSON
 *     (detected by a leading '{')
 *   - handles are opaque; every successful *_open must be paired with the
 *     matching *_close
 */

#ifndef DARCYSURROGATE_H
#define DARCYSURROGATE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dfs_status {
  DFS_OK = 0,
  DFS_ERR_INVALID_ARGUMENT = 1,
  DFS_ERR_INVALID_DATA = 2,
  DFS_ERR_NUMERICAL = 3,
  DFS_ERR_IO = 4,
  DFS_ERR_CORRUPT_DATA = 5,
  DFS_ERR_UNSUPPORTED_VERSION = 6,
  DFS_ERR_UNDEFINED_METRIC = 7,
  DFS_ERR_INTERNAL = 8
} dfs_status;

const char* dfs_version(void);
const char* dfs_status_name(dfs_status status);
/* message for the last failing call on this thread; empty string if none */
const char* dfs_last_error(void);

/* ------------------------------------------------------------------ *
 * pipeline entry points                                               *
 * ------------------------------------------------------------------ */

/* Generates a labeled dataset (permeability realizations + FVM solution
 * snapshots) into out_dir. Pass num_samples <= 0 or seed < 0 to keep the
 * config values. */
dfs_status dfs_dataset_generate(const char* config_json, const char* out_dir,
                                int64_t num_samples, int64_t seed);

/* Trains a surrogate on the dataset in data_dir and writes the model
 * directory. The config selects architecture (aronet|arunet), input
 * feature (trans|perm), sampling strategy (random|rar|gmm) and training
 * parameters. */
dfs_status dfs_train(const char* train_config_json, const char* data_dir,
                     const char* out_dir);

/* Evaluates a model directory against a dataset directory and writes the
 * report JSON. */
dfs_status dfs_evaluate(const char* model_dir, const char* data_dir,
                        const char* report_path);

/* Merges evaluation/experiment reports into a CSV summary. */
dfs_status dfs_report_merge(const char* const* report_paths, size_t count,
                            const char* out_csv);

/* generate -> train -> evaluate in one call; failures of a stage still
 * produce a partial report naming the failing stage. */
dfs_status dfs_run_experiment(const char* config_json, const char* workdir,
                              const char* report_path);

/* ------------------------------------------------------------------ *
 * dataset handle                                                      *
 * ------------------------------------------------------------------ */

typedef struct dfs_dataset dfs_dataset;

dfs_status dfs_dataset_open(const char* dir, dfs_dataset** out);
void dfs_dataset_close(dfs_dataset* ds);

int64_t dfs_dataset_num_samples(const dfs_dataset* ds);
int64_t dfs_dataset_num_snapshots(const dfs_dataset* ds);
int64_t dfs_dataset_num_cells(const dfs_dataset* ds);
/* "single" or "two" */
const char* dfs_dataset_phase(const dfs_dataset* ds);
void dfs_dataset_grid_dims(const dfs_dataset* ds, int* nx, int* ny, int* nz);

/* Borrowed view of a stored field ("perm", "pressure",
 * "water_saturation"); valid until the dataset is closed. */
dfs_status dfs_dataset_field(const dfs_dataset* ds, const char* name,
                             const double** data, int64_t* count);

/* ------------------------------------------------------------------ *
 * model handle                                                        *
 * ------------------------------------------------------------------ */

typedef struct dfs_model dfs_model;

dfs_status dfs_model_open(const char* dir, dfs_model** out);
void dfs_model_close(dfs_model* model);

int64_t dfs_model_parameter_count(const dfs_model* model);
int64_t dfs_model_output_size(const dfs_model* model);
const char* dfs_model_kind(const dfs_model* model);

/* Prediction for one raw permeability field (num_cells values, grid cell
 * order) at time-step index t_step. out receives output_size values:
 * pressure snapshots, followed by water saturation for two-phase models. */
dfs_status dfs_model_predict(const dfs_model* model, const double* perm,
                             int64_t num_cells, int t_step, double* out,
                             int64_t out_len);

#ifdef __cplusplus
}
#endif

#endif /* DARCYSURROGATE_H */

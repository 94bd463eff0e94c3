/* C interface to the xmarom library: non-intrusive reduced-order models
 * (POD / AE / PODAE reductions with RBF / GPR / ANN latent maps) and their
 * space-dependent convex aggregation.
 *
 * All entry points return an xma_status; on failure xma_last_error() holds
 * a message for the calling thread. Handles are opaque and must be released
 * with the matching *_free function.
 */
#ifndef XMAROM_XMAROM_H
#define XMAROM_XMAROM_H

#include <stdint.h>

#if defined(_WIN32)
#define XMA_API __declspec(dllexport)
#elif defined(XMA_BUILDING_LIBRARY)
#define XMA_API __attribute__((visibility("default")))
#else
#define XMA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xma_status {
  XMA_OK = 0,
  XMA_ERR_INVALID_ARGUMENT = 1,
  XMA_ERR_IO = 2,
  XMA_ERR_NUMERIC = 3,
  XMA_ERR_INTERNAL = 4
} xma_status;

typedef struct xma_dataset xma_dataset;
typedef struct xma_rom xma_rom;
typedef struct xma_mixture xma_mixture;

XMA_API const char* xma_version(void);

/* Message of the most recent failure on this thread; empty string if none. */
XMA_API const char* xma_last_error(void);

/* ---- datasets ---------------------------------------------------------- */

/* case_json: {"kind":"smooth_family"|"moving_front","n_dof":500,"dim":1,
 *             "param_min":..,"param_max":..,"n_snapshots":100,
 *             "noise":0.0,"seed":0}; unset keys take case defaults. */
XMA_API xma_status xma_dataset_generate(const char* case_json,
                                        xma_dataset** out);

/* format: "csv" (path + sibling .grid file) or "json". */
XMA_API xma_status xma_dataset_load(const char* path, const char* format,
                                    xma_dataset** out);
XMA_API xma_status xma_dataset_save(const xma_dataset* ds, const char* path,
                                    const char* format);

XMA_API xma_status xma_dataset_info(const xma_dataset* ds, int* n_snapshots,
                                    int* n_dof, int* n_params, int* dim);

/* Split into train/eval/test under the seed and normalize from the train
 * statistics. Must be called before training on the handle. */
XMA_API xma_status xma_dataset_prepare(xma_dataset* ds, int n_train,
                                       int n_eval, int n_test,
                                       uint64_t seed);

XMA_API void xma_dataset_free(xma_dataset* ds);

/* ---- individual ROMs --------------------------------------------------- */

/* spec_json: {"reduction":"pod"|"ae"|"podae","approx":"rbf"|"gpr"|"ann",
 *             "latent_dim":3, optional "ae"/"ann" hyperparameter blocks}. */
XMA_API xma_status xma_rom_train(const xma_dataset* ds, const char* spec_json,
                                 uint64_t seed, xma_rom** out);

XMA_API xma_status xma_rom_save(const xma_rom* rom, const char* dir);
XMA_API xma_status xma_rom_load(const char* dir, xma_rom** out);

XMA_API xma_status xma_rom_info(const xma_rom* rom, int* n_params,
                                int* latent_dim, int* n_dof);

/* field_out must hold n_dof doubles; the prediction is on physical scale. */
XMA_API xma_status xma_rom_predict(const xma_rom* rom, const double* mu,
                                   int p, double* field_out);

XMA_API void xma_rom_free(xma_rom* rom);

/* ---- mixtures ---------------------------------------------------------- */

/* Optimizes the score bandwidth on the eval split of the prepared dataset,
 * then fits one weight regressor per component.
 * cfg_json (optional, may be NULL): {"n_trees":100,"min_samples_leaf":2,
 * "bootstrap":true,"seed":0}. */
XMA_API xma_status xma_mixture_fit(const xma_dataset* ds,
                                   const xma_rom* const* roms, int n_roms,
                                   const char* cfg_json, xma_mixture** out);

XMA_API xma_status xma_mixture_save(const xma_mixture* mix, const char* dir);
XMA_API xma_status xma_mixture_load(const char* dir, xma_mixture** out);

XMA_API xma_status xma_mixture_info(const xma_mixture* mix, int* n_models,
                                    int* n_dof, double* sigma_opt);

/* field_out: n_dof doubles; weights_out (optional): n_dof * n_models
 * doubles, point-major; degenerate_out (optional): number of points that
 * fell back to uniform weights. */
XMA_API xma_status xma_mixture_predict(const xma_mixture* mix,
                                       const double* mu, int p,
                                       double* field_out, double* weights_out,
                                       int* degenerate_out);

XMA_API void xma_mixture_free(xma_mixture* mix);

/* ---- experiment pipeline ----------------------------------------------- */

/* Runs generate -> train -> aggregate -> report and writes errors.csv,
 * weight/envelope CSVs, report.json and timings.json under out_dir.
 * config_json follows the experiment schema (see README). */
XMA_API xma_status xma_run_experiment(const char* config_json,
                                      const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* XMAROM_XMAROM_H */

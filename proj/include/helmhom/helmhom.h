/*
 * helmhom — C interface to the stochastic-homogenization laboratory.
 *
 * Every entry point is exported from the shared library with C linkage.
 * Handles are opaque; functions that can fail either return NULL (creation
 * functions) or an hh_status, and leave a human-readable message in
 * hh_last_error() (thread-local). Status values match the CLI exit codes:
 * HH_OK = 0, HH_ERROR = 1 (numeric/runtime/io failure), HH_BAD_USAGE = 2
 * (invalid arguments or configuration).
 */
#ifndef HELMHOM_H
#define HELMHOM_H

#include <stdint.h>

#if defined(_WIN32)
#define HH_API __declspec(dllexport)
#else
#define HH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hh_status {
  HH_OK = 0,
  HH_ERROR = 1,
  HH_BAD_USAGE = 2
} hh_status;

/* Semantic version of the library. */
HH_API const char* hh_version(void);

/* Message from the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next failing call on the same thread. */
HH_API const char* hh_last_error(void);

/* ------------------------------------------------------------------ */
/* Configuration                                                      */
/* ------------------------------------------------------------------ */

typedef struct hh_config hh_config;

/* Desk defaults: paper medium, volume fraction 0.226, L = 20, T = 1e7,
 * k = 5, box 4 with scatterer 2, epsilon list {0.20, 0.16, 0.128, 0.1024},
 * 8 realizations. */
HH_API hh_config* hh_config_create(void);

/* Parse a plain-text config ("section.key = value" lines, '#' comments)
 * on top of the defaults. NULL on failure. */
HH_API hh_config* hh_config_load(const char* path);

/* Apply one key/value pair (same keys as the config file). */
HH_API hh_status hh_config_set(hh_config* cfg, const char* key,
                               const char* value);

HH_API void hh_config_free(hh_config* cfg);

/* ------------------------------------------------------------------ */
/* Deterministic seed derivation                                      */
/* ------------------------------------------------------------------ */

/* The sweep solves realization m with
 * hh_derive_seed(master_seed, "microstructure", m). */
HH_API uint64_t hh_derive_seed(uint64_t master_seed, const char* stream,
                               uint64_t index);

/* ------------------------------------------------------------------ */
/* Microstructure sampling                                            */
/* ------------------------------------------------------------------ */

/* Sample the hard-core microstructure of sweep realization `index`
 * (seed = hh_derive_seed(master_seed, "microstructure", index)) and write
 * it as text to out_path. */
HH_API hh_status hh_sample(const hh_config* cfg, uint64_t index,
                           const char* out_path);

/* ------------------------------------------------------------------ */
/* Homogenized coefficients                                           */
/* ------------------------------------------------------------------ */

typedef struct hh_homog hh_homog;

/* Monte-Carlo homogenization over the config's realization count and
 * master seed (disk cache used when cache.dir is set). NULL on failure. */
HH_API hh_homog* hh_homogenize(const hh_config* cfg);

/* Ensemble means: energy-form a_hom, flux-form cross-check, and n_hom.
 * row/col are 0 or 1; out-of-range indices yield NaN and set the error. */
HH_API double hh_homog_a(const hh_homog* h, int row, int col);
HH_API double hh_homog_a_flux(const hh_homog* h, int row, int col);
HH_API double hh_homog_n(const hh_homog* h);

/* Sample standard deviations across realizations, realization count, and
 * the mean quadrature volume fraction. */
HH_API double hh_homog_spread_a(const hh_homog* h, int row, int col);
HH_API double hh_homog_spread_n(const hh_homog* h);
HH_API int hh_homog_realizations(const hh_homog* h);
HH_API double hh_homog_mean_vf(const hh_homog* h);

/* Per-realization table "seed,a11,a12,a21,a22,nhom" (energy form). */
HH_API hh_status hh_homog_write_csv(const hh_homog* h, const char* path);

HH_API void hh_homog_free(hh_homog* h);

/* ------------------------------------------------------------------ */
/* Scattering solves                                                  */
/* ------------------------------------------------------------------ */

/* Solve one scattering problem on the truncated box and write
 *   <out_dir>/field.csv   nodal total field, "x,y,re,im"
 *   <out_dir>/points.csv  exterior values at the observation points
 *                         (only when points_path is non-NULL; points must
 *                         lie outside the scatterer, at least 2h away).
 *
 * mode "heterogeneous": coefficients from the microstructure of sweep
 * realization `index` at scale `epsilon`.
 * mode "homogenized":   constant (a_hom, n_hom) inside the scatterer from
 * the config's Monte-Carlo ensemble; `epsilon` still selects the mesh step
 * via the h = epsilon/eta policy unless sweep.h_fixed is set.
 */
HH_API hh_status hh_solve(const hh_config* cfg, const char* mode,
                          double epsilon, uint64_t index,
                          const char* points_path, const char* out_dir);

/* ------------------------------------------------------------------ */
/* Convergence sweep and reporting                                    */
/* ------------------------------------------------------------------ */

typedef struct hh_sweep_result hh_sweep_result;

/* Full pipeline: correctors per realization, homogenized coefficients,
 * u_eps / u_0 / w_eps / U_1 per (epsilon, realization), error rows.
 * NULL only on total failure (e.g. invalid config); per-row failures are
 * recorded in the result. */
HH_API hh_sweep_result* hh_sweep_run(const hh_config* cfg);

HH_API int hh_sweep_rows(const hh_sweep_result* r);
HH_API int hh_sweep_failed_rows(const hh_sweep_result* r);
HH_API double hh_sweep_total_runtime(const hh_sweep_result* r);

/* Fitted log-log exponent of an error column against its rate model
 * (columns: err_L2_box, err_H1_ext, err_H1_D_2scale, err_L2_ext_U1,
 * err_H1_ext_U1, diag_F, diag_G). NaN with error set when the fit is not
 * possible. */
HH_API double hh_sweep_rate(const hh_sweep_result* r, const char* column);

/* Write errors.csv, homog.csv, rates.csv, decay.svg (and failures.csv when
 * rows failed) into out_dir. */
HH_API hh_status hh_sweep_render(const hh_sweep_result* r, const char* out_dir);

HH_API void hh_sweep_free(hh_sweep_result* r);

/* Re-fit rates and re-draw decay.svg from an existing errors.csv. */
HH_API hh_status hh_report(const char* errors_csv, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HELMHOM_H */

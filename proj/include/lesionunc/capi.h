#ifndef LESIONUNC_CAPI_H
#define LESIONUNC_CAPI_H

/* C interface of the lesion uncertainty toolkit. All functions return
 * lu_status; on anything but LU_OK, lu_last_error() holds a thread-local
 * message describing what went wrong. Objects returned through out-pointers
 * are owned by the caller and released with the matching *_free call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LU_API __declspec(dllexport)
#else
#define LU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lu_status {
    LU_OK = 0,
    LU_E_ARGUMENT = 1, /* bad parameter or flag value */
    LU_E_IO = 2,       /* file missing / unreadable / unwritable */
    LU_E_FORMAT = 3,   /* malformed NIfTI / CSV / JSON input */
    LU_E_DATA = 4,     /* inputs violate a data contract */
    LU_E_INTERNAL = 5
} lu_status;

LU_API const char* lu_version(void);
LU_API const char* lu_last_error(void);

/* ------------------------------------------------------------------ */
/* volumes                                                              */
/* ------------------------------------------------------------------ */

typedef struct lu_volume lu_volume;

enum { LU_KIND_INTENSITY = 0, LU_KIND_PROBABILITY = 1, LU_KIND_LABEL = 2 };

LU_API lu_status lu_volume_read(const char* path, lu_volume** out);
LU_API lu_status lu_volume_write(const lu_volume* v, const char* path);
LU_API lu_status lu_volume_create(const int dims[3], const double spacing_mm[3],
                                  const double origin_mm[3], int kind,
                                  const float* data /* nx*ny*nz x-fastest, NULL for zeros */,
                                  lu_volume** out);
LU_API void lu_volume_free(lu_volume* v);
LU_API void lu_volume_dims(const lu_volume* v, int out[3]);
LU_API void lu_volume_spacing(const lu_volume* v, double out[3]);
LU_API int lu_volume_kind(const lu_volume* v);
LU_API int64_t lu_volume_voxel_count(const lu_volume* v);
LU_API const float* lu_volume_data(const lu_volume* v);

/* ------------------------------------------------------------------ */
/* voxel-scale uncertainty                                              */
/* ------------------------------------------------------------------ */

LU_API lu_status lu_mean_prediction(const lu_volume* const* samples, int m, lu_volume** out);
LU_API lu_status lu_voxel_entropy(const lu_volume* probabilities, lu_volume** out);
LU_API lu_status lu_voxel_mutual_information(const lu_volume* const* samples, int m, lu_volume** out);
LU_API lu_status lu_threshold(const lu_volume* probabilities, double t, lu_volume** out);

/* ------------------------------------------------------------------ */
/* elastic net on raw arrays                                            */
/* ------------------------------------------------------------------ */

/* x: n*d row-major. weights_out must hold d doubles. */
LU_API lu_status lu_elastic_net_fit(const double* x, const double* y, int n, int d, double alpha,
                                    double l1_ratio, int fit_intercept, double* weights_out,
                                    double* intercept_out);

/* ------------------------------------------------------------------ */
/* subcommand runners (the CLI is a thin wrapper over these)            */
/* ------------------------------------------------------------------ */

LU_API lu_status lu_run_synth(const char* spec_json_or_null, uint64_t seed_override /* 0 keeps spec */,
                              const char* out_dir);

LU_API lu_status lu_run_lesions(const char* samples_glob, const char* patient_id, double threshold,
                                int connectivity, int64_t min_size, int with_entropy,
                                const char* out_csv, const char* out_instances_or_null);

LU_API lu_status lu_run_features(const char* image_path, const char* instances_path,
                                 const char* lesions_csv_or_null, const char* atlas_or_null,
                                 const char* centroids_csv_or_null, int bins, const char* out_csv);

LU_API lu_status lu_run_eval(const char* pred_path, const char* gt_path, double tau, int connectivity,
                             const char* patient_id, const char* out_json, const char* out_csv_or_null);

LU_API lu_status lu_run_fit(const char* train_csv, const char* test_csv_or_null, const char* target,
                            uint64_t seed, const char* grid_json_or_null,
                            const char* exclude_comma_list_or_null, const char* out_json);

LU_API lu_status lu_run_report(const char* report_json, const char* out_table_txt,
                               const char* out_coefficients_csv);

typedef struct lu_pipeline_opts {
    double threshold;     /* default 0.55 */
    int connectivity;     /* default 26 */
    int bins;             /* default 16 */
    double tau;           /* default 0.25 */
    uint64_t seed;        /* default 17 */
    double test_fraction; /* default 0.3 */
    int64_t min_size;     /* default 0 */
    int jobs;             /* default 1 */
    int with_entropy;     /* default 0 */
    const char* grid_json;          /* optional, may be NULL */
    const char* exclude_comma_list; /* optional, may be NULL */
} lu_pipeline_opts;

LU_API void lu_pipeline_opts_init(lu_pipeline_opts* opts);
LU_API lu_status lu_run_pipeline(const char* data_dir, const char* out_dir,
                                 const lu_pipeline_opts* opts);

#ifdef __cplusplus
}
#endif

#endif

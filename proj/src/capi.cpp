#include "lesionunc/capi.h"

#include <cstring>
#include <string>
#include <vector>

#include "lesionunc/instances.hpp"
#include "lesionunc/nifti.hpp"
#include "lesionunc/pipeline.hpp"
#include "lesionunc/regress.hpp"
#include "lesionunc/uncertainty.hpp"
#include "lesionunc/volume.hpp"

using namespace lunc;

struct lu_volume {
    Volume v;
};

namespace {

thread_local std::string g_last_error;

lu_status status_of(const Error& e) {
    switch (e.code()) {
        case ErrorCode::IoFailure:
            return LU_E_IO;
        case ErrorCode::CorruptHeader:
        case ErrorCode::UnsupportedDatatype:
        case ErrorCode::TruncatedData:
        case ErrorCode::RaggedRow:
        case ErrorCode::NonNumericCell:
        case ErrorCode::DuplicateColumn:
            return LU_E_FORMAT;
        case ErrorCode::InvalidArgument:
            return LU_E_ARGUMENT;
        default:
            return LU_E_DATA;
    }
}

template <typename Fn>
lu_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LU_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LU_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LU_E_INTERNAL;
    }
}

lu_status require(bool ok, const char* message) {
    if (ok) return LU_OK;
    g_last_error = message;
    return LU_E_ARGUMENT;
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

std::vector<std::string> split_commas(const char* s) {
    std::vector<std::string> out;
    if (!s) return out;
    std::string cur;
    for (const char* p = s; *p; ++p) {
        if (*p == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(*p);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<Volume> collect_samples(const lu_volume* const* samples, int m) {
    if (!samples || m < 2) fail(ErrorCode::InvalidArgument, "need at least 2 sample volumes");
    std::vector<Volume> vols;
    vols.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        if (!samples[i]) fail(ErrorCode::InvalidArgument, "null sample volume");
        Volume v = samples[i]->v;
        v.kind = VolumeKind::Probability;
        vols.push_back(std::move(v));
    }
    return vols;
}

} // namespace

extern "C" {

const char* lu_version(void) { return "0.1.0"; }

const char* lu_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ */

lu_status lu_volume_read(const char* path, lu_volume** out) {
    if (lu_status s = require(path && out, "path and out must not be null")) return s;
    return guarded([&] { *out = new lu_volume{read_nifti(path)}; });
}

lu_status lu_volume_write(const lu_volume* v, const char* path) {
    if (lu_status s = require(v && path, "volume and path must not be null")) return s;
    return guarded([&] { write_nifti(v->v, path); });
}

lu_status lu_volume_create(const int dims[3], const double spacing_mm[3], const double origin_mm[3],
                           int kind, const float* data, lu_volume** out) {
    if (lu_status s = require(dims && spacing_mm && out, "dims, spacing and out must not be null"))
        return s;
    if (lu_status s = require(kind >= 0 && kind <= 2, "kind must be 0, 1 or 2")) return s;
    return guarded([&] {
        Volume v = make_volume({dims[0], dims[1], dims[2]}, {spacing_mm[0], spacing_mm[1], spacing_mm[2]},
                               static_cast<VolumeKind>(kind), 0.0f,
                               origin_mm ? std::array<double, 3>{origin_mm[0], origin_mm[1], origin_mm[2]}
                                         : std::array<double, 3>{0, 0, 0});
        if (data) std::memcpy(v.data.data(), data, v.data.size() * sizeof(float));
        validate_volume(v);
        *out = new lu_volume{std::move(v)};
    });
}

void lu_volume_free(lu_volume* v) { delete v; }

void lu_volume_dims(const lu_volume* v, int out[3]) {
    for (int i = 0; i < 3; ++i) out[i] = v->v.dims[i];
}

void lu_volume_spacing(const lu_volume* v, double out[3]) {
    for (int i = 0; i < 3; ++i) out[i] = v->v.spacing[i];
}

int lu_volume_kind(const lu_volume* v) { return static_cast<int>(v->v.kind); }

int64_t lu_volume_voxel_count(const lu_volume* v) { return v->v.voxel_count(); }

const float* lu_volume_data(const lu_volume* v) { return v->v.data.data(); }

/* ------------------------------------------------------------------ */

lu_status lu_mean_prediction(const lu_volume* const* samples, int m, lu_volume** out) {
    if (lu_status s = require(out != nullptr, "out must not be null")) return s;
    return guarded([&] { *out = new lu_volume{mean_prediction(make_sample_set(collect_samples(samples, m)))}; });
}

lu_status lu_voxel_entropy(const lu_volume* probabilities, lu_volume** out) {
    if (lu_status s = require(probabilities && out, "volume and out must not be null")) return s;
    return guarded([&] { *out = new lu_volume{voxel_entropy(probabilities->v)}; });
}

lu_status lu_voxel_mutual_information(const lu_volume* const* samples, int m, lu_volume** out) {
    if (lu_status s = require(out != nullptr, "out must not be null")) return s;
    return guarded([&] {
        *out = new lu_volume{voxel_mutual_information(make_sample_set(collect_samples(samples, m)))};
    });
}

lu_status lu_threshold(const lu_volume* probabilities, double t, lu_volume** out) {
    if (lu_status s = require(probabilities && out, "volume and out must not be null")) return s;
    return guarded([&] { *out = new lu_volume{threshold(probabilities->v, t)}; });
}

/* ------------------------------------------------------------------ */

lu_status lu_elastic_net_fit(const double* x, const double* y, int n, int d, double alpha,
                             double l1_ratio, int fit_intercept, double* weights_out,
                             double* intercept_out) {
    if (lu_status s = require(x && y && weights_out && intercept_out, "arrays must not be null"))
        return s;
    if (lu_status s = require(n > 0 && d > 0, "n and d must be positive")) return s;
    return guarded([&] {
        Dataset data;
        for (int c = 0; c < d; ++c) data.feature_names.push_back("x" + std::to_string(c));
        data.x.assign(x, x + static_cast<std::size_t>(n) * d);
        data.y.assign(y, y + n);
        data.groups.assign(static_cast<std::size_t>(n), "g");
        ElasticNetParams params;
        params.alpha = alpha;
        params.l1_ratio = l1_ratio;
        params.fit_intercept = fit_intercept != 0;
        const ElasticNetModel model = fit_elastic_net(data, params);
        std::memcpy(weights_out, model.weights.data(), static_cast<std::size_t>(d) * sizeof(double));
        *intercept_out = model.intercept;
    });
}

/* ------------------------------------------------------------------ */

lu_status lu_run_synth(const char* spec_json, uint64_t seed_override, const char* out_dir) {
    if (lu_status s = require(out_dir != nullptr, "out_dir must not be null")) return s;
    return guarded([&] { run_synth_cmd(opt(spec_json), seed_override, out_dir); });
}

lu_status lu_run_lesions(const char* samples_glob, const char* patient_id, double threshold,
                         int connectivity, int64_t min_size, int with_entropy, const char* out_csv,
                         const char* out_instances) {
    if (lu_status s = require(samples_glob && patient_id && out_csv,
                              "samples glob, patient id and out csv must not be null"))
        return s;
    return guarded([&] {
        run_lesions_cmd(samples_glob, patient_id, threshold, connectivity, min_size, with_entropy != 0,
                        out_csv, opt(out_instances));
    });
}

lu_status lu_run_features(const char* image_path, const char* instances_path, const char* lesions_csv,
                          const char* atlas, const char* centroids_csv, int bins, const char* out_csv) {
    if (lu_status s = require(image_path && instances_path && out_csv,
                              "image, instances and out csv must not be null"))
        return s;
    return guarded([&] {
        run_features_cmd(image_path, instances_path, opt(lesions_csv), opt(atlas), opt(centroids_csv),
                         bins, out_csv);
    });
}

lu_status lu_run_eval(const char* pred_path, const char* gt_path, double tau, int connectivity,
                      const char* patient_id, const char* out_json, const char* out_csv) {
    if (lu_status s = require(pred_path && gt_path && patient_id && out_json,
                              "pred, gt, patient id and out json must not be null"))
        return s;
    return guarded([&] {
        run_eval_cmd(pred_path, gt_path, tau, connectivity, patient_id, out_json, opt(out_csv));
    });
}

lu_status lu_run_fit(const char* train_csv, const char* test_csv, const char* target, uint64_t seed,
                     const char* grid_json, const char* exclude, const char* out_json) {
    if (lu_status s = require(train_csv && target && out_json,
                              "train csv, target and out json must not be null"))
        return s;
    return guarded([&] {
        run_fit_cmd(train_csv, opt(test_csv), target, seed, opt(grid_json), split_commas(exclude),
                    out_json);
    });
}

lu_status lu_run_report(const char* report_json, const char* out_table_txt,
                        const char* out_coefficients_csv) {
    if (lu_status s = require(report_json && out_table_txt && out_coefficients_csv,
                              "report path and both outputs must not be null"))
        return s;
    return guarded([&] { run_report_cmd(report_json, out_table_txt, out_coefficients_csv); });
}

void lu_pipeline_opts_init(lu_pipeline_opts* opts) {
    if (!opts) return;
    opts->threshold = 0.55;
    opts->connectivity = 26;
    opts->bins = 16;
    opts->tau = 0.25;
    opts->seed = 17;
    opts->test_fraction = 0.3;
    opts->min_size = 0;
    opts->jobs = 1;
    opts->with_entropy = 0;
    opts->grid_json = nullptr;
    opts->exclude_comma_list = nullptr;
}

lu_status lu_run_pipeline(const char* data_dir, const char* out_dir, const lu_pipeline_opts* opts) {
    if (lu_status s = require(data_dir && out_dir && opts, "data dir, out dir and opts must not be null"))
        return s;
    return guarded([&] {
        PipelineOptions o;
        o.threshold = opts->threshold;
        o.connectivity = opts->connectivity;
        o.bins = opts->bins;
        o.tau = opts->tau;
        o.seed = opts->seed;
        o.test_fraction = opts->test_fraction;
        o.min_size = opts->min_size;
        o.jobs = opts->jobs;
        o.with_entropy = opts->with_entropy != 0;
        o.grid_json = opt(opts->grid_json);
        o.exclude = split_commas(opts->exclude_comma_list);
        run_pipeline_cmd(data_dir, out_dir, o);
    });
}

} // extern "C"

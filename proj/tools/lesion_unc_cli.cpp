// lesion-unc: per-lesion structural uncertainty, features, evaluation and
// the ElasticNet fit explaining uncertainty from features.
//
// Talks to the toolkit exclusively through the C API in lesionunc/capi.h.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "lesionunc/capi.h"

namespace {

int exit_code_for(lu_status status) {
    if (status == LU_OK) return 0;
    std::fprintf(stderr, "error: %s\n", lu_last_error());
    return status == LU_E_ARGUMENT ? 1 : 2;
}

const char* cstr_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-lesion segmentation uncertainty toolkit"};
    app.set_version_flag("--version", lu_version());
    app.require_subcommand(1);

    // shared option storage
    double threshold = 0.55, tau = 0.25, test_fraction = 0.3;
    int connectivity = 26, bins = 16, jobs = 0;
    std::int64_t min_size = 0;
    std::uint64_t seed = 17;
    bool with_entropy = false;
    std::string samples, patient = "patient", out, instances, image, lesions_csv, atlas, centroids;
    std::string pred, gt, out_csv, train, test, target = "lsu", grid, exclude, report_in, table_out,
                                                 coeff_out, spec, data_dir;

    auto* synth = app.add_subcommand("synth", "generate a phantom dataset with a known oracle");
    synth->add_option("--spec", spec, "phantom spec JSON (defaults when omitted)");
    std::uint64_t synth_seed = 0;
    synth->add_option("--seed", synth_seed, "override the spec's master seed");
    synth->add_option("--out-dir", out, "output dataset directory")->required();

    auto* lesions = app.add_subcommand("lesions", "fuse sampled predictions and compute per-lesion LSU");
    lesions->add_option("--pred-samples", samples, "glob over sampled probability volumes")->required();
    lesions->add_option("--patient", patient, "patient id for the output rows");
    lesions->add_option("--threshold", threshold, "probability threshold (default 0.55)");
    lesions->add_option("--connectivity", connectivity, "6, 18 or 26 (default 26)");
    lesions->add_option("--min-size", min_size, "drop final lesions smaller than this voxel count");
    lesions->add_flag("--with-entropy", with_entropy, "add a mean voxel-entropy column for comparison");
    lesions->add_option("--out", out, "output lesions CSV")->required();
    lesions->add_option("--instances", instances, "output instance label volume (NIfTI)");

    auto* features = app.add_subcommand("features", "compute per-lesion explanatory features");
    features->add_option("--image", image, "intensity volume")->required();
    features->add_option("--instances", instances, "instance label volume from `lesions`")->required();
    features->add_option("--lesions", lesions_csv, "lesions CSV (propagates patient id and lsu)");
    features->add_option("--atlas", atlas, "co-registered label volume for location features");
    features->add_option("--atlas-centroids", centroids, "CSV label,name,cx,cy,cz (else from atlas)");
    features->add_option("--bins", bins, "gray-level bins for texture (default 16)");
    features->add_option("--out", out, "output features CSV")->required();

    auto* eval = app.add_subcommand("eval", "score predicted instances against ground truth");
    eval->add_option("--pred", pred, "predicted mask or instance labels")->required();
    eval->add_option("--gt", gt, "ground-truth mask")->required();
    eval->add_option("--tau", tau, "detection IoU_adj threshold (default 0.25)");
    eval->add_option("--connectivity", connectivity, "6, 18 or 26 (default 26)");
    eval->add_option("--patient", patient, "patient id for the per-lesion rows");
    eval->add_option("--out", out, "output JSON {tp,fp,fn,f1}")->required();
    eval->add_option("--lesion-csv", out_csv, "per-lesion CSV with iou, iou_adj");

    auto* fit = app.add_subcommand("fit", "explain lsu from features with RFE + ElasticNet");
    fit->add_option("--train", train, "training features CSV")->required();
    fit->add_option("--test", test, "held-out features CSV");
    fit->add_option("--target", target, "target column (default lsu)");
    fit->add_option("--seed", seed, "master seed (default 17)");
    fit->add_option("--grid", grid, "hyperparameter grid JSON");
    fit->add_option("--exclude", exclude, "comma-separated feature columns to drop");
    fit->add_option("--out", out, "output report JSON")->required();

    auto* report = app.add_subcommand("report", "render a fit report to text and coefficients CSV");
    report->add_option("--in", report_in, "report JSON from `fit`")->required();
    report->add_option("--table", table_out, "aligned text table output")->required();
    report->add_option("--coefficients", coeff_out, "coefficients CSV output")->required();

    auto* pipeline = app.add_subcommand("pipeline", "run lesions+features+eval+fit over a dataset dir");
    pipeline->add_option("--data", data_dir, "dataset directory (synth layout)")->required();
    pipeline->add_option("--out", out, "output directory")->required();
    pipeline->add_option("--threshold", threshold, "probability threshold (default 0.55)");
    pipeline->add_option("--connectivity", connectivity, "6, 18 or 26 (default 26)");
    pipeline->add_option("--bins", bins, "texture bins (default 16)");
    pipeline->add_option("--tau", tau, "detection threshold (default 0.25)");
    pipeline->add_option("--seed", seed, "master seed (default 17)");
    pipeline->add_option("--test-fraction", test_fraction, "held-out patient fraction (default 0.3)");
    pipeline->add_option("--min-size", min_size, "drop final lesions smaller than this voxel count");
    pipeline->add_flag("--with-entropy", with_entropy, "add mean voxel-entropy column to lesions.csv");
    pipeline->add_option("--jobs", jobs, "parallel patients (default LESION_UNC_JOBS or 1)");
    pipeline->add_option("--grid", grid, "hyperparameter grid JSON");
    pipeline->add_option("--exclude", exclude, "comma-separated feature columns to drop from the fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (synth->parsed())
        return exit_code_for(lu_run_synth(cstr_or_null(spec), synth_seed, out.c_str()));

    if (lesions->parsed())
        return exit_code_for(lu_run_lesions(samples.c_str(), patient.c_str(), threshold, connectivity,
                                            min_size, with_entropy ? 1 : 0, out.c_str(),
                                            cstr_or_null(instances)));

    if (features->parsed())
        return exit_code_for(lu_run_features(image.c_str(), instances.c_str(), cstr_or_null(lesions_csv),
                                             cstr_or_null(atlas), cstr_or_null(centroids), bins,
                                             out.c_str()));

    if (eval->parsed())
        return exit_code_for(lu_run_eval(pred.c_str(), gt.c_str(), tau, connectivity, patient.c_str(),
                                         out.c_str(), cstr_or_null(out_csv)));

    if (fit->parsed())
        return exit_code_for(lu_run_fit(train.c_str(), cstr_or_null(test), target.c_str(), seed,
                                        cstr_or_null(grid), cstr_or_null(exclude), out.c_str()));

    if (report->parsed())
        return exit_code_for(lu_run_report(report_in.c_str(), table_out.c_str(), coeff_out.c_str()));

    if (pipeline->parsed()) {
        lu_pipeline_opts opts;
        lu_pipeline_opts_init(&opts);
        opts.threshold = threshold;
        opts.connectivity = connectivity;
        opts.bins = bins;
        opts.tau = tau;
        opts.seed = seed;
        opts.test_fraction = test_fraction;
        opts.min_size = min_size;
        opts.with_entropy = with_entropy ? 1 : 0;
        if (jobs > 0) {
            opts.jobs = jobs;
        } else if (const char* env = std::getenv("LESION_UNC_JOBS")) {
            opts.jobs = std::max(1, std::atoi(env));
        }
        opts.grid_json = cstr_or_null(grid);
        opts.exclude_comma_list = cstr_or_null(exclude);
        return exit_code_for(lu_run_pipeline(data_dir.c_str(), out.c_str(), &opts));
    }

    return 1;
}

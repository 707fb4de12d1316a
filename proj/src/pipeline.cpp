#include "lesionunc/pipeline.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lesionunc/eval.hpp"
#include "lesionunc/features.hpp"
#include "lesionunc/nifti.hpp"
#include "lesionunc/regress.hpp"
#include "lesionunc/rng.hpp"
#include "lesionunc/synth.hpp"
#include "lesionunc/uncertainty.hpp"

namespace lunc {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> glob_paths(const std::string& pattern) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g); // results come back sorted
    std::vector<std::string> out;
    if (rc == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) fail(ErrorCode::IoFailure, "glob failed for " + pattern);
    return out;
}

void write_config_echo(const std::string& out_path, bool out_is_dir, const ordered_json& config) {
    const fs::path p = out_is_dir ? fs::path(out_path) / "config.json"
                                  : fs::path(out_path + ".config.json");
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoFailure, "cannot write config echo: " + p.string());
    f << config.dump(2) << '\n';
}

Connectivity conn(int c) { return connectivity_from_int(c); }

struct SubjectArtifacts {
    std::string patient;
    SubjectUncertainty subject;
    std::vector<double> mean_entropy; // per lesion, only when requested
};

SubjectArtifacts lesions_for_samples(const std::vector<std::string>& sample_paths,
                                     const std::string& patient, double threshold, int connectivity,
                                     std::int64_t min_size, bool with_entropy) {
    if (sample_paths.size() < 2)
        fail(ErrorCode::InvalidArgument, "need at least 2 sample volumes, got " +
                                             std::to_string(sample_paths.size()));
    std::vector<Volume> vols;
    vols.reserve(sample_paths.size());
    for (const auto& p : sample_paths) {
        Volume v = read_nifti(p);
        v.kind = VolumeKind::Probability;
        validate_volume(v);
        vols.push_back(std::move(v));
    }
    SubjectArtifacts art;
    art.patient = patient;
    const SampleSet samples = make_sample_set(std::move(vols));
    art.subject = compute_subject_uncertainty(samples, threshold, conn(connectivity), min_size);
    if (with_entropy) {
        const Volume h = voxel_entropy(mean_prediction(samples));
        for (const auto& inst : art.subject.final_instances.instances) {
            double s = 0;
            for (std::uint32_t v : inst.voxels) s += h.data[v];
            art.mean_entropy.push_back(s / static_cast<double>(inst.voxels.size()));
        }
    }
    return art;
}

FeatureTable lesions_table(const SubjectArtifacts& art) {
    FeatureTable t;
    t.columns = {"lsu", "volume_mm3", "centroid_x", "centroid_y", "centroid_z"};
    if (!art.mean_entropy.empty()) t.columns.push_back("mean_entropy");
    const auto& set = art.subject.final_instances;
    for (std::size_t i = 0; i < set.instances.size(); ++i) {
        const auto& inst = set.instances[i];
        double cx = 0, cy = 0, cz = 0;
        for (std::uint32_t v : inst.voxels) {
            const auto c = set.coords(v);
            cx += set.origin[0] + c[0] * set.spacing[0];
            cy += set.origin[1] + c[1] * set.spacing[1];
            cz += set.origin[2] + c[2] * set.spacing[2];
        }
        const double n = static_cast<double>(inst.voxels.size());
        std::vector<double> row{art.subject.lesions[i].lsu, inst.volume_mm3, cx / n, cy / n, cz / n};
        if (!art.mean_entropy.empty()) row.push_back(art.mean_entropy[i]);
        t.add_row(art.patient, inst.id, row);
    }
    return t;
}

// append extra named columns to a feature table by (patient, lesion) key
void append_column(FeatureTable& t, const std::string& name,
                   const std::map<std::pair<std::string, std::int64_t>, double>& values,
                   double missing) {
    FeatureTable out;
    out.columns = t.columns;
    out.columns.push_back(name);
    for (std::size_t r = 0; r < t.rows(); ++r) {
        std::vector<double> row;
        for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
        auto it = values.find({t.patient_ids[r], t.lesion_ids[r]});
        row.push_back(it == values.end() ? missing : it->second);
        out.add_row(t.patient_ids[r], t.lesion_ids[r], row);
    }
    t = std::move(out);
}

// merge tables that may disagree on their column sets; absent cells become 0
FeatureTable merge_tables(const std::vector<FeatureTable>& parts) {
    FeatureTable out;
    for (const auto& p : parts)
        for (const auto& c : p.columns)
            if (!out.has_column(c)) out.columns.push_back(c);
    for (const auto& p : parts) {
        for (std::size_t r = 0; r < p.rows(); ++r) {
            std::vector<double> row(out.cols(), 0.0);
            for (std::size_t c = 0; c < p.cols(); ++c)
                row[static_cast<std::size_t>(out.col_index(p.columns[c]))] = p.at(r, c);
            out.add_row(p.patient_ids[r], p.lesion_ids[r], row);
        }
    }
    return out;
}

std::string render_report_text(const FitReport& report) {
    std::ostringstream os;
    os << "elastic net fit over " << report.n_seeds << " seeds\n";
    char line[160];
    std::snprintf(line, sizeof(line), "cv r2    %8.4f +/- %.4f\n", report.cv_r2_mean, report.cv_r2_stderr);
    os << line;
    if (report.test_r2_mean) {
        std::snprintf(line, sizeof(line), "test r2  %8.4f +/- %.4f   (patients used %d, skipped %d)\n",
                      *report.test_r2_mean, *report.test_r2_stderr, report.test_patients_used,
                      report.test_patients_skipped);
        os << line;
    } else {
        os << "test r2  (no test data)\n";
    }
    os << '\n';
    std::size_t width = 12;
    for (const auto& c : report.coefficients) width = std::max(width, c.name.size());
    std::snprintf(line, sizeof(line), "%-*s %12s %12s\n", static_cast<int>(width), "coefficient", "mean",
                  "stderr");
    os << line;
    std::vector<CoefficientStat> sorted = report.coefficients;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::abs(a.mean) > std::abs(b.mean);
    });
    for (const auto& c : sorted) {
        std::snprintf(line, sizeof(line), "%-*s %12.6f %12.6f\n", static_cast<int>(width), c.name.c_str(),
                      c.mean, c.stderr_);
        os << line;
    }
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoFailure, "cannot open for writing: " + path);
    f << text;
    if (!f) fail(ErrorCode::IoFailure, "write failed: " + path);
}

} // namespace

// ------------------------------------------------------------------
// synth
// ------------------------------------------------------------------

void run_synth_cmd(const std::string& spec_json_path, std::uint64_t seed_override,
                   const std::string& out_dir) {
    PhantomSpec spec = spec_json_path.empty() ? PhantomSpec{} : PhantomSpec::from_json_file(spec_json_path);
    if (seed_override != 0) spec.master_seed = seed_override;
    const PhantomDataset data = generate_phantoms(spec);
    fs::create_directories(out_dir);
    write_phantom_dataset(data, out_dir);

    ordered_json cfg;
    cfg["command"] = "synth";
    cfg["spec_file"] = spec_json_path.empty() ? nullptr : ordered_json(spec_json_path);
    cfg["out_dir"] = out_dir;
    cfg["master_seed"] = spec.master_seed;
    cfg["patients"] = spec.patients;
    cfg["m_samples"] = spec.m_samples;
    write_config_echo(out_dir, true, cfg);
}

// ------------------------------------------------------------------
// lesions
// ------------------------------------------------------------------

void run_lesions_cmd(const std::string& samples_glob, const std::string& patient_id,
                     double threshold, int connectivity, std::int64_t min_size, bool with_entropy,
                     const std::string& out_csv, const std::string& out_instances) {
    const auto paths = glob_paths(samples_glob);
    if (paths.empty()) fail(ErrorCode::IoFailure, "no files match " + samples_glob);
    const SubjectArtifacts art =
        lesions_for_samples(paths, patient_id, threshold, connectivity, min_size, with_entropy);
    write_table(lesions_table(art), out_csv);
    if (!out_instances.empty())
        write_nifti(rasterize_instances(art.subject.final_instances), out_instances);

    ordered_json cfg;
    cfg["command"] = "lesions";
    cfg["pred_samples"] = samples_glob;
    cfg["m"] = paths.size();
    cfg["patient"] = patient_id;
    cfg["threshold"] = threshold;
    cfg["connectivity"] = connectivity;
    cfg["min_size"] = min_size;
    cfg["with_entropy"] = with_entropy;
    cfg["out"] = out_csv;
    cfg["instances"] = out_instances.empty() ? nullptr : ordered_json(out_instances);
    write_config_echo(out_csv, false, cfg);
}

// ------------------------------------------------------------------
// features
// ------------------------------------------------------------------

void run_features_cmd(const std::string& image_path, const std::string& instances_path,
                      const std::string& lesions_csv, const std::string& atlas_path,
                      const std::string& centroids_csv, int bins, const std::string& out_csv) {
    const Volume image = read_nifti(image_path);
    const Volume instances_vol = read_nifti(instances_path);
    const InstanceSet lesions = instances_from_volume(instances_vol, Connectivity::Full26,
                                                      {InstanceSource::FinalPrediction, -1});

    std::string patient = "patient";
    std::map<std::pair<std::string, std::int64_t>, double> lsu_by_id;
    bool have_lsu = false;
    if (!lesions_csv.empty()) {
        const FeatureTable lt = read_table(lesions_csv);
        if (lt.rows() > 0) patient = lt.patient_ids.front();
        const int lc = lt.col_index("lsu");
        if (lc >= 0) {
            have_lsu = true;
            for (std::size_t r = 0; r < lt.rows(); ++r)
                lsu_by_id[{lt.patient_ids[r], lt.lesion_ids[r]}] = lt.at(r, static_cast<std::size_t>(lc));
        }
    }

    Volume atlas;
    std::vector<StructureCentroid> centroids;
    const bool have_atlas = !atlas_path.empty();
    if (have_atlas) {
        atlas = read_nifti(atlas_path);
        centroids = centroids_csv.empty() ? atlas_centroids(atlas) : read_centroids_csv(centroids_csv);
    }

    FeatureTable t = lesion_feature_table(image, lesions, patient, have_atlas ? &atlas : nullptr,
                                          have_atlas ? &centroids : nullptr, bins);
    if (have_lsu) append_column(t, "lsu", lsu_by_id, 0.0);
    write_table(t, out_csv);

    ordered_json cfg;
    cfg["command"] = "features";
    cfg["image"] = image_path;
    cfg["instances"] = instances_path;
    cfg["lesions"] = lesions_csv.empty() ? nullptr : ordered_json(lesions_csv);
    cfg["atlas"] = atlas_path.empty() ? nullptr : ordered_json(atlas_path);
    cfg["atlas_centroids"] = centroids_csv.empty() ? nullptr : ordered_json(centroids_csv);
    cfg["bins"] = bins;
    cfg["out"] = out_csv;
    write_config_echo(out_csv, false, cfg);
}

// ------------------------------------------------------------------
// eval
// ------------------------------------------------------------------

namespace {

ordered_json detection_json(const DetectionCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"f1", c.f1}};
}

} // namespace

void run_eval_cmd(const std::string& pred_path, const std::string& gt_path, double tau,
                  int connectivity, const std::string& patient_id, const std::string& out_json,
                  const std::string& out_csv) {
    const Volume pred_vol = read_nifti(pred_path);
    const Volume gt_vol = read_nifti(gt_path);
    const InstanceSet preds =
        instances_from_volume(pred_vol, conn(connectivity), {InstanceSource::FinalPrediction, -1});
    const InstanceSet gts =
        instances_from_volume(gt_vol, conn(connectivity), {InstanceSource::GroundTruth, -1});

    const DetectionCounts counts = detection_f1(preds, gts, tau);
    const std::vector<MatchResult> matches = match_instances(preds, gts, tau);

    ordered_json j = detection_json(counts);
    write_text(out_json, j.dump(2) + "\n");

    if (!out_csv.empty()) {
        FeatureTable t;
        t.columns = {"iou", "iou_adj", "tp"};
        for (const auto& m : matches)
            t.add_row(patient_id, m.pred_id, {m.iou, m.iou_adj, m.tp_flag ? 1.0 : 0.0});
        write_table(t, out_csv);
    }

    ordered_json cfg;
    cfg["command"] = "eval";
    cfg["pred"] = pred_path;
    cfg["gt"] = gt_path;
    cfg["tau"] = tau;
    cfg["connectivity"] = connectivity;
    cfg["patient"] = patient_id;
    cfg["out_json"] = out_json;
    cfg["out_csv"] = out_csv.empty() ? nullptr : ordered_json(out_csv);
    write_config_echo(out_json, false, cfg);
}

// ------------------------------------------------------------------
// fit / report
// ------------------------------------------------------------------

void run_fit_cmd(const std::string& train_csv, const std::string& test_csv, const std::string& target,
                 std::uint64_t seed, const std::string& grid_json, const std::vector<std::string>& exclude,
                 const std::string& out_json) {
    const FeatureTable train_table = read_table(train_csv);
    const Dataset train = dataset_from_table(train_table, target, exclude);

    Dataset test;
    const bool have_test = !test_csv.empty();
    if (have_test) test = dataset_from_table(read_table(test_csv), target, exclude);

    const HyperGrid grid = grid_json.empty() ? HyperGrid{} : grid_from_json_file(grid_json);
    const FitReport report = fit_report(train, have_test ? &test : nullptr, grid, TreeParams{}, seed);
    write_report_json(report, out_json);

    ordered_json cfg;
    cfg["command"] = "fit";
    cfg["train"] = train_csv;
    cfg["test"] = test_csv.empty() ? nullptr : ordered_json(test_csv);
    cfg["target"] = target;
    cfg["seed"] = seed;
    cfg["grid"] = grid_json.empty() ? nullptr : ordered_json(grid_json);
    cfg["exclude"] = exclude;
    cfg["out"] = out_json;
    write_config_echo(out_json, false, cfg);
}

namespace {

void write_coefficients_csv(const FitReport& report, const std::string& path) {
    std::ostringstream os;
    os << "feature,mean,stderr\n";
    for (const auto& c : report.coefficients)
        os << c.name << ',' << format_double(c.mean) << ',' << format_double(c.stderr_) << '\n';
    write_text(path, os.str());
}

} // namespace

void run_report_cmd(const std::string& report_json, const std::string& out_table,
                    const std::string& out_coefficients) {
    const FitReport report = read_report_json(report_json);
    write_text(out_table, render_report_text(report));
    write_coefficients_csv(report, out_coefficients);

    ordered_json cfg;
    cfg["command"] = "report";
    cfg["in"] = report_json;
    cfg["table"] = out_table;
    cfg["coefficients"] = out_coefficients;
    write_config_echo(out_table, false, cfg);
}

// ------------------------------------------------------------------
// pipeline
// ------------------------------------------------------------------

void run_pipeline_cmd(const std::string& data_dir, const std::string& out_dir,
                      const PipelineOptions& options) {
    // discover patients
    std::vector<std::string> patients;
    for (const auto& entry : fs::directory_iterator(data_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "image.nii") &&
            fs::exists(entry.path() / "gt.nii"))
            patients.push_back(entry.path().filename().string());
    std::sort(patients.begin(), patients.end());
    if (patients.empty()) fail(ErrorCode::IoFailure, "no patient directories under " + data_dir);

    struct PatientResult {
        FeatureTable lesions;
        FeatureTable features; // with lsu + iou_adj appended
        DetectionCounts detection;
        std::exception_ptr error;
    };
    std::vector<PatientResult> results(patients.size());

    auto process = [&](std::size_t idx) {
        try {
            const fs::path dir = fs::path(data_dir) / patients[idx];
            const auto sample_paths = glob_paths((dir / "sample_*.nii").string());
            SubjectArtifacts art = lesions_for_samples(sample_paths, patients[idx], options.threshold,
                                                       options.connectivity, options.min_size,
                                                       options.with_entropy);
            results[idx].lesions = lesions_table(art);

            const Volume image = read_nifti((dir / "image.nii").string());
            const Volume gt_vol = read_nifti((dir / "gt.nii").string());
            Volume atlas;
            const bool have_atlas = fs::exists(dir / "atlas.nii");
            if (have_atlas) atlas = read_nifti((dir / "atlas.nii").string());
            std::vector<StructureCentroid> centroids;
            if (have_atlas) centroids = atlas_centroids(atlas);

            FeatureTable features = lesion_feature_table(image, art.subject.final_instances, patients[idx],
                                                         have_atlas ? &atlas : nullptr,
                                                         have_atlas ? &centroids : nullptr, options.bins);

            const InstanceSet gts = connected_components(gt_vol, conn(options.connectivity),
                                                         {InstanceSource::GroundTruth, -1});
            results[idx].detection = detection_f1(art.subject.final_instances, gts, options.tau);
            const auto matches = match_instances(art.subject.final_instances, gts, options.tau);

            std::map<std::pair<std::string, std::int64_t>, double> lsu, adj;
            for (std::size_t i = 0; i < art.subject.lesions.size(); ++i)
                lsu[{patients[idx], art.subject.final_instances.instances[i].id}] =
                    art.subject.lesions[i].lsu;
            for (const auto& m : matches) adj[{patients[idx], m.pred_id}] = m.iou_adj;
            append_column(features, "lsu", lsu, 0.0);
            append_column(features, "iou_adj", adj, 0.0);
            results[idx].features = std::move(features);
        } catch (...) {
            results[idx].error = std::current_exception();
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < patients.size(); ++i) process(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        for (int t = 0; t < std::min<int>(jobs, static_cast<int>(patients.size())); ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= patients.size()) return;
                        idx = next++;
                    }
                    process(idx);
                }
            });
        for (auto& t : pool) t.join();
    }
    for (const auto& r : results)
        if (r.error) std::rethrow_exception(r.error);

    fs::create_directories(out_dir);

    // merged per-lesion outputs in patient order
    std::vector<FeatureTable> lesion_parts, feature_parts;
    for (const auto& r : results) {
        lesion_parts.push_back(r.lesions);
        feature_parts.push_back(r.features);
    }
    const FeatureTable all_lesions = merge_tables(lesion_parts);
    write_table(all_lesions, (fs::path(out_dir) / "lesions.csv").string());

    // train/test split by patient
    std::vector<std::string> shuffled = patients;
    Rng rng(derive_seed(options.seed, 0x5eedULL));
    rng.shuffle(shuffled);
    std::size_t n_test = static_cast<std::size_t>(std::llround(options.test_fraction * patients.size()));
    n_test = std::min(n_test, patients.size() - 1);
    std::set<std::string> test_set(shuffled.begin(), shuffled.begin() + n_test);

    std::vector<FeatureTable> train_parts, test_parts;
    for (std::size_t i = 0; i < patients.size(); ++i)
        (test_set.count(patients[i]) ? test_parts : train_parts).push_back(results[i].features);
    const FeatureTable train_table = merge_tables(train_parts);
    write_table(train_table, (fs::path(out_dir) / "features_train.csv").string());
    FeatureTable test_table;
    if (!test_parts.empty()) {
        test_table = merge_tables(test_parts);
        write_table(test_table, (fs::path(out_dir) / "features_test.csv").string());
    }

    // detection summary
    ordered_json eval_json;
    DetectionCounts total;
    ordered_json per_patient = ordered_json::object();
    for (std::size_t i = 0; i < patients.size(); ++i) {
        per_patient[patients[i]] = detection_json(results[i].detection);
        total.tp += results[i].detection.tp;
        total.fp += results[i].detection.fp;
        total.fn += results[i].detection.fn;
    }
    total.f1 = (total.tp + total.fp + total.fn) == 0
                   ? 1.0
                   : (2.0 * total.tp) / (2.0 * total.tp + total.fp + total.fn);
    eval_json["total"] = detection_json(total);
    eval_json["per_patient"] = per_patient;
    write_text((fs::path(out_dir) / "eval.json").string(), eval_json.dump(2) + "\n");

    // fit LSU on the training patients
    const Dataset train = dataset_from_table(train_table, "lsu", options.exclude);
    Dataset test;
    if (!test_parts.empty()) test = dataset_from_table(test_table, "lsu", options.exclude);
    const HyperGrid grid = options.grid_json.empty() ? HyperGrid{} : grid_from_json_file(options.grid_json);
    const FitReport report =
        fit_report(train, test_parts.empty() ? nullptr : &test, grid, TreeParams{}, options.seed);
    write_report_json(report, (fs::path(out_dir) / "report.json").string());
    write_text((fs::path(out_dir) / "report.txt").string(), render_report_text(report));
    write_coefficients_csv(report, (fs::path(out_dir) / "coefficients.csv").string());

    ordered_json cfg;
    cfg["command"] = "pipeline";
    cfg["data"] = data_dir;
    cfg["out"] = out_dir;
    cfg["threshold"] = options.threshold;
    cfg["connectivity"] = options.connectivity;
    cfg["bins"] = options.bins;
    cfg["tau"] = options.tau;
    cfg["seed"] = options.seed;
    cfg["test_fraction"] = options.test_fraction;
    cfg["min_size"] = options.min_size;
    cfg["jobs"] = options.jobs;
    cfg["with_entropy"] = options.with_entropy;
    cfg["grid"] = options.grid_json.empty() ? nullptr : ordered_json(options.grid_json);
    cfg["exclude"] = options.exclude;
    cfg["patients"] = patients;
    cfg["test_patients"] = std::vector<std::string>(test_set.begin(), test_set.end());
    write_config_echo(out_dir, true, cfg);
}

} // namespace lunc

#ifndef LESIONUNC_PIPELINE_HPP
#define LESIONUNC_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lunc {

// Library-side implementations of the CLI subcommands. Every command echoes
// its fully resolved configuration: directory outputs get <out>/config.json,
// file outputs <out>.config.json.

void run_synth_cmd(const std::string& spec_json_path, std::uint64_t seed_override,
                   const std::string& out_dir);

void run_lesions_cmd(const std::string& samples_glob, const std::string& patient_id,
                     double threshold, int connectivity, std::int64_t min_size, bool with_entropy,
                     const std::string& out_csv, const std::string& out_instances);

void run_features_cmd(const std::string& image_path, const std::string& instances_path,
                      const std::string& lesions_csv, const std::string& atlas_path,
                      const std::string& centroids_csv, int bins, const std::string& out_csv);

void run_eval_cmd(const std::string& pred_path, const std::string& gt_path, double tau,
                  int connectivity, const std::string& patient_id, const std::string& out_json,
                  const std::string& out_csv);

void run_fit_cmd(const std::string& train_csv, const std::string& test_csv, const std::string& target,
                 std::uint64_t seed, const std::string& grid_json, const std::vector<std::string>& exclude,
                 const std::string& out_json);

void run_report_cmd(const std::string& report_json, const std::string& out_table,
                    const std::string& out_coefficients);

struct PipelineOptions {
    double threshold = 0.55;
    int connectivity = 26;
    int bins = 16;
    double tau = 0.25;
    std::uint64_t seed = 17;
    double test_fraction = 0.3;
    std::int64_t min_size = 0;
    int jobs = 1;
    bool with_entropy = false;
    std::string grid_json;              // optional hyperparameter grid file
    std::vector<std::string> exclude;   // feature columns excluded from the fit
};

// Chain lesions -> features -> eval -> fit over a dataset directory laid out
// as <data>/<patient>/{image.nii,gt.nii,atlas.nii,sample_*.nii}. Patients are
// split into train/test groups by seeded shuffle. Outputs: lesions.csv,
// features_train.csv, features_test.csv, eval.json, report.json, report.txt,
// coefficients.csv, config.json.
void run_pipeline_cmd(const std::string& data_dir, const std::string& out_dir,
                      const PipelineOptions& options);

} // namespace lunc

#endif

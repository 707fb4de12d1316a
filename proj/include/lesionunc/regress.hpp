#ifndef LESIONUNC_REGRESS_HPP
#define LESIONUNC_REGRESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lesionunc/table.hpp"

namespace lunc {

// ------------------------------------------------------------------
// design matrix with patient grouping
// ------------------------------------------------------------------

struct Dataset {
    std::vector<std::string> feature_names; // d
    std::vector<double> x;                  // n*d row-major
    std::vector<double> y;                  // n
    std::vector<std::string> groups;        // patient per row

    std::size_t n() const { return y.size(); }
    std::size_t d() const { return feature_names.size(); }
    double at(std::size_t r, std::size_t c) const { return x[r * feature_names.size() + c]; }
};

// Pull a regression dataset out of a feature table: target column by name,
// all other numeric columns become features minus the excluded names.
Dataset dataset_from_table(const FeatureTable& t, const std::string& target,
                           const std::vector<std::string>& exclude);

// ------------------------------------------------------------------
// standardization
// ------------------------------------------------------------------

struct Standardization {
    std::vector<std::string> kept;     // columns with nonzero variance
    std::vector<std::string> dropped;  // constant columns
    std::vector<double> mean, stddev;  // per kept column (population std)
};

// Column-wise (x - mean) / std with zero-variance columns removed.
Standardization standardize(Dataset& data);
// apply train statistics to another dataset (e.g. the test split)
void apply_standardization(const Standardization& s, Dataset& data);

// ------------------------------------------------------------------
// CART regression tree + RFE
// ------------------------------------------------------------------

struct TreeParams {
    int max_depth = 5;
    int min_leaf = 5;
};

struct RegressionTree {
    struct Node {
        int feature = -1; // -1 for leaves
        double threshold = 0.0;
        double value = 0.0; // mean response, leaves
        int left = -1, right = -1;
    };
    std::vector<Node> nodes;
    std::vector<double> importance; // variance reduction per feature, sums to 1

    double predict(const double* row, std::size_t stride = 1) const;
};

// Greedy binary splits minimizing weighted child variance. Split ties break
// on (lower feature index, lower threshold).
RegressionTree fit_tree(const Dataset& data, const TreeParams& params);

// Recursive feature elimination: repeatedly drop the single least important
// feature (ties -> higher index) until ceil(keep_fraction * d) remain.
// elimination_order lists features from first-dropped to last; selected(k)
// is then the suffix of size k.
struct RfeResult {
    std::vector<int> elimination_order;               // indices into data features
    std::vector<std::string> selected(const Dataset& data, double keep_fraction) const;
    std::vector<int> selected_indices(std::size_t d, double keep_fraction) const;
};

RfeResult rfe(const Dataset& data, const TreeParams& params);

// ------------------------------------------------------------------
// ElasticNet via cyclic coordinate descent
// ------------------------------------------------------------------

struct ElasticNetParams {
    double alpha = 0.0;
    double l1_ratio = 0.5; // 1 = lasso, 0 = ridge
    bool fit_intercept = true;
    double tol = 1e-6;      // max coordinate update
    int max_sweeps = 10000;
};

struct ElasticNetModel {
    std::vector<double> weights; // per feature of the fitted design
    double intercept = 0.0;
    std::vector<double> objective_trace; // value after every sweep
    int sweeps = 0;

    double predict_row(const double* row, std::size_t stride = 1) const;
};

// minimizes (1/2n)||y - Xw - b||^2 + alpha*(l1*||w||_1 + (1-l1)/2*||w||^2)
ElasticNetModel fit_elastic_net(const Dataset& data, const ElasticNetParams& params,
                                const std::vector<double>* warm_start = nullptr);

double elastic_net_objective(const Dataset& data, const ElasticNetParams& params,
                             const std::vector<double>& weights, double intercept);

// 1 - SS_res / SS_tot; ConstantTarget when y_true has no variance
double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// ------------------------------------------------------------------
// grouped cross-validation + grid search
// ------------------------------------------------------------------

struct HyperGrid {
    std::vector<double> keep_fraction{0.25, 0.5, 0.75, 1.0};
    std::vector<double> alpha; // default: 9 points log-spaced 1e-4..1e0
    std::vector<double> l1_ratio{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<int> fit_intercept{1, 0};

    HyperGrid();
};

HyperGrid grid_from_json_file(const std::string& path);

struct HyperChoice {
    double keep_fraction = 1.0;
    double alpha = 0.0;
    double l1_ratio = 0.5;
    bool fit_intercept = true;
    double cv_r2 = 0.0; // mean validation R^2 of the winning point
};

// Group-aware fold assignment: all rows of a patient share a fold; folds are
// balanced by row count, seeded. Returns fold index per row.
std::vector<int> grouped_folds(const std::vector<std::string>& groups, int k, std::uint64_t seed);

// Five-fold grouped CV over the grid; the full pipeline
// (standardize -> rfe -> elastic net) is refit inside every fold. Ties take
// the smaller alpha, then larger l1_ratio, then smaller keep_fraction, then
// intercept off.
HyperChoice cv_select(const Dataset& data, const HyperGrid& grid, const TreeParams& tree_params,
                      std::uint64_t seed);

// ------------------------------------------------------------------
// repeated-seed report
// ------------------------------------------------------------------

struct CoefficientStat {
    std::string name;
    double mean = 0.0;
    double stderr_ = 0.0; // sample std over seeds / sqrt(#seeds)
};

struct SeedRun {
    std::uint64_t seed = 0;
    HyperChoice choice;
    double cv_r2 = 0.0;
    std::optional<double> test_r2; // per-patient average, absent without test data
};

struct FitReport {
    int n_seeds = 10;
    double cv_r2_mean = 0.0, cv_r2_stderr = 0.0;
    std::optional<double> test_r2_mean;
    std::optional<double> test_r2_stderr;
    int test_patients_used = 0;
    int test_patients_skipped = 0; // < 2 lesions or constant target
    std::vector<CoefficientStat> coefficients; // standardized units; intercept last as "(intercept)"
    std::vector<SeedRun> runs;
    std::vector<std::string> feature_names;
};

FitReport fit_report(const Dataset& train, const Dataset* test, const HyperGrid& grid,
                     const TreeParams& tree_params, std::uint64_t master_seed, int n_seeds = 10);

void write_report_json(const FitReport& report, const std::string& path);
FitReport read_report_json(const std::string& path);

} // namespace lunc

#endif

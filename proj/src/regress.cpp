#include "lesionunc/regress.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "lesionunc/error.hpp"
#include "lesionunc/rng.hpp"

namespace lunc {

using ordered_json = nlohmann::ordered_json;

// ------------------------------------------------------------------
// dataset plumbing
// ------------------------------------------------------------------

Dataset dataset_from_table(const FeatureTable& t, const std::string& target,
                           const std::vector<std::string>& exclude) {
    const int tc = t.col_index(target);
    if (tc < 0) fail(ErrorCode::InvalidArgument, "target column '" + target + "' not in table");
    std::set<std::string> skip(exclude.begin(), exclude.end());
    skip.insert(target);

    Dataset d;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < t.cols(); ++c) {
        if (skip.count(t.columns[c])) continue;
        cols.push_back(c);
        d.feature_names.push_back(t.columns[c]);
    }
    d.x.reserve(t.rows() * cols.size());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c : cols) d.x.push_back(t.at(r, c));
        d.y.push_back(t.at(r, static_cast<std::size_t>(tc)));
        d.groups.push_back(t.patient_ids[r]);
    }
    return d;
}

namespace {

void check_finite(const Dataset& data) {
    for (double v : data.x)
        if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite feature value");
    for (double v : data.y)
        if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "non-finite target value");
}

Dataset subset_columns(const Dataset& data, const std::vector<int>& cols) {
    Dataset out;
    out.y = data.y;
    out.groups = data.groups;
    for (int c : cols) out.feature_names.push_back(data.feature_names[c]);
    out.x.reserve(data.n() * cols.size());
    for (std::size_t r = 0; r < data.n(); ++r)
        for (int c : cols) out.x.push_back(data.at(r, c));
    return out;
}

} // namespace

// ------------------------------------------------------------------
// standardization
// ------------------------------------------------------------------

Standardization standardize(Dataset& data) {
    if (data.n() < 2) fail(ErrorCode::InvalidArgument, "standardization needs n >= 2");
    Standardization s;
    const std::size_t n = data.n(), d = data.d();
    std::vector<int> kept_cols;
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += data.at(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double dv = data.at(r, c) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        if (var <= 0.0) {
            s.dropped.push_back(data.feature_names[c]);
            continue;
        }
        kept_cols.push_back(static_cast<int>(c));
        s.kept.push_back(data.feature_names[c]);
        s.mean.push_back(mean);
        s.stddev.push_back(std::sqrt(var));
    }
    Dataset reduced = subset_columns(data, kept_cols);
    for (std::size_t c = 0; c < reduced.d(); ++c)
        for (std::size_t r = 0; r < reduced.n(); ++r)
            reduced.x[r * reduced.d() + c] = (reduced.at(r, c) - s.mean[c]) / s.stddev[c];
    data = std::move(reduced);
    return s;
}

void apply_standardization(const Standardization& s, Dataset& data) {
    std::vector<int> cols;
    for (const auto& name : s.kept) {
        auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
        if (it == data.feature_names.end())
            fail(ErrorCode::InvalidArgument, "column '" + name + "' missing when applying standardization");
        cols.push_back(static_cast<int>(it - data.feature_names.begin()));
    }
    Dataset reduced = subset_columns(data, cols);
    for (std::size_t c = 0; c < reduced.d(); ++c)
        for (std::size_t r = 0; r < reduced.n(); ++r)
            reduced.x[r * reduced.d() + c] = (reduced.at(r, c) - s.mean[c]) / s.stddev[c];
    data = std::move(reduced);
}

// ------------------------------------------------------------------
// CART regression tree
// ------------------------------------------------------------------

double RegressionTree::predict(const double* row, std::size_t stride) const {
    int cur = 0;
    while (nodes[cur].feature >= 0)
        cur = (row[nodes[cur].feature * stride] <= nodes[cur].threshold) ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].value;
}

RegressionTree fit_tree(const Dataset& data, const TreeParams& params) {
    check_finite(data);
    const std::size_t n = data.n(), d = data.d();
    if (n < 2 * static_cast<std::size_t>(params.min_leaf))
        fail(ErrorCode::InvalidArgument, "tree needs n >= 2*min_leaf");

    RegressionTree tree;
    tree.importance.assign(d, 0.0);

    struct Job {
        std::vector<int> rows;
        int depth;
        int node_index;
    };

    auto node_stats = [&](const std::vector<int>& rows, double& mean, double& sse) {
        double sum = 0.0, sum2 = 0.0;
        for (int r : rows) {
            sum += data.y[r];
            sum2 += data.y[r] * data.y[r];
        }
        mean = sum / static_cast<double>(rows.size());
        sse = std::max(0.0, sum2 - sum * sum / static_cast<double>(rows.size()));
    };

    std::vector<Job> stack;
    {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        tree.nodes.emplace_back();
        stack.push_back({std::move(all), 0, 0});
    }

    while (!stack.empty()) {
        Job job = std::move(stack.back());
        stack.pop_back();
        double mean, sse;
        node_stats(job.rows, mean, sse);
        RegressionTree::Node& node = tree.nodes[job.node_index];
        node.value = mean;

        const bool can_split = job.depth < params.max_depth &&
                               job.rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf) && sse > 0.0;
        if (!can_split) continue;

        // exact greedy split: scan each feature sorted, prefix sums
        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<int> order;
        for (std::size_t c = 0; c < d; ++c) {
            order = job.rows;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double va = data.at(a, c), vb = data.at(b, c);
                if (va != vb) return va < vb;
                return a < b;
            });
            double lsum = 0.0, lsum2 = 0.0;
            double tsum = 0.0, tsum2 = 0.0;
            for (int r : order) {
                tsum += data.y[r];
                tsum2 += data.y[r] * data.y[r];
            }
            const std::size_t m = order.size();
            for (std::size_t i = 0; i + 1 < m; ++i) {
                const int r = order[i];
                lsum += data.y[r];
                lsum2 += data.y[r] * data.y[r];
                const double xv = data.at(r, c), xnext = data.at(order[i + 1], c);
                if (xv == xnext) continue;
                const std::size_t ln = i + 1, rn = m - ln;
                if (ln < static_cast<std::size_t>(params.min_leaf) || rn < static_cast<std::size_t>(params.min_leaf))
                    continue;
                const double lsse = lsum2 - lsum * lsum / static_cast<double>(ln);
                const double rsum = tsum - lsum, rsum2 = tsum2 - lsum2;
                const double rsse = rsum2 - rsum * rsum / static_cast<double>(rn);
                const double gain = sse - (lsse + rsse);
                // strict improvement keeps the (lower feature, lower threshold) tie rule
                if (gain > best_gain + 1e-12 * (1.0 + std::abs(best_gain))) {
                    best_gain = gain;
                    best_feature = static_cast<int>(c);
                    best_threshold = 0.5 * (xv + xnext);
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<int> left, right;
        for (int r : job.rows)
            (data.at(r, best_feature) <= best_threshold ? left : right).push_back(r);
        if (left.empty() || right.empty()) continue;

        // work through indices: emplace_back invalidates node references
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int ri = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[job.node_index].feature = best_feature;
        tree.nodes[job.node_index].threshold = best_threshold;
        tree.nodes[job.node_index].left = li;
        tree.nodes[job.node_index].right = ri;
        tree.importance[best_feature] += best_gain;
        stack.push_back({std::move(right), job.depth + 1, ri});
        stack.push_back({std::move(left), job.depth + 1, li});
    }

    const double total = std::accumulate(tree.importance.begin(), tree.importance.end(), 0.0);
    if (total > 0.0)
        for (auto& v : tree.importance) v /= total;
    return tree;
}

// ------------------------------------------------------------------
// recursive feature elimination
// ------------------------------------------------------------------

std::vector<int> RfeResult::selected_indices(std::size_t d, double keep_fraction) const {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        fail(ErrorCode::InvalidArgument, "keep_fraction must lie in (0,1]");
    std::size_t k = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(d)));
    k = std::clamp<std::size_t>(k, 1, d);
    std::vector<int> out(elimination_order.end() - static_cast<std::ptrdiff_t>(k), elimination_order.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> RfeResult::selected(const Dataset& data, double keep_fraction) const {
    std::vector<std::string> names;
    for (int c : selected_indices(data.d(), keep_fraction)) names.push_back(data.feature_names[c]);
    return names;
}

RfeResult rfe(const Dataset& data, const TreeParams& params) {
    RfeResult result;
    std::vector<int> active(data.d());
    std::iota(active.begin(), active.end(), 0);

    while (active.size() > 1) {
        Dataset sub = subset_columns(data, active);
        RegressionTree tree = fit_tree(sub, params);
        // drop the least important feature, ties -> higher original index
        std::size_t worst = 0;
        for (std::size_t i = 1; i < active.size(); ++i)
            if (tree.importance[i] < tree.importance[worst] ||
                (tree.importance[i] == tree.importance[worst] && active[i] > active[worst]))
                worst = i;
        result.elimination_order.push_back(active[worst]);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    result.elimination_order.push_back(active.front());
    return result;
}

// ------------------------------------------------------------------
// elastic net
// ------------------------------------------------------------------

double ElasticNetModel::predict_row(const double* row, std::size_t stride) const {
    double v = intercept;
    for (std::size_t c = 0; c < weights.size(); ++c) v += weights[c] * row[c * stride];
    return v;
}

double elastic_net_objective(const Dataset& data, const ElasticNetParams& params,
                             const std::vector<double>& weights, double intercept) {
    const std::size_t n = data.n(), d = data.d();
    double rss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double pred = intercept;
        for (std::size_t c = 0; c < d; ++c) pred += weights[c] * data.at(r, c);
        const double e = data.y[r] - pred;
        rss += e * e;
    }
    double l1 = 0.0, l2 = 0.0;
    for (double w : weights) {
        l1 += std::abs(w);
        l2 += w * w;
    }
    return rss / (2.0 * static_cast<double>(n)) +
           params.alpha * (params.l1_ratio * l1 + 0.5 * (1.0 - params.l1_ratio) * l2);
}

ElasticNetModel fit_elastic_net(const Dataset& data, const ElasticNetParams& params,
                                const std::vector<double>* warm_start) {
    check_finite(data);
    if (params.alpha < 0.0) fail(ErrorCode::InvalidArgument, "alpha must be >= 0");
    const std::size_t n = data.n(), d = data.d();
    if (n == 0) fail(ErrorCode::InvalidArgument, "empty design matrix");

    ElasticNetModel model;
    model.weights.assign(d, 0.0);
    if (warm_start && warm_start->size() == d) model.weights = *warm_start;

    std::vector<double> col_sq(d, 0.0); // (1/n) sum x^2 per column
    for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += data.at(r, c) * data.at(r, c);
        col_sq[c] = s / static_cast<double>(n);
    }

    // maintained residual r = y - Xw - b
    std::vector<double> resid = data.y;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) resid[r] -= model.weights[c] * data.at(r, c);

    const double soft = params.alpha * params.l1_ratio;
    const double ridge = params.alpha * (1.0 - params.l1_ratio);

    if (params.fit_intercept) {
        double mean_r = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(n);
        model.intercept = mean_r;
        for (auto& v : resid) v -= mean_r;
    }

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        double max_update = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double denom = col_sq[c] + ridge;
            if (denom == 0.0) continue;
            double rho = 0.0;
            for (std::size_t r = 0; r < n; ++r) rho += data.at(r, c) * resid[r];
            rho = rho / static_cast<double>(n) + col_sq[c] * model.weights[c];
            double w_new = 0.0;
            if (rho > soft)
                w_new = (rho - soft) / denom;
            else if (rho < -soft)
                w_new = (rho + soft) / denom;
            const double delta = w_new - model.weights[c];
            if (delta != 0.0) {
                for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * data.at(r, c);
                model.weights[c] = w_new;
                max_update = std::max(max_update, std::abs(delta));
            }
        }
        if (params.fit_intercept) {
            const double mean_r = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(n);
            if (mean_r != 0.0) {
                model.intercept += mean_r;
                for (auto& v : resid) v -= mean_r;
                max_update = std::max(max_update, std::abs(mean_r));
            }
        }
        model.objective_trace.push_back(elastic_net_objective(data, params, model.weights, model.intercept));
        model.sweeps = sweep + 1;
        if (max_update < params.tol) break;
    }
    return model;
}

double r_squared(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() < 2)
        fail(ErrorCode::InvalidArgument, "r_squared needs two aligned vectors, n >= 2");
    const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot == 0.0) fail(ErrorCode::ConstantTarget, "target has no variance");
    return 1.0 - ss_res / ss_tot;
}

// ------------------------------------------------------------------
// grouped folds + grid search
// ------------------------------------------------------------------

HyperGrid::HyperGrid() {
    for (int k = 0; k <= 8; ++k) alpha.push_back(std::pow(10.0, -4.0 + 0.5 * k));
}

HyperGrid grid_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open grid file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::InvalidArgument, "bad grid JSON: " + std::string(e.what()));
    }
    HyperGrid g;
    if (j.contains("keep_fraction")) g.keep_fraction = j["keep_fraction"].get<std::vector<double>>();
    if (j.contains("alpha")) g.alpha = j["alpha"].get<std::vector<double>>();
    if (j.contains("l1_ratio")) g.l1_ratio = j["l1_ratio"].get<std::vector<double>>();
    if (j.contains("fit_intercept")) {
        g.fit_intercept.clear();
        for (const auto& b : j["fit_intercept"]) g.fit_intercept.push_back(b.get<bool>() ? 1 : 0);
    }
    if (g.keep_fraction.empty() || g.alpha.empty() || g.l1_ratio.empty() || g.fit_intercept.empty())
        fail(ErrorCode::InvalidArgument, "grid must keep at least one value per dimension");
    return g;
}

std::vector<int> grouped_folds(const std::vector<std::string>& groups, int k, std::uint64_t seed) {
    std::map<std::string, int> count;
    for (const auto& g : groups) ++count[g];
    if (static_cast<int>(count.size()) < k)
        fail(ErrorCode::TooFewGroups, std::to_string(count.size()) + " patient groups for " +
                                          std::to_string(k) + " folds");

    std::vector<std::string> patients;
    for (const auto& [name, c] : count) patients.push_back(name);
    Rng rng(seed);
    rng.shuffle(patients);
    // big patients first; the shuffle decides ties
    std::stable_sort(patients.begin(), patients.end(),
                     [&](const std::string& a, const std::string& b) { return count[a] > count[b]; });

    std::map<std::string, int> fold_of;
    std::vector<int> load(k, 0);
    for (const auto& p : patients) {
        int best = 0;
        for (int f = 1; f < k; ++f)
            if (load[f] < load[best]) best = f;
        fold_of[p] = best;
        load[best] += count[p];
    }
    std::vector<int> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(fold_of[g]);
    return out;
}

namespace {

Dataset rows_subset(const Dataset& data, const std::vector<int>& rows) {
    Dataset out;
    out.feature_names = data.feature_names;
    out.x.reserve(rows.size() * data.d());
    for (int r : rows) {
        for (std::size_t c = 0; c < data.d(); ++c) out.x.push_back(data.at(r, c));
        out.y.push_back(data.y[r]);
        out.groups.push_back(data.groups[r]);
    }
    return out;
}

// prefer higher r2; ties -> smaller alpha, larger l1_ratio, smaller keep_fraction, intercept off
bool choice_better(const HyperChoice& a, const HyperChoice& b) {
    if (a.cv_r2 != b.cv_r2) return a.cv_r2 > b.cv_r2;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    if (a.l1_ratio != b.l1_ratio) return a.l1_ratio > b.l1_ratio;
    if (a.keep_fraction != b.keep_fraction) return a.keep_fraction < b.keep_fraction;
    return a.fit_intercept < b.fit_intercept;
}

} // namespace

HyperChoice cv_select(const Dataset& data, const HyperGrid& grid, const TreeParams& tree_params,
                      std::uint64_t seed) {
    check_finite(data);
    const int k_folds = 5;
    const std::vector<int> fold = grouped_folds(data.groups, k_folds, seed);

    struct FoldState {
        Dataset train; // standardized
        Dataset val;   // raw columns matching train's kept set, standardized
        RfeResult rfe_order;
        bool val_usable = true;
    };
    std::vector<FoldState> folds(k_folds);
    for (int f = 0; f < k_folds; ++f) {
        std::vector<int> tr, va;
        for (std::size_t r = 0; r < data.n(); ++r)
            (fold[r] == f ? va : tr).push_back(static_cast<int>(r));
        FoldState& st = folds[f];
        st.train = rows_subset(data, tr);
        st.val = rows_subset(data, va);
        const Standardization s = standardize(st.train);
        apply_standardization(s, st.val);
        st.rfe_order = rfe(st.train, tree_params);
        // a constant validation target cannot be scored
        if (st.val.n() < 2) st.val_usable = false;
        else {
            const double y0 = st.val.y.front();
            st.val_usable = std::any_of(st.val.y.begin(), st.val.y.end(), [&](double v) { return v != y0; });
        }
    }

    HyperChoice best;
    best.cv_r2 = -std::numeric_limits<double>::infinity();
    bool any = false;

    std::vector<double> alphas_desc = grid.alpha;
    std::sort(alphas_desc.begin(), alphas_desc.end(), std::greater<>());

    for (double kf : grid.keep_fraction) {
        // feature subsets per fold are fixed by (fold, keep_fraction)
        std::vector<Dataset> sub_train(k_folds), sub_val(k_folds);
        for (int f = 0; f < k_folds; ++f) {
            const auto cols = folds[f].rfe_order.selected_indices(folds[f].train.d(), kf);
            sub_train[f] = subset_columns(folds[f].train, cols);
            sub_val[f] = subset_columns(folds[f].val, cols);
        }
        for (double l1 : grid.l1_ratio)
            for (int intercept : grid.fit_intercept) {
                std::vector<std::vector<double>> warm(k_folds);
                for (double alpha : alphas_desc) {
                    double sum_r2 = 0.0;
                    int used = 0;
                    for (int f = 0; f < k_folds; ++f) {
                        ElasticNetParams p;
                        p.alpha = alpha;
                        p.l1_ratio = l1;
                        p.fit_intercept = intercept != 0;
                        ElasticNetModel m = fit_elastic_net(sub_train[f], p,
                                                            warm[f].empty() ? nullptr : &warm[f]);
                        warm[f] = m.weights;
                        if (!folds[f].val_usable) continue;
                        std::vector<double> pred(sub_val[f].n());
                        for (std::size_t r = 0; r < sub_val[f].n(); ++r)
                            pred[r] = m.predict_row(&sub_val[f].x[r * sub_val[f].d()]);
                        sum_r2 += r_squared(sub_val[f].y, pred);
                        ++used;
                    }
                    if (used == 0) continue;
                    HyperChoice c{kf, alpha, l1, intercept != 0, sum_r2 / used};
                    if (!any || choice_better(c, best)) {
                        best = c;
                        any = true;
                    }
                }
            }
    }
    if (!any) fail(ErrorCode::ConstantTarget, "no fold produced a scorable validation target");
    return best;
}

// ------------------------------------------------------------------
// repeated-seed fit report
// ------------------------------------------------------------------

namespace {

struct RefitModel {
    Standardization stdz;
    std::vector<std::string> selected;
    ElasticNetModel net;
};

RefitModel refit_full(const Dataset& raw, const HyperChoice& hp, const TreeParams& tree_params) {
    RefitModel out;
    Dataset train = raw;
    out.stdz = standardize(train);
    const RfeResult order = rfe(train, tree_params);
    const auto cols = order.selected_indices(train.d(), hp.keep_fraction);
    Dataset sub = subset_columns(train, cols);
    out.selected = sub.feature_names;
    ElasticNetParams p;
    p.alpha = hp.alpha;
    p.l1_ratio = hp.l1_ratio;
    p.fit_intercept = hp.fit_intercept;
    out.net = fit_elastic_net(sub, p);
    return out;
}

std::vector<double> predict_raw(const RefitModel& m, const Dataset& raw) {
    Dataset d = raw;
    apply_standardization(m.stdz, d);
    std::vector<int> cols;
    for (const auto& name : m.selected) {
        auto it = std::find(d.feature_names.begin(), d.feature_names.end(), name);
        cols.push_back(static_cast<int>(it - d.feature_names.begin()));
    }
    std::vector<double> pred(d.n());
    for (std::size_t r = 0; r < d.n(); ++r) {
        double v = m.net.intercept;
        for (std::size_t c = 0; c < cols.size(); ++c) v += m.net.weights[c] * d.at(r, cols[c]);
        pred[r] = v;
    }
    return pred;
}

} // namespace

FitReport fit_report(const Dataset& train, const Dataset* test, const HyperGrid& grid,
                     const TreeParams& tree_params, std::uint64_t master_seed, int n_seeds) {
    FitReport report;
    report.n_seeds = n_seeds;
    report.feature_names = train.feature_names;

    const std::size_t d = train.d();
    std::vector<std::vector<double>> coef_by_seed; // n_seeds x (d+1), intercept last
    std::vector<double> cv_scores, test_scores;

    for (int s = 0; s < n_seeds; ++s) {
        SeedRun run;
        run.seed = derive_seed(master_seed, static_cast<std::uint64_t>(s));
        run.choice = cv_select(train, grid, tree_params, run.seed);
        run.cv_r2 = run.choice.cv_r2;
        cv_scores.push_back(run.cv_r2);

        const RefitModel model = refit_full(train, run.choice, tree_params);
        std::vector<double> coefs(d + 1, 0.0);
        for (std::size_t c = 0; c < model.selected.size(); ++c) {
            auto it = std::find(train.feature_names.begin(), train.feature_names.end(), model.selected[c]);
            coefs[static_cast<std::size_t>(it - train.feature_names.begin())] = model.net.weights[c];
        }
        coefs[d] = model.net.intercept;
        coef_by_seed.push_back(std::move(coefs));

        if (test && test->n() > 0) {
            const std::vector<double> pred = predict_raw(model, *test);
            // per-patient R^2, averaged; patients with < 2 rows or constant target skipped
            std::map<std::string, std::vector<int>> by_patient;
            for (std::size_t r = 0; r < test->n(); ++r)
                by_patient[test->groups[r]].push_back(static_cast<int>(r));
            double sum = 0.0;
            int used = 0, skipped = 0;
            for (const auto& [patient, rows] : by_patient) {
                std::vector<double> yt, yp;
                for (int r : rows) {
                    yt.push_back(test->y[r]);
                    yp.push_back(pred[r]);
                }
                const bool constant = std::all_of(yt.begin(), yt.end(), [&](double v) { return v == yt.front(); });
                if (yt.size() < 2 || constant) {
                    ++skipped;
                    continue;
                }
                sum += r_squared(yt, yp);
                ++used;
            }
            report.test_patients_used = used;
            report.test_patients_skipped = skipped;
            if (used > 0) {
                run.test_r2 = sum / used;
                test_scores.push_back(*run.test_r2);
            }
        }
        report.runs.push_back(std::move(run));
    }

    auto mean_stderr = [](const std::vector<double>& v, double& mean, double& se) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        se = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) /
                                std::sqrt(static_cast<double>(v.size()))
                          : 0.0;
    };

    mean_stderr(cv_scores, report.cv_r2_mean, report.cv_r2_stderr);
    if (!test_scores.empty()) {
        double m, se;
        mean_stderr(test_scores, m, se);
        report.test_r2_mean = m;
        report.test_r2_stderr = se;
    }

    for (std::size_t c = 0; c <= d; ++c) {
        std::vector<double> v;
        for (const auto& coefs : coef_by_seed) v.push_back(coefs[c]);
        CoefficientStat stat;
        stat.name = (c == d) ? "(intercept)" : train.feature_names[c];
        mean_stderr(v, stat.mean, stat.stderr_);
        report.coefficients.push_back(std::move(stat));
    }
    return report;
}

// ------------------------------------------------------------------
// JSON serialization
// ------------------------------------------------------------------

void write_report_json(const FitReport& report, const std::string& path) {
    ordered_json j;
    j["n_seeds"] = report.n_seeds;
    j["cv_r2"] = {{"mean", report.cv_r2_mean}, {"stderr", report.cv_r2_stderr}};
    if (report.test_r2_mean) {
        j["test_r2"] = {{"mean", *report.test_r2_mean}, {"stderr", *report.test_r2_stderr}};
    } else {
        j["test_r2"] = nullptr;
    }
    j["test_patients"] = {{"used", report.test_patients_used}, {"skipped", report.test_patients_skipped}};
    j["features"] = report.feature_names;
    ordered_json coefs = ordered_json::array();
    for (const auto& c : report.coefficients)
        coefs.push_back({{"name", c.name}, {"mean", c.mean}, {"stderr", c.stderr_}});
    j["coefficients"] = coefs;
    ordered_json runs = ordered_json::array();
    for (const auto& r : report.runs) {
        ordered_json rj;
        rj["seed"] = r.seed;
        rj["keep_fraction"] = r.choice.keep_fraction;
        rj["alpha"] = r.choice.alpha;
        rj["l1_ratio"] = r.choice.l1_ratio;
        rj["fit_intercept"] = r.choice.fit_intercept;
        rj["cv_r2"] = r.cv_r2;
        if (r.test_r2) rj["test_r2"] = *r.test_r2;
        else rj["test_r2"] = nullptr;
        runs.push_back(rj);
    }
    j["runs"] = runs;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::IoFailure, "write failed: " + path);
}

FitReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::InvalidArgument, "bad report JSON: " + std::string(e.what()));
    }
    FitReport r;
    r.n_seeds = j["n_seeds"].get<int>();
    r.cv_r2_mean = j["cv_r2"]["mean"].get<double>();
    r.cv_r2_stderr = j["cv_r2"]["stderr"].get<double>();
    if (!j["test_r2"].is_null()) {
        r.test_r2_mean = j["test_r2"]["mean"].get<double>();
        r.test_r2_stderr = j["test_r2"]["stderr"].get<double>();
    }
    r.test_patients_used = j["test_patients"]["used"].get<int>();
    r.test_patients_skipped = j["test_patients"]["skipped"].get<int>();
    r.feature_names = j["features"].get<std::vector<std::string>>();
    for (const auto& c : j["coefficients"]) {
        CoefficientStat stat;
        stat.name = c["name"].get<std::string>();
        stat.mean = c["mean"].get<double>();
        stat.stderr_ = c["stderr"].get<double>();
        r.coefficients.push_back(std::move(stat));
    }
    for (const auto& rj : j["runs"]) {
        SeedRun run;
        run.seed = rj["seed"].get<std::uint64_t>();
        run.choice.keep_fraction = rj["keep_fraction"].get<double>();
        run.choice.alpha = rj["alpha"].get<double>();
        run.choice.l1_ratio = rj["l1_ratio"].get<double>();
        run.choice.fit_intercept = rj["fit_intercept"].get<bool>();
        run.cv_r2 = rj["cv_r2"].get<double>();
        if (!rj["test_r2"].is_null()) run.test_r2 = rj["test_r2"].get<double>();
        r.runs.push_back(std::move(run));
    }
    return r;
}

} // namespace lunc

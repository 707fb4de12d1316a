#include "lesionunc/eval.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "lesionunc/uncertainty.hpp"

namespace lunc {

namespace {

std::size_t intersection_size(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++inter; ++i; ++j; }
    }
    return inter;
}

// |(g ∩ others) \ p|
std::size_t explained_elsewhere(const std::vector<std::uint32_t>& p, const std::vector<std::uint32_t>& g,
                                const std::vector<std::uint32_t>& others) {
    std::size_t count = 0;
    std::size_t io = 0, ip = 0;
    for (std::uint32_t v : g) {
        while (io < others.size() && others[io] < v) ++io;
        if (io == others.size() || others[io] != v) continue;
        while (ip < p.size() && p[ip] < v) ++ip;
        if (ip < p.size() && p[ip] == v) continue;
        ++count;
    }
    return count;
}

struct Pair {
    int pred_index;
    int gt_index;
    double iou_adj_value;
};

} // namespace

double iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    return iou_sorted(a, b);
}

double iou_adj(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gt,
               const std::vector<std::uint32_t>& others) {
    if (pred.empty()) fail(ErrorCode::InvalidArgument, "predicted instance is empty");
    if (gt.empty()) return 0.0;
    const std::size_t inter = intersection_size(pred, gt);
    const std::size_t uni = pred.size() + gt.size() - inter;
    const std::size_t explained = explained_elsewhere(pred, gt, others);
    return static_cast<double>(inter) / static_cast<double>(uni - explained);
}

namespace {

// all machinery shared by match_instances and detection_f1
struct Matching {
    std::vector<MatchResult> records;
    int tp = 0;
};

Matching run_matching(const InstanceSet& preds, const InstanceSet& gts, double tau) {
    if (!(tau >= 0.0 && tau < 1.0))
        fail(ErrorCode::InvalidArgument, "tau must lie in [0,1), got " + std::to_string(tau));

    const std::size_t np = preds.instances.size();
    const std::size_t ng = gts.instances.size();

    // predictions partition a mask, so the union of "others" is a merge
    std::vector<std::uint32_t> all_pred;
    for (const auto& p : preds.instances)
        all_pred.insert(all_pred.end(), p.voxels.begin(), p.voxels.end());
    std::sort(all_pred.begin(), all_pred.end());

    std::vector<std::vector<std::uint32_t>> others(np);
    for (std::size_t i = 0; i < np; ++i) {
        const auto& own = preds.instances[i].voxels;
        others[i].reserve(all_pred.size() - own.size());
        std::set_difference(all_pred.begin(), all_pred.end(), own.begin(), own.end(),
                            std::back_inserter(others[i]));
    }

    Matching out;
    out.records.resize(np);
    std::vector<Pair> pairs;
    pairs.reserve(np * ng);

    for (std::size_t i = 0; i < np; ++i) {
        MatchResult& r = out.records[i];
        r.pred_id = preds.instances[i].id;
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t j = 0; j < ng; ++j) {
            const double v = iou_sorted(preds.instances[i].voxels, gts.instances[j].voxels);
            if (v > best_iou) {
                best_iou = v;
                best_gt = static_cast<int>(j);
            }
            const double adj = iou_adj(preds.instances[i].voxels, gts.instances[j].voxels, others[i]);
            if (adj > 0.0) pairs.push_back({static_cast<int>(i), static_cast<int>(j), adj});
        }
        if (best_gt >= 0) {
            r.gt_id = gts.instances[best_gt].id;
            r.iou = best_iou;
            r.iou_adj = iou_adj(preds.instances[i].voxels, gts.instances[best_gt].voxels, others[i]);
        }
    }

    // greedy one-to-one assignment by descending IoU_adj, deterministic ties
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.iou_adj_value != b.iou_adj_value) return a.iou_adj_value > b.iou_adj_value;
        return std::tie(a.pred_index, a.gt_index) < std::tie(b.pred_index, b.gt_index);
    });
    std::vector<char> pred_used(np, 0), gt_used(ng, 0);
    for (const auto& pr : pairs) {
        if (!(pr.iou_adj_value > tau)) break; // sorted, nothing below clears tau
        if (pred_used[pr.pred_index] || gt_used[pr.gt_index]) continue;
        pred_used[pr.pred_index] = 1;
        gt_used[pr.gt_index] = 1;
        out.records[pr.pred_index].tp_flag = true;
        ++out.tp;
    }
    return out;
}

} // namespace

std::vector<MatchResult> match_instances(const InstanceSet& preds, const InstanceSet& gts, double tau) {
    return run_matching(preds, gts, tau).records;
}

DetectionCounts detection_f1(const InstanceSet& preds, const InstanceSet& gts, double tau) {
    const std::size_t np = preds.instances.size();
    const std::size_t ng = gts.instances.size();
    DetectionCounts c;
    if (np == 0 && ng == 0) {
        c.f1 = 1.0;
        return c;
    }
    const Matching m = run_matching(preds, gts, tau);
    c.tp = m.tp;
    c.fp = static_cast<int>(np) - m.tp;
    c.fn = static_cast<int>(ng) - m.tp;
    c.f1 = (2.0 * c.tp) / (2.0 * c.tp + c.fp + c.fn);
    return c;
}

} // namespace lunc

#ifndef LESIONUNC_EVAL_HPP
#define LESIONUNC_EVAL_HPP

#include <optional>
#include <vector>

#include "lesionunc/instances.hpp"

namespace lunc {

struct MatchResult {
    int pred_id = 0;
    std::optional<int> gt_id;
    double iou = 0.0;
    double iou_adj = 0.0;
    bool tp_flag = false;
};

struct DetectionCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double f1 = 0.0;
};

// |a ∩ b| / |a ∪ b| over sorted linear-index sets. Both empty is an error.
double iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

// IoU with the union reduced by ground-truth voxels already explained by
// other predicted instances: |P∩G| / (|P∪G| - |(G∩others)\P|).
// G empty returns 0. `others` is the union of all other predictions' voxels.
double iou_adj(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gt,
               const std::vector<std::uint32_t>& others);

// Per-prediction match records: gt chosen by max IoU (ties -> smallest gt
// id), iou_adj computed against that gt with the remaining predictions as
// `others`. Unmatched predictions keep iou = iou_adj = 0. tp_flag mirrors
// the greedy detection assignment of detection_f1 at threshold tau.
std::vector<MatchResult> match_instances(const InstanceSet& preds, const InstanceSet& gts, double tau);

// A prediction is a true positive iff its max IoU_adj over ground-truth
// components exceeds tau, with each gt detected at most once (greedy by
// descending IoU_adj). Empty vs empty scores f1 = 1.
DetectionCounts detection_f1(const InstanceSet& preds, const InstanceSet& gts, double tau);

} // namespace lunc

#endif

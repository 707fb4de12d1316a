#ifndef LESIONUNC_UNCERTAINTY_HPP
#define LESIONUNC_UNCERTAINTY_HPP

#include <optional>
#include <vector>

#include "lesionunc/instances.hpp"
#include "lesionunc/volume.hpp"

namespace lunc {

// M sampled probability predictions on one grid. Immutable after build.
struct SampleSet {
    std::vector<Volume> samples;

    int m() const { return static_cast<int>(samples.size()); }
    const Volume& grid() const { return samples.front(); }
};

SampleSet make_sample_set(std::vector<Volume> samples);

struct LesionUncertainty {
    int lesion_id = 0;
    std::vector<double> per_sample_iou; // one per sample, input order
    double lsu = 0.0;                   // 1 - mean(per_sample_iou)
};

struct CorrespondResult {
    std::optional<int> matched_id;
    double iou = 0.0;
};

// voxel-wise arithmetic mean of the M samples
Volume mean_prediction(const SampleSet& s);

// per-voxel binary entropy, base 2, 0*log(0) == 0; values lie in [0,1]
Volume voxel_entropy(const Volume& p);
double binary_entropy(double p);

// per voxel: H(mean_m p_m) - (1/M) sum_m H(p_m), clamped at 0
Volume voxel_mutual_information(const SampleSet& s);

// The sample instance maximizing IoU with L; ties broken by smallest
// instance id. (none, 0) when nothing intersects L.
CorrespondResult correspond(const LesionInstance& lesion, const InstanceSet& sample_instances);

// Per-sample instance decompositions, computed once and shared by all
// lesions of a subject.
struct SampleComponents {
    std::vector<InstanceSet> per_sample;
};

SampleComponents extract_sample_components(const SampleSet& s, double t, Connectivity connectivity);

// LSU for one lesion of the thresholded mean prediction. The per-sample IoU
// list follows sample order; the mean is taken over the sorted values so the
// result is bitwise invariant under sample permutation.
LesionUncertainty lesion_structural_uncertainty(const LesionInstance& lesion,
                                                const SampleComponents& components);
LesionUncertainty lesion_structural_uncertainty(const LesionInstance& lesion, const SampleSet& s,
                                                double t, Connectivity connectivity);

// Whole-subject path used by the CLI: threshold the mean prediction, extract
// final instances, and compute LSU for each against cached sample components.
struct SubjectUncertainty {
    InstanceSet final_instances;
    std::vector<LesionUncertainty> lesions;
};

SubjectUncertainty compute_subject_uncertainty(const SampleSet& s, double t, Connectivity connectivity,
                                               std::int64_t min_size = 0);

double iou_sorted(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

} // namespace lunc

#endif

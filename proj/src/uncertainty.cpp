#include "lesionunc/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace lunc {

SampleSet make_sample_set(std::vector<Volume> samples) {
    if (samples.size() < 2)
        fail(ErrorCode::InvalidArgument, "a sample set needs M >= 2 members, got " +
                                             std::to_string(samples.size()));
    for (const auto& s : samples) {
        if (!s.same_grid(samples.front()))
            fail(ErrorCode::DimMismatch, "sample volumes disagree on dims or spacing");
        for (float v : s.data)
            if (!(v >= 0.0f && v <= 1.0f))
                fail(ErrorCode::InvalidVolume, "sample probability outside [0,1]: " + std::to_string(v));
    }
    return SampleSet{std::move(samples)};
}

Volume mean_prediction(const SampleSet& s) {
    const Volume& g = s.grid();
    Volume out = make_volume(g.dims, g.spacing, VolumeKind::Probability, 0.0f, g.origin);
    const std::int64_t n = g.voxel_count();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (const auto& sample : s.samples)
        for (std::int64_t i = 0; i < n; ++i) acc[i] += sample.data[i];
    const double inv_m = 1.0 / s.m();
    for (std::int64_t i = 0; i < n; ++i)
        out.data[i] = static_cast<float>(std::clamp(acc[i] * inv_m, 0.0, 1.0));
    return out;
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

Volume voxel_entropy(const Volume& p) {
    Volume out = make_volume(p.dims, p.spacing, VolumeKind::Intensity, 0.0f, p.origin);
    for (std::int64_t i = 0; i < p.voxel_count(); ++i) {
        const float v = p.data[i];
        if (!(v >= 0.0f && v <= 1.0f))
            fail(ErrorCode::InvalidVolume, "probability value outside [0,1]: " + std::to_string(v));
        out.data[i] = static_cast<float>(binary_entropy(v));
    }
    return out;
}

Volume voxel_mutual_information(const SampleSet& s) {
    const Volume& g = s.grid();
    Volume out = make_volume(g.dims, g.spacing, VolumeKind::Intensity, 0.0f, g.origin);
    const std::int64_t n = g.voxel_count();
    const double inv_m = 1.0 / s.m();
    for (std::int64_t i = 0; i < n; ++i) {
        double mean = 0.0, mean_entropy = 0.0;
        for (const auto& sample : s.samples) {
            const double p = sample.data[i];
            mean += p;
            mean_entropy += binary_entropy(p);
        }
        mean *= inv_m;
        mean_entropy *= inv_m;
        out.data[i] = static_cast<float>(std::max(0.0, binary_entropy(mean) - mean_entropy));
    }
    return out;
}

double iou_sorted(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (b[j] < a[i]) ++j;
        else { ++inter; ++i; ++j; }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) fail(ErrorCode::BothEmpty, "IoU of two empty voxel sets");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

CorrespondResult correspond(const LesionInstance& lesion, const InstanceSet& sample_instances) {
    CorrespondResult best;
    for (const auto& cand : sample_instances.instances) {
        const double v = iou_sorted(lesion.voxels, cand.voxels);
        if (v > best.iou || (v == best.iou && v > 0.0 && best.matched_id && cand.id < *best.matched_id)) {
            best.iou = v;
            best.matched_id = cand.id;
        }
    }
    if (best.iou == 0.0) best.matched_id.reset(); // no intersection counts as no match
    return best;
}

SampleComponents extract_sample_components(const SampleSet& s, double t, Connectivity connectivity) {
    SampleComponents out;
    out.per_sample.reserve(s.samples.size());
    for (int m = 0; m < s.m(); ++m) {
        InstanceSource src{InstanceSource::Sample, m};
        out.per_sample.push_back(connected_components(threshold(s.samples[m], t), connectivity, src));
    }
    return out;
}

LesionUncertainty lesion_structural_uncertainty(const LesionInstance& lesion,
                                                const SampleComponents& components) {
    LesionUncertainty u;
    u.lesion_id = lesion.id;
    u.per_sample_iou.reserve(components.per_sample.size());
    for (const auto& inst_set : components.per_sample)
        u.per_sample_iou.push_back(correspond(lesion, inst_set).iou);

    // sort before summing: the mean becomes bitwise invariant to sample order
    std::vector<double> sorted = u.per_sample_iou;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    u.lsu = 1.0 - sum / static_cast<double>(sorted.size());
    return u;
}

LesionUncertainty lesion_structural_uncertainty(const LesionInstance& lesion, const SampleSet& s,
                                                double t, Connectivity connectivity) {
    return lesion_structural_uncertainty(lesion, extract_sample_components(s, t, connectivity));
}

SubjectUncertainty compute_subject_uncertainty(const SampleSet& s, double t, Connectivity connectivity,
                                               std::int64_t min_size) {
    SubjectUncertainty out;
    const Volume final_mask = threshold(mean_prediction(s), t);
    out.final_instances = connected_components(final_mask, connectivity, {InstanceSource::FinalPrediction, -1});
    if (min_size > 1) out.final_instances = filter_min_size(out.final_instances, min_size);

    const SampleComponents components = extract_sample_components(s, t, connectivity);
    out.lesions.reserve(out.final_instances.instances.size());
    for (const auto& lesion : out.final_instances.instances)
        out.lesions.push_back(lesion_structural_uncertainty(lesion, components));
    return out;
}

} // namespace lunc

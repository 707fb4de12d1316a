#ifndef LESIONUNC_INSTANCES_HPP
#define LESIONUNC_INSTANCES_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "lesionunc/volume.hpp"

namespace lunc {

enum class Connectivity { Faces6 = 6, Edges18 = 18, Full26 = 26 };

Connectivity connectivity_from_int(int c);

struct InstanceSource {
    enum Kind { FinalPrediction, Sample, GroundTruth } kind = FinalPrediction;
    int sample_index = -1; // valid for Sample only
};

// One connected component of a binary mask. Voxels are stored as sorted
// linear indices (x-fastest) into the grid described by the owning set.
struct LesionInstance {
    int id = 0; // consecutive from 1, ordered by smallest linear index
    std::vector<std::uint32_t> voxels;
    InstanceSource source;
    double volume_mm3 = 0.0;
};

struct InstanceSet {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::vector<LesionInstance> instances;

    std::array<int, 3> coords(std::uint32_t linear) const {
        const int x = static_cast<int>(linear % static_cast<std::uint32_t>(dims[0]));
        const std::uint32_t rest = linear / static_cast<std::uint32_t>(dims[0]);
        const int y = static_cast<int>(rest % static_cast<std::uint32_t>(dims[1]));
        const int z = static_cast<int>(rest / static_cast<std::uint32_t>(dims[1]));
        return {x, y, z};
    }
};

// 26 neighbor offsets, the first 6 are the face neighbors, the next 12 the
// edge neighbors. connectivity selects a prefix.
std::size_t neighbor_offset_count(Connectivity c);
const std::array<std::array<int, 3>, 26>& neighbor_offsets();

// Label maximal connected foreground components. Empty mask gives an empty
// list; instance ids are assigned in order of each component's smallest
// linear index, so the result is independent of traversal order.
InstanceSet connected_components(const Volume& mask, Connectivity connectivity,
                                 InstanceSource source = {});

// Foreground iff value > t (strict). t must lie inside (0,1).
Volume threshold(const Volume& prob, double t);

// Label volume with each voxel holding its instance id (0 = background).
Volume rasterize_instances(const InstanceSet& set);

// Drop instances with fewer than min_voxels voxels and renumber ids 1..K.
InstanceSet filter_min_size(const InstanceSet& set, std::int64_t min_voxels);

// Interpret a volume as instances: a {0,1} mask is labelled via
// connected_components; any other non-negative integer volume is taken as
// an instance label map as-is (ids reassigned by smallest linear index).
InstanceSet instances_from_volume(const Volume& v, Connectivity connectivity,
                                  InstanceSource source = {});

} // namespace lunc

#endif

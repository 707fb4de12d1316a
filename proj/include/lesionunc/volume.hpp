#ifndef LESIONUNC_VOLUME_HPP
#define LESIONUNC_VOLUME_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "lesionunc/error.hpp"

namespace lunc {

enum class VolumeKind { Intensity, Probability, Label };

const char* volume_kind_name(VolumeKind k);

// 3D scalar grid, x-fastest storage. Immutable by convention once built:
// operations return new volumes instead of mutating inputs.
struct Volume {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0}; // mm
    std::array<double, 3> origin{0.0, 0.0, 0.0};  // mm
    VolumeKind kind = VolumeKind::Intensity;
    std::vector<float> data;

    std::int64_t voxel_count() const {
        return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    }
    std::int64_t linear_index(int x, int y, int z) const {
        return static_cast<std::int64_t>(x) +
               static_cast<std::int64_t>(dims[0]) * (static_cast<std::int64_t>(y) + static_cast<std::int64_t>(dims[1]) * z);
    }
    float at(int x, int y, int z) const { return data[linear_index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[linear_index(x, y, z)]; }

    bool same_grid(const Volume& o) const {
        return dims == o.dims && spacing == o.spacing;
    }
    double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

    // physical coordinate of a voxel center
    std::array<double, 3> world(int x, int y, int z) const {
        return {origin[0] + x * spacing[0], origin[1] + y * spacing[1], origin[2] + z * spacing[2]};
    }
};

Volume make_volume(std::array<int, 3> dims, std::array<double, 3> spacing, VolumeKind kind,
                   float fill = 0.0f, std::array<double, 3> origin = {0.0, 0.0, 0.0});

// Throws InvalidDims / InvalidVolume when a Volume invariant is broken
// (dims/spacing positive, data length, probability range, integer labels).
void validate_volume(const Volume& v);

} // namespace lunc

#endif

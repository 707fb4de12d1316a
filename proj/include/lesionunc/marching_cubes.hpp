#ifndef LESIONUNC_MARCHING_CUBES_HPP
#define LESIONUNC_MARCHING_CUBES_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace lunc {

// Triangle mesh extracted at an iso-level with linear interpolation along
// cell edges. Vertices shared between neighboring cells are deduplicated by
// the lattice edge they sit on, so meshes from closed fields are watertight.
struct TriMesh {
    std::vector<std::array<double, 3>> vertices; // mm
    std::vector<std::array<int, 3>> triangles;   // indices into vertices
};

// field: size[0]*size[1]*size[2] scalars, x-fastest. The caller is
// responsible for zero padding when a closed surface is required.
TriMesh marching_cubes(const std::vector<float>& field, std::array<int, 3> size,
                       std::array<double, 3> spacing, double iso);

// binary convenience: vertices land exactly on edge midpoints
TriMesh marching_cubes_binary(const std::vector<std::uint8_t>& field, std::array<int, 3> size,
                              std::array<double, 3> spacing);

double mesh_area(const TriMesh& mesh);

// enclosed volume via the divergence theorem; sign normalized
double mesh_volume(const TriMesh& mesh);

} // namespace lunc

#endif

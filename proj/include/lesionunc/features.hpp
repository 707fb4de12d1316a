#ifndef LESIONUNC_FEATURES_HPP
#define LESIONUNC_FEATURES_HPP

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lesionunc/instances.hpp"
#include "lesionunc/table.hpp"
#include "lesionunc/volume.hpp"

namespace lunc {

// ------------------------------------------------------------------
// first-order intensity statistics over the lesion voxels
// ------------------------------------------------------------------

struct FirstOrderFeatures {
    double mean = 0.0;
    double variance = 0.0; // population
    double energy = 0.0;   // sum of squares
    double maximum = 0.0;
    double percentile90 = 0.0; // nearest-rank: ceil(0.9 n)-th smallest
};

FirstOrderFeatures first_order(const Volume& img, const LesionInstance& lesion);

// ------------------------------------------------------------------
// shape descriptors
// ------------------------------------------------------------------

// Surface quantities come from a marching-cubes mesh of the binary mask
// (iso 0.5, one-voxel zero padding). Sphericity and SurfaceVolumeRatio use
// the mesh volume, keeping sphericity <= 1 by the isoperimetric inequality;
// VoxelVolume stays the plain voxel-count volume. Axis lengths derive from
// the eigenvalues of the spatial covariance of voxel centers (population,
// mm). All values are computed in bbox-relative coordinates, so they are
// exactly invariant under lesion translation.
struct ShapeFeatures {
    double voxel_volume = 0.0;
    double mesh_volume = 0.0;
    double surface_area = 0.0;
    double surface_volume_ratio = 0.0;
    double sphericity = 0.0;
    double max_2d_diameter_column = 0.0; // max distance between voxel centers sharing a y index
    double least_axis_length = 0.0;      // 4*sqrt(lambda_least)
    double elongation = 0.0;             // sqrt(lambda_minor / lambda_major)
    double flatness = 0.0;               // sqrt(lambda_least / lambda_major)
};

ShapeFeatures shape_features(const LesionInstance& lesion, std::array<int, 3> dims,
                             std::array<double, 3> spacing);

// ------------------------------------------------------------------
// gray-level discretization + texture matrices
// ------------------------------------------------------------------

struct DiscretizedRoi {
    std::vector<int> levels; // 1..bin_count, aligned with lesion voxel order
    int bin_count = 0;
};

// uniform bins over [min,max] of the ROI; level = min(Nb, 1+floor(Nb*(x-min)/(max-min)));
// a constant ROI maps everything to level 1
DiscretizedRoi discretize(const Volume& img, const LesionInstance& lesion, int bin_count);

struct TextureFeatures {
    double gldm_small_dependence_emphasis = 0.0;
    double gldm_small_dependence_low_gray_level_emphasis = 0.0;
    double glrlm_short_run_emphasis = 0.0;
    double glrlm_run_length_non_uniformity = 0.0;
};

// GLRLM features for a single scan direction (runs break outside the lesion)
struct RunStats {
    double short_run_emphasis = 0.0;
    double run_length_non_uniformity = 0.0;
};

const std::array<std::array<int, 3>, 13>& glrlm_directions();
RunStats glrlm_direction(const DiscretizedRoi& roi, const LesionInstance& lesion,
                         std::array<int, 3> dims, std::array<int, 3> direction);

// GLRLM averaged over the 13 unique directions; GLDM with alpha = 0 and a
// Chebyshev-1 neighborhood restricted to the lesion
TextureFeatures texture_features(const DiscretizedRoi& roi, const LesionInstance& lesion,
                                 std::array<int, 3> dims);

// ------------------------------------------------------------------
// atlas location
// ------------------------------------------------------------------

struct StructureCentroid {
    int label = 0;
    std::string name;
    std::array<double, 3> xyz_mm{0.0, 0.0, 0.0};
};

// centroids computed from the label volume (world mm), sorted by label
std::vector<StructureCentroid> atlas_centroids(const Volume& atlas);

// CSV with header label,name,cx,cy,cz
std::vector<StructureCentroid> read_centroids_csv(const std::string& path);

struct LocationFeatures {
    std::optional<int> assigned_label;   // max voxel overlap, ties -> smaller label
    std::vector<double> distances;       // aligned with the centroid list; zero except assigned
};

LocationFeatures location_features(const LesionInstance& lesion, const Volume& atlas,
                                   const std::vector<StructureCentroid>& centroids);

// ------------------------------------------------------------------
// full per-lesion feature rows
// ------------------------------------------------------------------

// Canonical column order: intensity, shape, texture, Dist_<structure> per
// atlas structure. atlas/centroids may be null (no location columns).
FeatureTable lesion_feature_table(const Volume& img, const InstanceSet& lesions,
                                  const std::string& patient_id, const Volume* atlas,
                                  const std::vector<StructureCentroid>* centroids, int bin_count);

} // namespace lunc

#endif

#ifndef LESIONUNC_SYNTH_HPP
#define LESIONUNC_SYNTH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lesionunc/table.hpp"
#include "lesionunc/volume.hpp"

namespace lunc {

// Phantom dataset description. Hypointense ellipsoidal lesions on a noisy
// brighter background; each lesion owns a perturbation magnitude
//   r = logistic(link_offset + w*.z(planted features) + noise)
// and every prediction sample erodes or dilates the lesion with a ball
// radius pert_scale * max(0, 2r - 1) * equivalent_radius, the direction drawn
// per sample. The ramp is zero exactly at
// r = 1/2, so an all-zero link (weights, noise and offset) reproduces the
// ground truth bit-identically in every sample, while expected LSU stays
// monotone in r. The default link_offset shifts the cohort above the ramp
// knee so realized LSU varies across lesions.
struct PhantomSpec {
    std::array<int, 3> grid{72, 72, 56};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int patients = 22;
    std::array<int, 2> lesions_per_patient{4, 6};
    std::array<double, 2> radius_mm{3.0, 5.0};
    std::array<double, 2> axis_ratio{1.0, 1.8};    // semi-axes radius*(ratio, 1, 1/ratio)
    std::array<double, 2> contrast{25.0, 60.0};    // subtracted from background inside lesions
    std::array<double, 2> texture_amplitude{2.0, 10.0};
    double background_level = 100.0;
    double background_noise = 4.0;
    // planted standardized weights over {SurfaceVolumeRatio, Sphericity, Energy}
    std::array<double, 3> planted_weights{1.1, -1.1, -1.1};
    double link_offset = 1.6;
    double noise_std = 0.35;
    double pert_scale = 0.55;       // erosion/dilation radius as a fraction of lesion radius
    double boundary_softness = 0.7; // sigmoid width of the probability maps, mm
    int m_samples = 10;
    std::uint64_t master_seed = 1;

    static PhantomSpec from_json_file(const std::string& path);
    void write_json(const std::string& path) const;
};

struct PatientPhantom {
    std::string patient_id;
    Volume image;
    Volume gt_mask;
    Volume atlas; // octant parcellation, labels 1..8
    std::vector<Volume> sample_probs;
};

struct PhantomDataset {
    PhantomSpec spec;
    std::vector<PatientPhantom> patients;
    FeatureTable oracle; // per gt lesion: planted feature values and r
};

// Deterministic in the master seed: identical spec -> bitwise identical
// volumes and oracle. Throws SpecInfeasible when lesions cannot be placed
// with the required separation.
PhantomDataset generate_phantoms(const PhantomSpec& spec);

// Layout: <dir>/patient_XXX/{image.nii,gt.nii,atlas.nii,sample_XXX.nii},
// <dir>/oracle.csv
void write_phantom_dataset(const PhantomDataset& data, const std::string& out_dir);

} // namespace lunc

#endif

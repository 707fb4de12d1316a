#include "lesionunc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lesionunc/features.hpp"
#include "lesionunc/instances.hpp"
#include "lesionunc/nifti.hpp"
#include "lesionunc/rng.hpp"

namespace lunc {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ------------------------------------------------------------------
// exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher),
// separable, with per-axis physical spacing
// ------------------------------------------------------------------

void edt_1d(std::vector<double>& f, double step) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(n);
    std::vector<double> z(n + 1), d(n);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto sq = [](double x) { return x * x; };
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            const int p = v[k];
            s = (f[q] + sq(q * step) - (f[p] + sq(p * step))) / (2.0 * step * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q * step) ++k;
        d[q] = sq(q * step - v[k] * step) + f[v[k]];
    }
    f = std::move(d);
}

struct Box {
    std::array<int, 3> lo, ext;
    std::size_t size() const { return static_cast<std::size_t>(ext[0]) * ext[1] * ext[2]; }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) + static_cast<std::size_t>(ext[0]) * (y + static_cast<std::size_t>(ext[1]) * z);
    }
};

// squared distance to the nearest seed voxel center, whole box
std::vector<double> edt_sq(const Box& box, const std::vector<std::uint8_t>& seeds,
                           std::array<double, 3> spacing) {
    constexpr double kFar = 1e18;
    std::vector<double> d(box.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = seeds[i] ? 0.0 : kFar;

    std::vector<double> line;
    // x
    for (int z = 0; z < box.ext[2]; ++z)
        for (int y = 0; y < box.ext[1]; ++y) {
            line.assign(box.ext[0], 0.0);
            for (int x = 0; x < box.ext[0]; ++x) line[x] = d[box.index(x, y, z)];
            edt_1d(line, spacing[0]);
            for (int x = 0; x < box.ext[0]; ++x) d[box.index(x, y, z)] = line[x];
        }
    // y
    for (int z = 0; z < box.ext[2]; ++z)
        for (int x = 0; x < box.ext[0]; ++x) {
            line.assign(box.ext[1], 0.0);
            for (int y = 0; y < box.ext[1]; ++y) line[y] = d[box.index(x, y, z)];
            edt_1d(line, spacing[1]);
            for (int y = 0; y < box.ext[1]; ++y) d[box.index(x, y, z)] = line[y];
        }
    // z
    for (int y = 0; y < box.ext[1]; ++y)
        for (int x = 0; x < box.ext[0]; ++x) {
            line.assign(box.ext[2], 0.0);
            for (int z = 0; z < box.ext[2]; ++z) line[z] = d[box.index(x, y, z)];
            edt_1d(line, spacing[2]);
            for (int z = 0; z < box.ext[2]; ++z) d[box.index(x, y, z)] = line[z];
        }
    return d;
}

struct PlacedLesion {
    std::array<double, 3> center_mm;
    std::array<double, 3> semi_axes; // mm, already assigned to axes
    double contrast = 0.0;
    double texture_amp = 0.0;
    double bounding_radius = 0.0;
    double max_depth_mm = 0.0;
    Box box;                             // grid box covering lesion + perturbation margin
    std::vector<std::uint8_t> gt_local;  // mask within box
    std::vector<std::uint32_t> gt_voxels; // global linear indices
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double range_draw(Rng& rng, std::array<double, 2> range) {
    if (range[0] > range[1]) fail(ErrorCode::SpecInfeasible, "degenerate parameter range");
    return range[0] == range[1] ? range[0] : rng.uniform(range[0], range[1]);
}

} // namespace

// ------------------------------------------------------------------
// spec serialization
// ------------------------------------------------------------------

PhantomSpec PhantomSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open spec file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        fail(ErrorCode::InvalidArgument, "bad spec JSON: " + std::string(e.what()));
    }
    PhantomSpec s;
    auto arr3i = [&](const char* key, std::array<int, 3>& out) {
        if (j.contains(key)) for (int i = 0; i < 3; ++i) out[i] = j[key][i].get<int>();
    };
    auto arr3d = [&](const char* key, std::array<double, 3>& out) {
        if (j.contains(key)) for (int i = 0; i < 3; ++i) out[i] = j[key][i].get<double>();
    };
    auto arr2i = [&](const char* key, std::array<int, 2>& out) {
        if (j.contains(key)) for (int i = 0; i < 2; ++i) out[i] = j[key][i].get<int>();
    };
    auto arr2d = [&](const char* key, std::array<double, 2>& out) {
        if (j.contains(key)) for (int i = 0; i < 2; ++i) out[i] = j[key][i].get<double>();
    };
    auto num = [&](const char* key, double& out) { if (j.contains(key)) out = j[key].get<double>(); };
    arr3i("grid", s.grid);
    arr3d("spacing", s.spacing);
    if (j.contains("patients")) s.patients = j["patients"].get<int>();
    arr2i("lesions_per_patient", s.lesions_per_patient);
    arr2d("radius_mm", s.radius_mm);
    arr2d("axis_ratio", s.axis_ratio);
    arr2d("contrast", s.contrast);
    arr2d("texture_amplitude", s.texture_amplitude);
    num("background_level", s.background_level);
    num("background_noise", s.background_noise);
    arr3d("planted_weights", s.planted_weights);
    num("link_offset", s.link_offset);
    num("noise_std", s.noise_std);
    num("pert_scale", s.pert_scale);
    num("boundary_softness", s.boundary_softness);
    if (j.contains("m_samples")) s.m_samples = j["m_samples"].get<int>();
    if (j.contains("master_seed")) s.master_seed = j["master_seed"].get<std::uint64_t>();
    return s;
}

void PhantomSpec::write_json(const std::string& path) const {
    ordered_json j;
    j["grid"] = grid;
    j["spacing"] = spacing;
    j["patients"] = patients;
    j["lesions_per_patient"] = lesions_per_patient;
    j["radius_mm"] = radius_mm;
    j["axis_ratio"] = axis_ratio;
    j["contrast"] = contrast;
    j["texture_amplitude"] = texture_amplitude;
    j["background_level"] = background_level;
    j["background_noise"] = background_noise;
    j["planted_weights"] = planted_weights;
    j["link_offset"] = link_offset;
    j["noise_std"] = noise_std;
    j["pert_scale"] = pert_scale;
    j["boundary_softness"] = boundary_softness;
    j["m_samples"] = m_samples;
    j["master_seed"] = master_seed;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

// ------------------------------------------------------------------
// generation
// ------------------------------------------------------------------

PhantomDataset generate_phantoms(const PhantomSpec& spec) {
    if (spec.patients < 1 || spec.m_samples < 2)
        fail(ErrorCode::InvalidArgument, "need at least 1 patient and 2 samples");
    if (spec.pert_scale < 0 || spec.boundary_softness <= 0)
        fail(ErrorCode::InvalidArgument, "pert_scale must be >= 0, boundary_softness > 0");

    PhantomDataset data;
    data.spec = spec;
    data.oracle.columns = {"r", "SurfaceVolumeRatio", "Sphericity", "Energy"};

    struct LesionRecord {
        int patient = 0;
        int lesion_index = 0; // within patient
        double svr = 0, sphericity = 0, energy = 0;
        double noise = 0;
        double r = 0.5;
    };
    std::vector<LesionRecord> records;
    std::vector<std::vector<PlacedLesion>> placed_by_patient(spec.patients);

    const double min_spacing = *std::min_element(spec.spacing.begin(), spec.spacing.end());

    // pass 1: geometry, image, gt, planted features
    for (int p = 0; p < spec.patients; ++p) {
        Rng rng_layout(derive_seed(spec.master_seed, 10001ULL * p + 1));
        Rng rng_image(derive_seed(spec.master_seed, 10001ULL * p + 2));
        Rng rng_link(derive_seed(spec.master_seed, 10001ULL * p + 3));

        PatientPhantom patient;
        char buf[24];
        std::snprintf(buf, sizeof(buf), "patient_%03d", p);
        patient.patient_id = buf;

        const int n_lesions = rng_layout.uniform_int(spec.lesions_per_patient[0], spec.lesions_per_patient[1]);
        auto& placed = placed_by_patient[p];

        for (int li = 0; li < n_lesions; ++li) {
            bool ok = false;
            for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
                PlacedLesion L;
                const double radius = range_draw(rng_layout, spec.radius_mm);
                const double ratio = range_draw(rng_layout, spec.axis_ratio);
                std::array<double, 3> axes{radius * ratio, radius, radius / ratio};
                rng_layout.shuffle(axes);
                L.semi_axes = axes;
                L.contrast = range_draw(rng_layout, spec.contrast);
                L.texture_amp = range_draw(rng_layout, spec.texture_amplitude);
                L.bounding_radius = *std::max_element(axes.begin(), axes.end());

                // this lesion's own worst-case dilation depth (geometric-mean radius)
                L.max_depth_mm = spec.pert_scale * std::cbrt(axes[0] * axes[1] * axes[2]);

                bool fits = true;
                for (int a = 0; a < 3; ++a) {
                    const double lo = (L.bounding_radius + L.max_depth_mm) / spec.spacing[a] + 4.0 / min_spacing;
                    const double hi = spec.grid[a] - 1 - lo;
                    if (hi <= lo) { fits = false; break; }
                    L.center_mm[a] = rng_layout.uniform(lo, hi) * spec.spacing[a];
                }
                if (!fits)
                    fail(ErrorCode::SpecInfeasible, "grid too small for the requested lesion size");

                // separation: dilated lesions must never touch (26-adjacency)
                bool clear = true;
                for (const auto& other : placed) {
                    double d2 = 0;
                    for (int a = 0; a < 3; ++a) {
                        const double dd = L.center_mm[a] - other.center_mm[a];
                        d2 += dd * dd;
                    }
                    if (std::sqrt(d2) < L.bounding_radius + L.max_depth_mm + other.bounding_radius +
                                            other.max_depth_mm + 3.0) {
                        clear = false;
                        break;
                    }
                }
                if (!clear) continue;
                placed.push_back(std::move(L));
                ok = true;
            }
            if (!ok)
                fail(ErrorCode::SpecInfeasible, "could not place lesion " + std::to_string(li) +
                                                    " of patient " + patient.patient_id);
        }

        // rasterize
        patient.gt_mask = make_volume(spec.grid, spec.spacing, VolumeKind::Label, 0.0f);
        for (auto& L : placed) {
            std::array<int, 3> lo{}, hi{};
            for (int a = 0; a < 3; ++a) {
                const double extent = (L.bounding_radius + L.max_depth_mm) / spec.spacing[a] + 3.0;
                lo[a] = std::max(0, static_cast<int>(std::floor(L.center_mm[a] / spec.spacing[a] - extent)));
                hi[a] = std::min(spec.grid[a] - 1, static_cast<int>(std::ceil(L.center_mm[a] / spec.spacing[a] + extent)));
            }
            L.box.lo = lo;
            L.box.ext = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
            L.gt_local.assign(L.box.size(), 0);
            for (int z = lo[2]; z <= hi[2]; ++z)
                for (int y = lo[1]; y <= hi[1]; ++y)
                    for (int x = lo[0]; x <= hi[0]; ++x) {
                        double q = 0;
                        const double w[3] = {x * spec.spacing[0], y * spec.spacing[1], z * spec.spacing[2]};
                        for (int a = 0; a < 3; ++a) {
                            const double t = (w[a] - L.center_mm[a]) / L.semi_axes[a];
                            q += t * t;
                        }
                        if (q <= 1.0) {
                            L.gt_local[L.box.index(x - lo[0], y - lo[1], z - lo[2])] = 1;
                            const auto gi = patient.gt_mask.linear_index(x, y, z);
                            patient.gt_mask.data[gi] = 1.0f;
                            L.gt_voxels.push_back(static_cast<std::uint32_t>(gi));
                        }
                    }
            if (L.gt_voxels.empty())
                fail(ErrorCode::SpecInfeasible, "lesion rasterized to zero voxels; radius too small for spacing");
            std::sort(L.gt_voxels.begin(), L.gt_voxels.end());
        }

        // image: bright noisy background, hypointense textured lesions
        patient.image = make_volume(spec.grid, spec.spacing, VolumeKind::Intensity, 0.0f);
        for (auto& v : patient.image.data)
            v = static_cast<float>(spec.background_level + spec.background_noise * rng_image.normal());
        for (const auto& L : placed)
            for (std::uint32_t gi : L.gt_voxels)
                patient.image.data[gi] = static_cast<float>(spec.background_level - L.contrast +
                                                            L.texture_amp * rng_image.normal());

        // octant atlas
        patient.atlas = make_volume(spec.grid, spec.spacing, VolumeKind::Label, 0.0f);
        for (int z = 0; z < spec.grid[2]; ++z)
            for (int y = 0; y < spec.grid[1]; ++y)
                for (int x = 0; x < spec.grid[0]; ++x)
                    patient.atlas.at(x, y, z) = static_cast<float>(
                        1 + (x >= spec.grid[0] / 2) + 2 * (y >= spec.grid[1] / 2) + 4 * (z >= spec.grid[2] / 2));

        // planted features from the realized lesion
        for (std::size_t li = 0; li < placed.size(); ++li) {
            const auto& L = placed[li];
            LesionInstance inst;
            inst.id = static_cast<int>(li) + 1;
            inst.voxels = L.gt_voxels;
            const ShapeFeatures sh = shape_features(inst, spec.grid, spec.spacing);
            LesionRecord rec;
            rec.patient = p;
            rec.lesion_index = static_cast<int>(li);
            rec.svr = sh.surface_volume_ratio;
            rec.sphericity = sh.sphericity;
            double energy = 0;
            for (std::uint32_t gi : L.gt_voxels) {
                const double v = patient.image.data[gi];
                energy += v * v;
            }
            rec.energy = energy;
            rec.noise = spec.noise_std * rng_link.normal();
            records.push_back(rec);
        }
        data.patients.push_back(std::move(patient));
    }

    // standardize planted features across the cohort, apply the link
    {
        const std::size_t n = records.size();
        auto zscore = [&](auto getter) {
            std::vector<double> z(n);
            double mean = 0;
            for (std::size_t i = 0; i < n; ++i) mean += getter(records[i]);
            mean /= static_cast<double>(n);
            double var = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = getter(records[i]) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double sd = var > 0 ? std::sqrt(var) : 1.0;
            for (std::size_t i = 0; i < n; ++i) z[i] = (getter(records[i]) - mean) / sd;
            return z;
        };
        const auto z_svr = zscore([](const LesionRecord& r) { return r.svr; });
        const auto z_sph = zscore([](const LesionRecord& r) { return r.sphericity; });
        const auto z_eng = zscore([](const LesionRecord& r) { return r.energy; });
        for (std::size_t i = 0; i < n; ++i) {
            const double eta = spec.link_offset + spec.planted_weights[0] * z_svr[i] +
                               spec.planted_weights[1] * z_sph[i] + spec.planted_weights[2] * z_eng[i] +
                               records[i].noise;
            records[i].r = logistic(eta); // eta = 0 sits exactly on the ramp knee
        }
    }

    // pass 2: per-sample perturbed masks and probability maps
    std::size_t rec_base = 0;
    for (int p = 0; p < spec.patients; ++p) {
        auto& patient = data.patients[p];
        auto& placed = placed_by_patient[p];
        Rng rng_pert(derive_seed(spec.master_seed, 10001ULL * p + 4));

        // distance fields of the ground-truth lesion (for erosion/dilation)
        std::vector<std::vector<double>> out_sq(placed.size()), in_sq(placed.size());
        for (std::size_t li = 0; li < placed.size(); ++li) {
            const auto& L = placed[li];
            std::vector<std::uint8_t> inv(L.gt_local.size());
            for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = L.gt_local[i] ? 0 : 1;
            out_sq[li] = edt_sq(L.box, L.gt_local, spec.spacing); // distance to lesion
            in_sq[li] = edt_sq(L.box, inv, spec.spacing);         // distance to background
        }

        for (int m = 0; m < spec.m_samples; ++m) {
            Volume prob = make_volume(spec.grid, spec.spacing, VolumeKind::Probability, 0.0f);
            for (std::size_t li = 0; li < placed.size(); ++li) {
                const auto& L = placed[li];
                const double r = records[rec_base + li].r;
                const bool dilate = rng_pert.coin();
                // depth relative to the equivalent radius keeps LSU a function
                // of r alone rather than of lesion size times r
                const double voxel_mm3 = spec.spacing[0] * spec.spacing[1] * spec.spacing[2];
                const double eq_radius = std::cbrt(3.0 * static_cast<double>(L.gt_voxels.size()) *
                                                   voxel_mm3 / (4.0 * 3.14159265358979323846));
                double depth = spec.pert_scale * std::max(0.0, 2.0 * r - 1.0) * eq_radius;
                // erosion must never swallow the short axis: a vanished sample
                // would also erase the lesion from the fused prediction
                const double inradius = *std::min_element(L.semi_axes.begin(), L.semi_axes.end());
                if (!dilate) depth = std::min(depth, 0.7 * inradius);

                // sample mask within the box
                std::vector<std::uint8_t> sample(L.gt_local.size(), 0);
                bool any = false;
                for (std::size_t i = 0; i < sample.size(); ++i) {
                    const bool in = depth == 0.0
                                        ? L.gt_local[i] != 0
                                        : (dilate ? (L.gt_local[i] != 0 || out_sq[li][i] <= depth * depth)
                                                  : (L.gt_local[i] != 0 && in_sq[li][i] > depth * depth));
                    sample[i] = in ? 1 : 0;
                    any = any || in;
                }
                if (!any) continue; // lesion fully eroded in this sample

                // signed distance of the sample mask -> soft probability
                std::vector<std::uint8_t> inv(sample.size());
                for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = sample[i] ? 0 : 1;
                const auto d_out = edt_sq(L.box, sample, spec.spacing);
                const auto d_in = edt_sq(L.box, inv, spec.spacing);
                for (int z = 0; z < L.box.ext[2]; ++z)
                    for (int y = 0; y < L.box.ext[1]; ++y)
                        for (int x = 0; x < L.box.ext[0]; ++x) {
                            const std::size_t bi = L.box.index(x, y, z);
                            const double sd = sample[bi] ? std::sqrt(d_in[bi]) : -std::sqrt(d_out[bi]);
                            const float pv = static_cast<float>(logistic(sd / spec.boundary_softness));
                            const auto gi = prob.linear_index(L.box.lo[0] + x, L.box.lo[1] + y, L.box.lo[2] + z);
                            prob.data[gi] = std::max(prob.data[gi], pv);
                        }
            }
            patient.sample_probs.push_back(std::move(prob));
        }
        rec_base += placed.size();
    }

    // oracle rows keyed by the gt connected-component ids downstream code sees
    rec_base = 0;
    for (int p = 0; p < spec.patients; ++p) {
        const auto& patient = data.patients[p];
        const auto& placed = placed_by_patient[p];
        const InstanceSet gt = connected_components(patient.gt_mask, Connectivity::Full26,
                                                    {InstanceSource::GroundTruth, -1});
        if (gt.instances.size() != placed.size())
            fail(ErrorCode::SpecInfeasible, "ground-truth components merged; separation too small");
        for (std::size_t li = 0; li < placed.size(); ++li) {
            // find the component holding this lesion's first voxel
            const std::uint32_t probe = placed[li].gt_voxels.front();
            int comp_id = -1;
            for (const auto& inst : gt.instances)
                if (std::binary_search(inst.voxels.begin(), inst.voxels.end(), probe)) {
                    comp_id = inst.id;
                    break;
                }
            const auto& rec = records[rec_base + li];
            data.oracle.add_row(patient.patient_id, comp_id,
                                {rec.r, rec.svr, rec.sphericity, rec.energy});
        }
        rec_base += placed.size();
    }
    return data;
}

void write_phantom_dataset(const PhantomDataset& data, const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& patient : data.patients) {
        const fs::path dir = fs::path(out_dir) / patient.patient_id;
        fs::create_directories(dir);
        write_nifti(patient.image, (dir / "image.nii").string());
        write_nifti(patient.gt_mask, (dir / "gt.nii").string());
        write_nifti(patient.atlas, (dir / "atlas.nii").string());
        for (std::size_t m = 0; m < patient.sample_probs.size(); ++m) {
            char buf[24];
            std::snprintf(buf, sizeof(buf), "sample_%03zu.nii", m);
            write_nifti(patient.sample_probs[m], (dir / buf).string());
        }
    }
    write_table(data.oracle, (fs::path(out_dir) / "oracle.csv").string());
    data.spec.write_json((fs::path(out_dir) / "phantom_spec.json").string());
}

} // namespace lunc

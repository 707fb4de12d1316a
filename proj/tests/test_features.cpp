#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "lesionunc/features.hpp"
#include "lesionunc/marching_cubes.hpp"
#include "lesionunc/rng.hpp"

using namespace lunc;

namespace {

// lesion occupying the mask's foreground, plus the grid it lives on
struct Built {
    Volume mask;
    LesionInstance lesion;
};

Built lesion_from(std::array<int, 3> dims, std::array<double, 3> spacing,
                  const std::vector<std::array<int, 3>>& voxels) {
    Built b;
    b.mask = make_volume(dims, spacing, VolumeKind::Label, 0.0f);
    b.lesion.id = 1;
    for (const auto& v : voxels) {
        b.mask.at(v[0], v[1], v[2]) = 1.0f;
        b.lesion.voxels.push_back(static_cast<std::uint32_t>(b.mask.linear_index(v[0], v[1], v[2])));
    }
    std::sort(b.lesion.voxels.begin(), b.lesion.voxels.end());
    b.lesion.volume_mm3 = static_cast<double>(b.lesion.voxels.size()) * spacing[0] * spacing[1] * spacing[2];
    return b;
}

Built digital_ball(int radius, std::array<int, 3> dims) {
    std::vector<std::array<int, 3>> voxels;
    const int c = dims[0] / 2;
    for (int z = 0; z < dims[2]; ++z)
        for (int y = 0; y < dims[1]; ++y)
            for (int x = 0; x < dims[0]; ++x)
                if ((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c) <= radius * radius)
                    voxels.push_back({x, y, z});
    return lesion_from(dims, {1, 1, 1}, voxels);
}

} // namespace

// ------------------------------------------------------------------
// marching cubes table validation
// ------------------------------------------------------------------

namespace {

bool mesh_watertight(const TriMesh& mesh) {
    // every directed edge must be matched by exactly one reverse edge
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : mesh.triangles) {
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
        for (int e = 0; e < 3; ++e) ++edges[{t[e], t[(e + 1) % 3]}];
    }
    for (const auto& [edge, count] : edges) {
        auto rev = edges.find({edge.second, edge.first});
        if (count != 1 || rev == edges.end() || rev->second != 1) return false;
    }
    return true;
}

} // namespace

TEST_CASE("marching cubes is watertight for every one of the 256 cell cases") {
    // embed each 2x2x2 corner configuration in a zero border; the center
    // cell then realizes exactly that table case
    for (int idx = 0; idx < 256; ++idx) {
        std::vector<std::uint8_t> field(4 * 4 * 4, 0);
        const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
        for (int c = 0; c < 8; ++c)
            if (idx & (1 << c)) {
                const int x = 1 + corner[c][0], y = 1 + corner[c][1], z = 1 + corner[c][2];
                field[x + 4 * (y + 4 * z)] = 1;
            }
        TriMesh mesh = marching_cubes_binary(field, {4, 4, 4}, {1, 1, 1});
        CHECK(mesh_watertight(mesh));
        if (idx > 0) CHECK(!mesh.triangles.empty());
    }
}

TEST_CASE("marching cubes is watertight on random blobs") {
    Rng rng(2024);
    for (int rep = 0; rep < 30; ++rep) {
        const std::array<int, 3> size{6, 6, 6};
        std::vector<std::uint8_t> field(6 * 6 * 6, 0);
        const double density = rng.uniform(0.2, 0.8);
        // keep the border at zero so the surface must close
        for (int z = 1; z < 5; ++z)
            for (int y = 1; y < 5; ++y)
                for (int x = 1; x < 5; ++x)
                    field[x + 6 * (y + 6 * z)] = rng.uniform() < density ? 1 : 0;

        CHECK(mesh_watertight(marching_cubes_binary(field, size, {1, 1, 1})));
    }
}

TEST_CASE("marching cubes goldens: single voxel and solid cube") {
    // single voxel -> octahedron: area sqrt(3), volume 1/6
    std::vector<std::uint8_t> f(27, 0);
    f[1 + 3 * (1 + 3 * 1)] = 1;
    TriMesh m = marching_cubes_binary(f, {3, 3, 3}, {1, 1, 1});
    CHECK(mesh_area(m) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(mesh_volume(m) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    // 11^3 solid cube, padded: area 600 + 120/sqrt(2) + 8*(sqrt(3)/8), volume 1331 - 15 - 5/6
    const int n = 13;
    std::vector<std::uint8_t> cube(n * n * n, 0);
    for (int z = 1; z <= 11; ++z)
        for (int y = 1; y <= 11; ++y)
            for (int x = 1; x <= 11; ++x) cube[x + n * (y + n * z)] = 1;
    TriMesh mc = marching_cubes_binary(cube, {n, n, n}, {1, 1, 1});
    const double expect_area = 600.0 + 120.0 * std::sqrt(0.5) + 8.0 * (std::sqrt(3.0) / 4.0 * 0.5);
    CHECK(mesh_area(mc) == doctest::Approx(expect_area).epsilon(1e-12));
    CHECK(mesh_volume(mc) == doctest::Approx(1331.0 - 15.0 - 5.0 / 6.0).epsilon(1e-12));
}

// ------------------------------------------------------------------
// first order
// ------------------------------------------------------------------

TEST_CASE("first order on 1..10") {
    auto b = lesion_from({10, 1, 1}, {1, 1, 1},
                         {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0},
                          {5, 0, 0}, {6, 0, 0}, {7, 0, 0}, {8, 0, 0}, {9, 0, 0}});
    Volume img = make_volume({10, 1, 1}, {1, 1, 1}, VolumeKind::Intensity);
    for (int i = 0; i < 10; ++i) img.data[i] = static_cast<float>(i + 1);
    auto f = first_order(img, b.lesion);
    CHECK(f.percentile90 == 9.0);
    CHECK(f.maximum == 10.0);
    CHECK(f.energy == 385.0);
    CHECK(f.mean == doctest::Approx(5.5));
    CHECK(f.variance == doctest::Approx(8.25));
}

TEST_CASE("first order constant and single voxel") {
    auto b = lesion_from({4, 4, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    Volume img = make_volume({4, 4, 1}, {1, 1, 1}, VolumeKind::Intensity, 3.0f);
    auto f = first_order(img, b.lesion);
    CHECK(f.mean == 3.0);
    CHECK(f.variance == 0.0);
    CHECK(f.energy == 27.0);
    CHECK(f.maximum == 3.0);
    CHECK(f.percentile90 == 3.0);

    auto single = lesion_from({4, 4, 1}, {1, 1, 1}, {{2, 2, 0}});
    img.at(2, 2, 0) = -5.0f;
    auto g = first_order(img, single.lesion);
    CHECK(g.mean == -5.0);
    CHECK(g.variance == 0.0);
    CHECK(g.energy == 25.0);
    CHECK(g.percentile90 == -5.0);
}

// ------------------------------------------------------------------
// shape
// ------------------------------------------------------------------

TEST_CASE("digital ball r=10: sphericity and flatness near 1") {
    auto b = digital_ball(10, {25, 25, 25});
    auto s = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
    CHECK(s.sphericity > 0.95);
    CHECK(s.sphericity < 1.05);
    CHECK(s.flatness > 0.95);
    CHECK(s.flatness <= 1.0);
    CHECK(s.elongation >= s.flatness);
    CHECK(s.voxel_volume == doctest::Approx(b.lesion.voxels.size()));
}

TEST_CASE("voxelized 11^3 cube sphericity within 5% of the analytic cube") {
    std::vector<std::array<int, 3>> voxels;
    for (int z = 2; z < 13; ++z)
        for (int y = 2; y < 13; ++y)
            for (int x = 2; x < 13; ++x) voxels.push_back({x, y, z});
    auto b = lesion_from({16, 16, 16}, {1, 1, 1}, voxels);
    auto s = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
    const double analytic = std::cbrt(36.0 * 3.14159265358979323846) / 6.0; // 0.80600
    CHECK(std::abs(s.sphericity - analytic) / analytic < 0.05);
    CHECK(s.voxel_volume == doctest::Approx(1331.0));
}

TEST_CASE("1x1x9 rod along x: column diameter 8, tiny flatness") {
    std::vector<std::array<int, 3>> voxels;
    for (int x = 0; x < 9; ++x) voxels.push_back({x, 2, 2});
    auto b = lesion_from({12, 5, 5}, {1, 1, 1}, voxels);
    auto s = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
    CHECK(s.max_2d_diameter_column == doctest::Approx(8.0));
    CHECK(s.flatness < 0.01);
    CHECK(s.elongation < 0.01);
}

TEST_CASE("single voxel shape degenerate rules") {
    auto b = lesion_from({5, 5, 5}, {1, 1, 1}, {{2, 2, 2}});
    auto s = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
    CHECK(s.elongation == 1.0);
    CHECK(s.flatness == 1.0);
    CHECK(s.least_axis_length == 0.0);
    CHECK(s.max_2d_diameter_column == 0.0);
    CHECK(s.surface_area > 1.0);
    CHECK(s.surface_area < 6.0); // below the raw voxel box
    CHECK(s.mesh_volume > 0.0);
    CHECK(s.mesh_volume < 1.0);
}

TEST_CASE("shape features are exactly translation invariant") {
    std::vector<std::array<int, 3>> voxels{{2, 2, 2}, {3, 2, 2}, {3, 3, 2}, {3, 3, 3}, {4, 3, 3}};
    auto a = lesion_from({20, 20, 20}, {1.0, 1.2, 0.8}, voxels);
    std::vector<std::array<int, 3>> moved;
    for (auto v : voxels) moved.push_back({v[0] + 9, v[1] + 5, v[2] + 11});
    auto b = lesion_from({20, 20, 20}, {1.0, 1.2, 0.8}, moved);

    auto sa = shape_features(a.lesion, a.mask.dims, a.mask.spacing);
    auto sb = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
    CHECK(sa.surface_area == sb.surface_area);
    CHECK(sa.mesh_volume == sb.mesh_volume);
    CHECK(sa.sphericity == sb.sphericity);
    CHECK(sa.surface_volume_ratio == sb.surface_volume_ratio);
    CHECK(sa.max_2d_diameter_column == sb.max_2d_diameter_column);
    CHECK(sa.least_axis_length == sb.least_axis_length);
    CHECK(sa.elongation == sb.elongation);
    CHECK(sa.flatness == sb.flatness);
}

TEST_CASE("sphericity stays in (0, 1.02] on random blobs") {
    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        // random connected-ish blob: start at center, random walk
        std::set<std::array<int, 3>> vox;
        std::array<int, 3> cur{8, 8, 8};
        vox.insert(cur);
        for (int i = 0; i < 60; ++i) {
            cur[rng.uniform_int(0, 2)] += rng.coin() ? 1 : -1;
            for (int a = 0; a < 3; ++a) cur[a] = std::clamp(cur[a], 1, 14);
            vox.insert(cur);
        }
        auto b = lesion_from({16, 16, 16}, {1, 1, 1}, {vox.begin(), vox.end()});
        auto s = shape_features(b.lesion, b.mask.dims, b.mask.spacing);
        CHECK(s.sphericity > 0.0);
        CHECK(s.sphericity <= 1.02);
        CHECK(s.flatness <= s.elongation + 1e-12);
    }
}

// ------------------------------------------------------------------
// discretization
// ------------------------------------------------------------------

TEST_CASE("discretize constant, two-value and clamp rules") {
    auto b = lesion_from({4, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
    Volume img = make_volume({4, 1, 1}, {1, 1, 1}, VolumeKind::Intensity, 7.0f);
    auto roi = discretize(img, b.lesion, 4);
    CHECK(roi.levels == std::vector<int>{1, 1, 1, 1});

    img.data = {0.0f, 1.0f, 0.0f, 1.0f};
    auto roi2 = discretize(img, b.lesion, 2);
    CHECK(roi2.levels == std::vector<int>{1, 2, 1, 2});

    img.data = {0.0f, 0.5f, 0.99f, 1.0f}; // max maps to Nb, not Nb+1
    auto roi3 = discretize(img, b.lesion, 4);
    CHECK(roi3.levels == std::vector<int>{1, 3, 4, 4});

    CHECK_THROWS_AS(discretize(img, b.lesion, 1), Error);
}

// ------------------------------------------------------------------
// GLRLM
// ------------------------------------------------------------------

TEST_CASE("GLRLM hand-built 2x2 matrix") {
    // single slice levels [[1,1],[2,2]] (rows along x)
    auto b = lesion_from({2, 2, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
    Volume img = make_volume({2, 2, 1}, {1, 1, 1}, VolumeKind::Intensity);
    img.at(0, 0, 0) = 0.0f;
    img.at(1, 0, 0) = 0.0f;
    img.at(0, 1, 0) = 1.0f;
    img.at(1, 1, 0) = 1.0f;
    auto roi = discretize(img, b.lesion, 2);

    auto x_dir = glrlm_direction(roi, b.lesion, b.mask.dims, {1, 0, 0});
    CHECK(x_dir.short_run_emphasis == doctest::Approx(0.25));
    CHECK(x_dir.run_length_non_uniformity == doctest::Approx(2.0));

    auto y_dir = glrlm_direction(roi, b.lesion, b.mask.dims, {0, 1, 0});
    CHECK(y_dir.short_run_emphasis == doctest::Approx(1.0));
    CHECK(y_dir.run_length_non_uniformity == doctest::Approx(4.0));
}

TEST_CASE("all-distinct levels give SRE 1 in every direction") {
    auto b = lesion_from({4, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
    Volume img = make_volume({4, 1, 1}, {1, 1, 1}, VolumeKind::Intensity);
    img.data = {0.0f, 0.3f, 0.6f, 1.0f};
    auto roi = discretize(img, b.lesion, 4);
    for (const auto& d : glrlm_directions()) {
        auto rs = glrlm_direction(roi, b.lesion, b.mask.dims, d);
        CHECK(rs.short_run_emphasis == doctest::Approx(1.0));
    }
}

TEST_CASE("runs break at voxels outside the lesion") {
    // x-line of 3 lesion voxels with the middle voxel excluded from the lesion
    auto b = lesion_from({3, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {2, 0, 0}});
    Volume img = make_volume({3, 1, 1}, {1, 1, 1}, VolumeKind::Intensity, 5.0f);
    auto roi = discretize(img, b.lesion, 2); // constant -> all level 1
    auto rs = glrlm_direction(roi, b.lesion, b.mask.dims, {1, 0, 0});
    // two runs of length 1, not one run of length 3
    CHECK(rs.short_run_emphasis == doctest::Approx(1.0));
    CHECK(rs.run_length_non_uniformity == doctest::Approx(2.0));
}

// ------------------------------------------------------------------
// GLDM
// ------------------------------------------------------------------

TEST_CASE("GLDM 1D example [1,1,2]") {
    auto b = lesion_from({3, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    Volume img = make_volume({3, 1, 1}, {1, 1, 1}, VolumeKind::Intensity);
    img.data = {0.0f, 0.0f, 1.0f};
    auto roi = discretize(img, b.lesion, 2);
    REQUIRE(roi.levels == std::vector<int>{1, 1, 2});
    auto t = texture_features(roi, b.lesion, b.mask.dims);
    CHECK(t.gldm_small_dependence_emphasis == doctest::Approx(0.5));
    // P(1,2)=2 -> 2/(1*4); P(2,1)=1 -> 1/(4*1); sum/3 = 0.25
    CHECK(t.gldm_small_dependence_low_gray_level_emphasis == doctest::Approx(0.25));
}

TEST_CASE("GLDM single voxel and homogeneous block") {
    auto single = lesion_from({3, 3, 3}, {1, 1, 1}, {{1, 1, 1}});
    Volume img = make_volume({3, 3, 3}, {1, 1, 1}, VolumeKind::Intensity, 2.0f);
    auto roi = discretize(img, single.lesion, 2);
    auto t = texture_features(roi, single.lesion, {3, 3, 3});
    CHECK(t.gldm_small_dependence_emphasis == doctest::Approx(1.0));

    // 3^3 constant block: center voxel has dependence 27
    std::vector<std::array<int, 3>> voxels;
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) voxels.push_back({x, y, z});
    auto block = lesion_from({3, 3, 3}, {1, 1, 1}, voxels);
    auto roi2 = discretize(img, block.lesion, 2);
    auto t2 = texture_features(roi2, block.lesion, {3, 3, 3});
    // corners: dep 8, edges: dep 12, faces: dep 18, center: dep 27
    const double expected = (8.0 / 64.0 + 12.0 / 144.0 + 6.0 / 324.0 + 1.0 / 729.0) / 27.0;
    CHECK(t2.gldm_small_dependence_emphasis == doctest::Approx(expected));
}

TEST_CASE("texture invariant to constant intensity shift") {
    Rng rng(91);
    std::vector<std::array<int, 3>> voxels;
    for (int z = 1; z < 5; ++z)
        for (int y = 1; y < 5; ++y)
            for (int x = 1; x < 5; ++x)
                if (rng.uniform() < 0.7) voxels.push_back({x, y, z});
    if (voxels.empty()) voxels.push_back({2, 2, 2});
    auto b = lesion_from({6, 6, 6}, {1, 1, 1}, voxels);
    Volume img = make_volume({6, 6, 6}, {1, 1, 1}, VolumeKind::Intensity);
    for (auto& x : img.data) x = static_cast<float>(rng.uniform(0, 100));

    auto roi1 = discretize(img, b.lesion, 16);
    auto t1 = texture_features(roi1, b.lesion, img.dims);

    Volume shifted = img;
    for (auto& x : shifted.data) x += 50.0f;
    auto roi2 = discretize(shifted, b.lesion, 16);
    auto t2 = texture_features(roi2, b.lesion, img.dims);

    CHECK(roi1.levels == roi2.levels);
    CHECK(t1.glrlm_short_run_emphasis == doctest::Approx(t2.glrlm_short_run_emphasis).epsilon(1e-12));
    CHECK(t1.gldm_small_dependence_emphasis == doctest::Approx(t2.gldm_small_dependence_emphasis).epsilon(1e-12));
}

// ------------------------------------------------------------------
// location
// ------------------------------------------------------------------

TEST_CASE("location assignment by maximum overlap") {
    Volume atlas = make_volume({10, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    for (int x = 0; x < 5; ++x) atlas.at(x, 0, 0) = 3.0f;
    for (int x = 5; x < 10; ++x) atlas.at(x, 0, 0) = 7.0f;

    auto cent = atlas_centroids(atlas);
    REQUIRE(cent.size() == 2);
    CHECK(cent[0].label == 3);
    CHECK(cent[0].xyz_mm[0] == doctest::Approx(2.0));
    CHECK(cent[1].xyz_mm[0] == doctest::Approx(7.0));

    // lesion overlaps label 3 by 5 voxels, label 7 by 2 -> assigned 3
    auto b = lesion_from({10, 1, 1}, {1, 1, 1},
                         {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}, {5, 0, 0}, {6, 0, 0}});
    auto loc = location_features(b.lesion, atlas, cent);
    REQUIRE(loc.assigned_label.has_value());
    CHECK(*loc.assigned_label == 3);
    CHECK(loc.distances[0] > 0.0);
    CHECK(loc.distances[1] == 0.0);
}

TEST_CASE("location zero cases") {
    Volume atlas = make_volume({6, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    atlas.at(0, 0, 0) = 1.0f;
    atlas.at(1, 0, 0) = 1.0f;
    atlas.at(2, 0, 0) = 1.0f;
    auto cent = atlas_centroids(atlas); // centroid x = 1.0

    // lesion centered at the structure centroid -> all distances zero
    auto b = lesion_from({6, 1, 1}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
    auto loc = location_features(b.lesion, atlas, cent);
    REQUIRE(loc.assigned_label.has_value());
    CHECK(loc.distances[0] == doctest::Approx(0.0));

    // lesion outside every structure -> no assignment, all zero
    auto far = lesion_from({6, 1, 1}, {1, 1, 1}, {{5, 0, 0}});
    auto loc2 = location_features(far.lesion, atlas, cent);
    CHECK_FALSE(loc2.assigned_label.has_value());
    CHECK(loc2.distances[0] == 0.0);
}

// ------------------------------------------------------------------
// assembled table
// ------------------------------------------------------------------

TEST_CASE("feature table is deterministic and has at most one nonzero Dist column") {
    Rng rng(123);
    Volume img = make_volume({16, 16, 8}, {1, 1, 1}, VolumeKind::Intensity);
    for (auto& x : img.data) x = static_cast<float>(rng.uniform(50, 150));
    Volume mask = make_volume({16, 16, 8}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    for (int z = 2; z < 5; ++z)
        for (int y = 2; y < 5; ++y)
            for (int x = 2; x < 5; ++x) mask.at(x, y, z) = 1.0f;
    mask.at(10, 10, 5) = 1.0f;
    auto lesions = connected_components(mask, Connectivity::Full26);

    Volume atlas = make_volume({16, 16, 8}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    for (std::int64_t i = 0; i < atlas.voxel_count(); ++i)
        atlas.data[i] = static_cast<float>(1 + (i % 4));

    auto t1 = lesion_feature_table(img, lesions, "p00", &atlas, nullptr, 16);
    auto t2 = lesion_feature_table(img, lesions, "p00", &atlas, nullptr, 16);
    CHECK(t1.values == t2.values); // bitwise identical
    CHECK(t1.rows() == 2);

    int dist_cols = 0, nonzero = 0;
    for (std::size_t c = 0; c < t1.cols(); ++c)
        if (t1.columns[c].rfind("Dist_", 0) == 0) {
            ++dist_cols;
            for (std::size_t r = 0; r < t1.rows(); ++r) nonzero += t1.at(r, c) > 0.0;
        }
    CHECK(dist_cols == 4);
    CHECK(nonzero <= static_cast<int>(t1.rows()));
}

#include <doctest.h>

#include <algorithm>
#include <queue>
#include <set>

#include "lesionunc/instances.hpp"
#include "lesionunc/rng.hpp"

using namespace lunc;

namespace {

// Independent oracle: plain BFS flood fill over the full grid with an
// explicit queue and its own adjacency test. Returns the partition as a
// set of voxel-index sets, ignoring instance ids.
std::set<std::set<std::uint32_t>> flood_fill_oracle(const Volume& mask, int connectivity) {
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    auto adjacent = [&](int ax, int ay, int az, int bx, int by, int bz) {
        const int dx = std::abs(ax - bx), dy = std::abs(ay - by), dz = std::abs(az - bz);
        if (dx > 1 || dy > 1 || dz > 1 || (dx + dy + dz) == 0) return false;
        const int sum = dx + dy + dz;
        if (connectivity == 6) return sum == 1;
        if (connectivity == 18) return sum <= 2;
        return true;
    };
    std::set<std::set<std::uint32_t>> partition;
    std::vector<char> seen(mask.data.size(), 0);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const auto start = mask.linear_index(x, y, z);
                if (seen[start] || mask.data[start] == 0.0f) continue;
                std::set<std::uint32_t> comp;
                std::queue<std::array<int, 3>> q;
                q.push({x, y, z});
                seen[start] = 1;
                while (!q.empty()) {
                    auto [cx, cy, cz] = q.front();
                    q.pop();
                    comp.insert(static_cast<std::uint32_t>(mask.linear_index(cx, cy, cz)));
                    for (int zz = std::max(0, cz - 1); zz <= std::min(nz - 1, cz + 1); ++zz)
                        for (int yy = std::max(0, cy - 1); yy <= std::min(ny - 1, cy + 1); ++yy)
                            for (int xx = std::max(0, cx - 1); xx <= std::min(nx - 1, cx + 1); ++xx) {
                                const auto li = mask.linear_index(xx, yy, zz);
                                if (seen[li] || mask.data[li] == 0.0f) continue;
                                if (!adjacent(cx, cy, cz, xx, yy, zz)) continue;
                                seen[li] = 1;
                                q.push({xx, yy, zz});
                            }
                }
                partition.insert(std::move(comp));
            }
    return partition;
}

std::set<std::set<std::uint32_t>> as_partition(const InstanceSet& set) {
    std::set<std::set<std::uint32_t>> p;
    for (const auto& inst : set.instances)
        p.insert(std::set<std::uint32_t>(inst.voxels.begin(), inst.voxels.end()));
    return p;
}

} // namespace

TEST_CASE("all-zero mask yields no instances") {
    Volume m = make_volume({8, 8, 8}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    CHECK(connected_components(m, Connectivity::Full26).instances.empty());
}

TEST_CASE("diagonal voxels join under 26 but not 6 connectivity") {
    Volume m = make_volume({4, 4, 4}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    m.at(0, 0, 0) = 1.0f;
    m.at(1, 1, 1) = 1.0f;
    CHECK(connected_components(m, Connectivity::Full26).instances.size() == 1);
    CHECK(connected_components(m, Connectivity::Faces6).instances.size() == 2);
}

TEST_CASE("ids are consecutive and ordered by smallest linear index") {
    Volume m = make_volume({10, 3, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    m.at(7, 0, 0) = 1.0f; // linear 7
    m.at(2, 1, 0) = 1.0f; // linear 12
    m.at(0, 0, 0) = 1.0f; // linear 0
    auto set = connected_components(m, Connectivity::Faces6);
    REQUIRE(set.instances.size() == 3);
    CHECK(set.instances[0].id == 1);
    CHECK(set.instances[0].voxels.front() == 0);
    CHECK(set.instances[1].voxels.front() == 7);
    CHECK(set.instances[2].voxels.front() == 12);
}

TEST_CASE("partition matches flood-fill oracle on random masks") {
    Rng rng(77);
    for (int rep = 0; rep < 25; ++rep) {
        Volume m = make_volume({16, 16, 16}, {1, 1, 1}, VolumeKind::Label, 0.0f);
        const double density = rng.uniform(0.05, 0.5);
        for (auto& v : m.data) v = rng.uniform() < density ? 1.0f : 0.0f;
        for (int conn : {6, 18, 26}) {
            auto got = as_partition(connected_components(m, connectivity_from_int(conn)));
            auto want = flood_fill_oracle(m, conn);
            CHECK(got == want);
        }
    }
}

TEST_CASE("instance voxels cover the mask and are disjoint") {
    Rng rng(5);
    Volume m = make_volume({12, 12, 12}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    for (auto& v : m.data) v = rng.uniform() < 0.3 ? 1.0f : 0.0f;
    auto set = connected_components(m, Connectivity::Full26);
    std::vector<std::uint32_t> all;
    for (const auto& inst : set.instances) {
        CHECK(!inst.voxels.empty());
        CHECK(std::is_sorted(inst.voxels.begin(), inst.voxels.end()));
        all.insert(all.end(), inst.voxels.begin(), inst.voxels.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end()); // disjoint
    std::size_t fg = 0;
    for (float v : m.data) fg += v != 0.0f;
    CHECK(all.size() == fg);
}

TEST_CASE("volume_mm3 uses spacing") {
    Volume m = make_volume({3, 1, 1}, {2.0, 0.5, 4.0}, VolumeKind::Label, 1.0f);
    auto set = connected_components(m, Connectivity::Faces6);
    REQUIRE(set.instances.size() == 1);
    CHECK(set.instances[0].volume_mm3 == doctest::Approx(3 * 4.0));
}

TEST_CASE("threshold is strictly greater-than") {
    Volume p = make_volume({2, 2, 1}, {1, 1, 1}, VolumeKind::Probability, 0.55f);
    Volume b = threshold(p, 0.55);
    for (float v : b.data) CHECK(v == 0.0f);

    p.data = {0.5f, 0.6f, 1.0f, 0.0f};
    b = threshold(p, 0.55);
    CHECK(b.data == std::vector<float>{0.0f, 1.0f, 1.0f, 0.0f});
}

TEST_CASE("threshold rejects t outside (0,1)") {
    Volume p = make_volume({2, 1, 1}, {1, 1, 1}, VolumeKind::Probability, 1.0f);
    CHECK_THROWS_AS(threshold(p, 0.0), Error);
    CHECK_THROWS_AS(threshold(p, 1.0), Error);
    CHECK_THROWS_AS(threshold(p, -0.2), Error);
    Volume b = threshold(p, 0.55);
    for (float v : b.data) CHECK(v == 1.0f);
}

TEST_CASE("min-size filter renumbers ids") {
    Volume m = make_volume({9, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    m.at(0, 0, 0) = 1.0f; // size 1
    m.at(3, 0, 0) = 1.0f;
    m.at(4, 0, 0) = 1.0f; // size 2
    m.at(7, 0, 0) = 1.0f; // size 1
    auto set = filter_min_size(connected_components(m, Connectivity::Faces6), 2);
    REQUIRE(set.instances.size() == 1);
    CHECK(set.instances[0].id == 1);
    CHECK(set.instances[0].voxels.size() == 2);
}

TEST_CASE("label volume reinterpreted as instances") {
    Volume lab = make_volume({6, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    lab.at(1, 0, 0) = 5.0f;
    lab.at(2, 0, 0) = 5.0f;
    lab.at(4, 0, 0) = 2.0f;
    auto set = instances_from_volume(lab, Connectivity::Full26);
    REQUIRE(set.instances.size() == 2);
    // renumbered by smallest linear index: label 5 starts at voxel 1
    CHECK(set.instances[0].id == 1);
    CHECK(set.instances[0].voxels == std::vector<std::uint32_t>{1, 2});
    CHECK(set.instances[1].voxels == std::vector<std::uint32_t>{4});
}

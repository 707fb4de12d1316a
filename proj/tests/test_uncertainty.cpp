#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "lesionunc/rng.hpp"
#include "lesionunc/uncertainty.hpp"

using namespace lunc;

namespace {

Volume prob_volume(std::array<int, 3> dims, const std::vector<float>& values) {
    Volume v = make_volume(dims, {1, 1, 1}, VolumeKind::Probability);
    v.data = values;
    return v;
}

Volume prob_from_mask(const Volume& mask) {
    Volume p = mask;
    p.kind = VolumeKind::Probability;
    for (auto& x : p.data) x = x != 0.0f ? 0.95f : 0.05f;
    return p;
}

} // namespace

TEST_CASE("mean_prediction basics") {
    Volume a = prob_volume({1, 1, 1}, {0.2f});
    Volume b = prob_volume({1, 1, 1}, {0.4f});
    Volume c = prob_volume({1, 1, 1}, {0.9f});
    auto s = make_sample_set({a, b, c});
    CHECK(mean_prediction(s).data[0] == doctest::Approx(0.5).epsilon(1e-7));

    auto same = make_sample_set({a, a, a});
    CHECK(mean_prediction(same).data[0] == doctest::Approx(0.2f));

    Volume zero = prob_volume({2, 1, 1}, {0.0f, 0.0f});
    Volume one = prob_volume({2, 1, 1}, {1.0f, 1.0f});
    auto half = make_sample_set({zero, one});
    for (float v : mean_prediction(half).data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("sample sets validate membership") {
    Volume a = prob_volume({2, 1, 1}, {0.2f, 0.3f});
    CHECK_THROWS_AS(make_sample_set({a}), Error); // M >= 2
    Volume b = make_volume({3, 1, 1}, {1, 1, 1}, VolumeKind::Probability, 0.5f);
    CHECK_THROWS_AS(make_sample_set({a, b}), Error); // dim mismatch
}

TEST_CASE("voxel entropy values") {
    Volume p = prob_volume({4, 1, 1}, {0.5f, 0.0f, 1.0f, 0.25f});
    Volume h = voxel_entropy(p);
    CHECK(h.data[0] == doctest::Approx(1.0));
    CHECK(h.data[1] == 0.0f);
    CHECK(h.data[2] == 0.0f);
    CHECK(h.data[3] == doctest::Approx(0.8112781).epsilon(1e-6));
}

TEST_CASE("entropy is symmetric in p and 1-p") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double p = rng.uniform();
        CHECK(binary_entropy(p) == doctest::Approx(binary_entropy(1.0 - p)).epsilon(1e-12));
    }
}

TEST_CASE("mutual information") {
    Volume zero = prob_volume({1, 1, 1}, {0.0f});
    Volume one = prob_volume({1, 1, 1}, {1.0f});
    CHECK(voxel_mutual_information(make_sample_set({zero, one})).data[0] == doctest::Approx(1.0));

    Volume half = prob_volume({1, 1, 1}, {0.5f});
    CHECK(voxel_mutual_information(make_sample_set({half, half})).data[0] == doctest::Approx(0.0));

    Volume p = prob_volume({1, 1, 1}, {0.37f});
    CHECK(voxel_mutual_information(make_sample_set({p, p, p})).data[0] == doctest::Approx(0.0));
}

TEST_CASE("MI bounded by entropy of the mean") {
    Rng rng(9);
    std::vector<Volume> samples;
    for (int m = 0; m < 5; ++m) {
        Volume v = make_volume({6, 6, 6}, {1, 1, 1}, VolumeKind::Probability);
        for (auto& x : v.data) x = static_cast<float>(rng.uniform());
        samples.push_back(std::move(v));
    }
    auto s = make_sample_set(std::move(samples));
    Volume mi = voxel_mutual_information(s);
    Volume hm = voxel_entropy(mean_prediction(s));
    for (std::size_t i = 0; i < mi.data.size(); ++i) {
        CHECK(mi.data[i] >= 0.0f);
        CHECK(mi.data[i] <= hm.data[i] + 1e-6f);
    }
}

TEST_CASE("correspond picks the max-IoU component") {
    // L = {(0,0,0),(1,0,0)}; candidates {(1,0,0),(2,0,0)} iou 1/3 and {(1,0,0)} iou 1/2
    Volume grid = make_volume({4, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    InstanceSet lesions;
    lesions.dims = grid.dims;
    lesions.spacing = grid.spacing;
    LesionInstance L{1, {0, 1}, {}, 2.0};

    InstanceSet candidates;
    candidates.dims = grid.dims;
    candidates.spacing = grid.spacing;
    candidates.instances.push_back({1, {1, 2}, {}, 2.0});
    candidates.instances.push_back({2, {1}, {}, 1.0});

    auto r = correspond(L, candidates);
    REQUIRE(r.matched_id.has_value());
    CHECK(*r.matched_id == 2);
    CHECK(r.iou == doctest::Approx(0.5));
}

TEST_CASE("correspond self-match and disjoint candidates") {
    InstanceSet candidates;
    candidates.dims = {8, 1, 1};
    candidates.spacing = {1, 1, 1};
    candidates.instances.push_back({1, {2, 3}, {}, 2.0});
    candidates.instances.push_back({2, {6}, {}, 1.0});

    LesionInstance self{1, {2, 3}, {}, 2.0};
    auto r = correspond(self, candidates);
    CHECK(*r.matched_id == 1);
    CHECK(r.iou == 1.0);

    LesionInstance far{1, {0}, {}, 1.0};
    auto r2 = correspond(far, candidates);
    CHECK_FALSE(r2.matched_id.has_value());
    CHECK(r2.iou == 0.0);
}

TEST_CASE("lsu worked example: one exact sample, one IoU 1/3 sample") {
    // grid 1x1x4, L = voxels z=0,1
    Volume gt = make_volume({1, 1, 4}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    gt.at(0, 0, 0) = 1.0f;
    gt.at(0, 0, 1) = 1.0f;

    Volume s1 = gt; // exact
    Volume s2 = make_volume({1, 1, 4}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    s2.at(0, 0, 1) = 1.0f;
    s2.at(0, 0, 2) = 1.0f; // best component IoU 1/3

    auto samples = make_sample_set({prob_from_mask(s1), prob_from_mask(s2)});
    auto subject = compute_subject_uncertainty(samples, 0.55, Connectivity::Full26);
    REQUIRE(subject.lesions.size() == 1);
    // final prediction = mean > 0.55 -> only voxel z=1 ... construct instead from gt lesion:
    auto components = extract_sample_components(samples, 0.55, Connectivity::Full26);
    LesionInstance L{1, {0, 1}, {}, 2.0};
    auto u = lesion_structural_uncertainty(L, components);
    CHECK(u.per_sample_iou[0] == doctest::Approx(1.0));
    CHECK(u.per_sample_iou[1] == doctest::Approx(1.0 / 3.0));
    CHECK(u.lsu == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("lsu extremes: perfect agreement and total absence") {
    Volume mask = make_volume({5, 5, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    mask.at(1, 1, 0) = 1.0f;
    mask.at(2, 1, 0) = 1.0f;
    auto agree = make_sample_set({prob_from_mask(mask), prob_from_mask(mask), prob_from_mask(mask)});
    auto subject = compute_subject_uncertainty(agree, 0.55, Connectivity::Full26);
    REQUIRE(subject.lesions.size() == 1);
    CHECK(subject.lesions[0].lsu == 0.0);

    Volume empty = make_volume({5, 5, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    auto comps = extract_sample_components(make_sample_set({prob_from_mask(empty), prob_from_mask(empty)}),
                                           0.55, Connectivity::Full26);
    LesionInstance L{1, {6, 7}, {}, 2.0};
    CHECK(lesion_structural_uncertainty(L, comps).lsu == 1.0);
}

TEST_CASE("lsu is bitwise invariant to sample permutation") {
    Rng rng(123);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Volume> masks;
        for (int m = 0; m < 5; ++m) {
            Volume v = make_volume({10, 10, 4}, {1, 1, 1}, VolumeKind::Label, 0.0f);
            for (auto& x : v.data) x = rng.uniform() < 0.2 ? 1.0f : 0.0f;
            masks.push_back(std::move(v));
        }
        std::vector<Volume> probs;
        for (const auto& m : masks) probs.push_back(prob_from_mask(m));
        auto subject = compute_subject_uncertainty(make_sample_set(probs), 0.55, Connectivity::Full26);

        std::vector<Volume> shuffled = probs;
        rng.shuffle(shuffled);
        auto subject2 = compute_subject_uncertainty(make_sample_set(shuffled), 0.55, Connectivity::Full26);

        REQUIRE(subject.lesions.size() == subject2.lesions.size());
        for (std::size_t i = 0; i < subject.lesions.size(); ++i) {
            const double a = subject.lesions[i].lsu;
            const double b = subject2.lesions[i].lsu;
            CHECK(std::memcmp(&a, &b, 8) == 0);
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
        }
    }
}

TEST_CASE("a sample identical to the final prediction never raises lsu") {
    Rng rng(321);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Volume> probs;
        for (int m = 0; m < 4; ++m) {
            Volume v = make_volume({8, 8, 4}, {1, 1, 1}, VolumeKind::Label, 0.0f);
            for (auto& x : v.data) x = rng.uniform() < 0.25 ? 1.0f : 0.0f;
            probs.push_back(prob_from_mask(v));
        }
        auto s = make_sample_set(probs);
        auto base = compute_subject_uncertainty(s, 0.55, Connectivity::Full26);

        Volume final_mask = threshold(mean_prediction(s), 0.55);
        probs.push_back(prob_from_mask(final_mask));
        auto s2 = make_sample_set(probs);
        auto components = extract_sample_components(s2, 0.55, Connectivity::Full26);
        for (std::size_t i = 0; i < base.final_instances.instances.size(); ++i) {
            auto with = lesion_structural_uncertainty(base.final_instances.instances[i], components);
            CHECK(with.lsu <= base.lesions[i].lsu + 1e-12);
        }
    }
}

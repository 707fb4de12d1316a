#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lesionunc/nifti.hpp"
#include "lesionunc/rng.hpp"
#include "lesionunc/table.hpp"

using namespace lunc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    auto dir = fs::temp_directory_path() / "lesionunc_tests";
    fs::create_directories(dir);
    return dir / name;
}

// hand-built minimal header for reader-only scenarios
std::vector<char> raw_nifti(std::int16_t datatype, std::int16_t bitpix, const char* magic,
                            float scl_slope, float scl_inter, const std::vector<char>& payload,
                            std::int16_t nx = 2, std::int16_t ny = 1, std::int16_t nz = 1) {
    std::vector<char> bytes(352, 0);
    auto put16 = [&](int off, std::int16_t v) { std::memcpy(bytes.data() + off, &v, 2); };
    auto put32i = [&](int off, std::int32_t v) { std::memcpy(bytes.data() + off, &v, 4); };
    auto put32f = [&](int off, float v) { std::memcpy(bytes.data() + off, &v, 4); };
    put32i(0, 348);
    put16(40, 3);  // dim[0]
    put16(42, nx);
    put16(44, ny);
    put16(46, nz);
    for (int i = 4; i < 8; ++i) put16(40 + 2 * i, 1);
    put16(70, datatype);
    put16(72, bitpix);
    for (int i = 1; i <= 3; ++i) put32f(76 + 4 * i, 1.0f);
    put32f(108, 352.0f); // vox_offset
    put32f(112, scl_slope);
    put32f(116, scl_inter);
    std::memcpy(bytes.data() + 344, magic, 4);
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    return bytes;
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("nifti round-trip is identity, float payload bit-exact") {
    Volume v = make_volume({2, 2, 2}, {1.0, 1.5, 2.0}, VolumeKind::Intensity, 0.0f, {4.0, -3.0, 0.5});
    for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = 0.1f * static_cast<float>(i) - 0.3f;

    auto p = temp_file("rt_intensity.nii");
    write_nifti(v, p.string());
    Volume r = read_nifti(p.string());

    CHECK(r.dims == v.dims);
    CHECK(r.spacing == v.spacing);
    CHECK(r.origin == v.origin);
    CHECK(r.kind == v.kind);
    REQUIRE(r.data.size() == v.data.size());
    for (std::size_t i = 0; i < v.data.size(); ++i)
        CHECK(std::memcmp(&r.data[i], &v.data[i], 4) == 0);
}

TEST_CASE("nifti round-trip for probability and label kinds") {
    Volume p = make_volume({3, 2, 2}, {1, 1, 1}, VolumeKind::Probability, 0.25f);
    auto fp = temp_file("rt_prob.nii");
    write_nifti(p, fp.string());
    CHECK(read_nifti(fp.string()).kind == VolumeKind::Probability);

    Volume lab = make_volume({3, 2, 2}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    lab.data[0] = 1.0f;
    lab.data[5] = 2.0f;
    auto fl = temp_file("rt_label.nii");
    write_nifti(lab, fl.string());
    Volume rl = read_nifti(fl.string());
    CHECK(rl.kind == VolumeKind::Label);
    CHECK(rl.data == lab.data);
}

TEST_CASE("random volumes round-trip") {
    Rng rng(42);
    for (int rep = 0; rep < 5; ++rep) {
        Volume v = make_volume({1 + rng.uniform_int(1, 6), 1 + rng.uniform_int(1, 6), 1 + rng.uniform_int(1, 6)},
                               {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)},
                               VolumeKind::Intensity);
        for (auto& x : v.data) x = static_cast<float>(rng.normal(0, 10));
        auto p = temp_file("rt_rand.nii");
        write_nifti(v, p.string());
        Volume r = read_nifti(p.string());
        CHECK(r.data == v.data);
        CHECK(r.dims == v.dims);
    }
}

TEST_CASE("scl_slope and scl_inter applied on read") {
    // uint8 raw value 3 with slope 2, inter 1 -> 7.0
    std::vector<char> payload = {3, 3};
    auto bytes = raw_nifti(2 /*uint8*/, 8, "n+1", 2.0f, 1.0f, payload);
    auto p = temp_file("scl.nii");
    write_bytes(p, bytes);
    Volume v = read_nifti(p.string());
    CHECK(v.data[0] == 7.0f);
    CHECK(v.data[1] == 7.0f);
}

TEST_CASE("slope zero treated as one") {
    std::vector<char> payload = {3, 4};
    auto bytes = raw_nifti(2, 8, "n+1", 0.0f, 0.0f, payload);
    auto p = temp_file("scl0.nii");
    write_bytes(p, bytes);
    Volume v = read_nifti(p.string());
    CHECK(v.data[0] == 3.0f);
    CHECK(v.data[1] == 4.0f);
}

TEST_CASE("detached-header magic rejected") {
    auto bytes = raw_nifti(2, 8, "ni1", 1.0f, 0.0f, {0, 0});
    auto p = temp_file("ni1.nii");
    write_bytes(p, bytes);
    try {
        read_nifti(p.string());
        FAIL("expected CorruptHeader");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptHeader);
    }
}

TEST_CASE("unsupported datatype rejected") {
    auto bytes = raw_nifti(64 /*float64*/, 64, "n+1", 1.0f, 0.0f, std::vector<char>(16, 0));
    auto p = temp_file("f64.nii");
    write_bytes(p, bytes);
    try {
        read_nifti(p.string());
        FAIL("expected UnsupportedDatatype");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedDatatype);
    }
}

TEST_CASE("truncated payload rejected") {
    auto bytes = raw_nifti(2, 8, "n+1", 1.0f, 0.0f, {1}); // promises 2 voxels, carries 1
    auto p = temp_file("trunc.nii");
    write_bytes(p, bytes);
    try {
        read_nifti(p.string());
        FAIL("expected TruncatedData");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TruncatedData);
    }
}

TEST_CASE("byte-swapped file read correctly") {
    auto bytes = raw_nifti(4 /*int16*/, 16, "n+1", 1.0f, 0.0f, {});
    // swap every 16/32-bit header field we set, then append big-endian payload
    auto swap16at = [&](int off) { std::swap(bytes[off], bytes[off + 1]); };
    auto swap32at = [&](int off) {
        std::swap(bytes[off], bytes[off + 3]);
        std::swap(bytes[off + 1], bytes[off + 2]);
    };
    swap32at(0);
    for (int i = 0; i < 8; ++i) swap16at(40 + 2 * i);
    swap16at(70);
    swap16at(72);
    for (int i = 1; i <= 3; ++i) swap32at(76 + 4 * i);
    swap32at(108);
    swap32at(112);
    std::vector<char> payload = {0, 5, 1, 0}; // big-endian int16: 5, 256
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    auto p = temp_file("swapped.nii");
    write_bytes(p, bytes);
    Volume v = read_nifti(p.string());
    CHECK(v.data[0] == 5.0f);
    CHECK(v.data[1] == 256.0f);
}

TEST_CASE("label datatype selection and overflow") {
    Volume lab = make_volume({2, 1, 1}, {1, 1, 1}, VolumeKind::Label, 0.0f);
    lab.data[1] = 300.0f; // needs int16
    auto p = temp_file("lab300.nii");
    write_nifti(lab, p.string());
    Volume r = read_nifti(p.string());
    CHECK(r.data[1] == 300.0f);

    lab.data[1] = 40000.0f;
    try {
        write_nifti(lab, p.string());
        FAIL("expected LabelOverflow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LabelOverflow);
    }
}

TEST_CASE("zero-sized dim rejected") {
    Volume v;
    v.dims = {0, 2, 2};
    v.spacing = {1, 1, 1};
    try {
        write_nifti(v, temp_file("baddim.nii").string());
        FAIL("expected InvalidDims");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidDims);
    }
}

// ------------------------------------------------------------------
// CSV tables
// ------------------------------------------------------------------

TEST_CASE("table round-trip is bitwise") {
    FeatureTable t;
    t.columns = {"f_a", "f_b", "lsu"};
    t.add_row("p01", 1, {0.1, -2.5e-17, 0.25});
    t.add_row("p01", 2, {1.0 / 3.0, 7.0, 1.0});
    t.add_row("p02", 1, {-0.0, 123456.789, 0.5});

    auto p = temp_file("table.csv");
    write_table(t, p.string());
    FeatureTable r = read_table(p.string());

    CHECK(r.columns == t.columns);
    CHECK(r.patient_ids == t.patient_ids);
    CHECK(r.lesion_ids == t.lesion_ids);
    REQUIRE(r.values.size() == t.values.size());
    for (std::size_t i = 0; i < t.values.size(); ++i)
        CHECK(std::memcmp(&r.values[i], &t.values[i], 8) == 0);
}

TEST_CASE("ragged row rejected") {
    auto p = temp_file("ragged.csv");
    std::ofstream(p) << "patient_id,lesion_id,a,b\np01,1,0.5\n";
    try {
        read_table(p.string());
        FAIL("expected RaggedRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RaggedRow);
    }
}

TEST_CASE("duplicate column rejected") {
    auto p = temp_file("dup.csv");
    std::ofstream(p) << "patient_id,lesion_id,lsu,lsu\np01,1,0.5,0.5\n";
    try {
        read_table(p.string());
        FAIL("expected DuplicateColumn");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateColumn);
    }
}

TEST_CASE("non-numeric cell rejected") {
    auto p = temp_file("nonnum.csv");
    std::ofstream(p) << "patient_id,lesion_id,a\np01,1,abc\n";
    try {
        read_table(p.string());
        FAIL("expected NonNumericCell");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonNumericCell);
    }
}

TEST_CASE("non-finite value refused on write") {
    FeatureTable t;
    t.columns = {"a"};
    t.add_row("p01", 1, {std::numeric_limits<double>::infinity()});
    try {
        write_table(t, temp_file("inf.csv").string());
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }
}

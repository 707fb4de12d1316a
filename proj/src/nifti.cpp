#include "lesionunc/nifti.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

namespace lunc {

namespace {

constexpr int DT_UINT8 = 2;
constexpr int DT_INT16 = 4;
constexpr int DT_FLOAT32 = 16;

#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)

static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

void swap16(void* p) {
    auto* b = static_cast<unsigned char*>(p);
    std::swap(b[0], b[1]);
}

void swap32(void* p) {
    auto* b = static_cast<unsigned char*>(p);
    std::swap(b[0], b[3]);
    std::swap(b[1], b[2]);
}

void swap_header(Nifti1Header& h) {
    swap32(&h.sizeof_hdr);
    swap32(&h.extents);
    swap16(&h.session_error);
    for (auto& d : h.dim) swap16(&d);
    swap32(&h.intent_p1);
    swap32(&h.intent_p2);
    swap32(&h.intent_p3);
    swap16(&h.intent_code);
    swap16(&h.datatype);
    swap16(&h.bitpix);
    swap16(&h.slice_start);
    for (auto& p : h.pixdim) swap32(&p);
    swap32(&h.vox_offset);
    swap32(&h.scl_slope);
    swap32(&h.scl_inter);
    swap16(&h.slice_end);
    swap32(&h.cal_max);
    swap32(&h.cal_min);
    swap32(&h.slice_duration);
    swap32(&h.toffset);
    swap32(&h.glmax);
    swap32(&h.glmin);
    swap16(&h.qform_code);
    swap16(&h.sform_code);
    swap32(&h.quatern_b);
    swap32(&h.quatern_c);
    swap32(&h.quatern_d);
    swap32(&h.qoffset_x);
    swap32(&h.qoffset_y);
    swap32(&h.qoffset_z);
    for (auto& v : h.srow_x) swap32(&v);
    for (auto& v : h.srow_y) swap32(&v);
    for (auto& v : h.srow_z) swap32(&v);
}

bool dim0_plausible(std::int16_t d) { return d >= 1 && d <= 7; }

VolumeKind kind_from_descrip(const char* descrip, int datatype) {
    std::string d(descrip, descrip + 80);
    if (d.find("kind=probability") != std::string::npos) return VolumeKind::Probability;
    if (d.find("kind=intensity") != std::string::npos) return VolumeKind::Intensity;
    if (d.find("kind=label") != std::string::npos) return VolumeKind::Label;
    // no marker: integer types hold labels, float holds intensities
    return datatype == DT_FLOAT32 ? VolumeKind::Intensity : VolumeKind::Label;
}

} // namespace

Volume read_nifti(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);

    Nifti1Header h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(h)))
        fail(ErrorCode::CorruptHeader, "file shorter than 348-byte header: " + path);

    bool swapped = false;
    if (!dim0_plausible(h.dim[0])) {
        swap_header(h);
        swapped = true;
        if (!dim0_plausible(h.dim[0]))
            fail(ErrorCode::CorruptHeader, "dim[0] implausible in either byte order: " + path);
    }

    if (std::memcmp(h.magic, "ni1", 4) == 0)
        fail(ErrorCode::CorruptHeader, "detached header files (magic \"ni1\") are not supported: " + path);
    if (std::memcmp(h.magic, "n+1", 4) != 0)
        fail(ErrorCode::CorruptHeader, "bad magic: " + path);
    if (h.sizeof_hdr != 348)
        fail(ErrorCode::CorruptHeader, "sizeof_hdr != 348: " + path);

    // at most 3 effective dimensions
    for (int i = 4; i <= h.dim[0] && i < 8; ++i)
        if (h.dim[i] > 1)
            fail(ErrorCode::CorruptHeader, "more than 3 effective dimensions: " + path);

    std::array<int, 3> dims{1, 1, 1};
    for (int i = 1; i <= 3 && i <= h.dim[0]; ++i) dims[i - 1] = h.dim[i];
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        fail(ErrorCode::CorruptHeader, "non-positive dimension: " + path);

    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        if (i < h.dim[0]) spacing[i] = h.pixdim[i + 1];
        if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
            fail(ErrorCode::CorruptHeader, "non-positive pixdim: " + path);
    }

    int bytes_per = 0;
    switch (h.datatype) {
        case DT_UINT8: bytes_per = 1; break;
        case DT_INT16: bytes_per = 2; break;
        case DT_FLOAT32: bytes_per = 4; break;
        default:
            fail(ErrorCode::UnsupportedDatatype,
                 "datatype " + std::to_string(h.datatype) + " not in {uint8, int16, float32}: " + path);
    }

    const std::int64_t n = static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
    long offset = static_cast<long>(h.vox_offset);
    if (offset < 348) fail(ErrorCode::CorruptHeader, "vox_offset < 348: " + path);

    in.seekg(offset, std::ios::beg);
    std::vector<unsigned char> raw(static_cast<std::size_t>(n) * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        fail(ErrorCode::TruncatedData, "payload shorter than header promises: " + path);

    double slope = h.scl_slope;
    if (slope == 0.0f) slope = 1.0;
    const double inter = h.scl_inter;

    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.origin = {h.qoffset_x, h.qoffset_y, h.qoffset_z};
    v.kind = kind_from_descrip(h.descrip, h.datatype);
    v.data.resize(static_cast<std::size_t>(n));

    switch (h.datatype) {
        case DT_UINT8:
            for (std::int64_t i = 0; i < n; ++i)
                v.data[i] = static_cast<float>(slope * raw[i] + inter);
            break;
        case DT_INT16:
            for (std::int64_t i = 0; i < n; ++i) {
                std::int16_t s;
                std::memcpy(&s, raw.data() + 2 * i, 2);
                if (swapped) swap16(&s);
                v.data[i] = static_cast<float>(slope * s + inter);
            }
            break;
        case DT_FLOAT32:
            for (std::int64_t i = 0; i < n; ++i) {
                float f;
                std::memcpy(&f, raw.data() + 4 * i, 4);
                if (swapped) swap32(&f);
                v.data[i] = (slope == 1.0 && inter == 0.0) ? f : static_cast<float>(slope * f + inter);
            }
            break;
    }

    validate_volume(v);
    return v;
}

void write_nifti(const Volume& v, const std::string& path) {
    validate_volume(v);

    int datatype = DT_FLOAT32;
    if (v.kind == VolumeKind::Label) {
        float maxv = 0.0f;
        for (float x : v.data) maxv = std::max(maxv, x);
        if (maxv <= 255.0f)
            datatype = DT_UINT8;
        else if (maxv <= 32767.0f)
            datatype = DT_INT16;
        else
            fail(ErrorCode::LabelOverflow, "label value " + std::to_string(maxv) + " exceeds int16 range");
    }

    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(v.dims[0]);
    h.dim[2] = static_cast<std::int16_t>(v.dims[1]);
    h.dim[3] = static_cast<std::int16_t>(v.dims[2]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = static_cast<std::int16_t>(datatype);
    h.bitpix = static_cast<std::int16_t>(datatype == DT_UINT8 ? 8 : (datatype == DT_INT16 ? 16 : 32));
    h.pixdim[0] = 1.0f; // qfac
    h.pixdim[1] = static_cast<float>(v.spacing[0]);
    h.pixdim[2] = static_cast<float>(v.spacing[1]);
    h.pixdim[3] = static_cast<float>(v.spacing[2]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // NIFTI_UNITS_MM
    std::string descrip = std::string("lesionunc kind=") + volume_kind_name(v.kind);
    std::memcpy(h.descrip, descrip.c_str(), std::min<std::size_t>(descrip.size(), 79));
    h.qform_code = 1; // identity rotation, offset only
    h.quatern_b = h.quatern_c = h.quatern_d = 0.0f;
    h.qoffset_x = static_cast<float>(v.origin[0]);
    h.qoffset_y = static_cast<float>(v.origin[1]);
    h.qoffset_z = static_cast<float>(v.origin[2]);
    std::memcpy(h.magic, "n+1", 4);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot open for writing: " + path);

    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const char pad[4] = {0, 0, 0, 0};
    out.write(pad, 4);

    const std::int64_t n = v.voxel_count();
    switch (datatype) {
        case DT_UINT8: {
            std::vector<unsigned char> buf(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>(v.data[i]);
            out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
            break;
        }
        case DT_INT16: {
            std::vector<std::int16_t> buf(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) buf[i] = static_cast<std::int16_t>(v.data[i]);
            out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 2));
            break;
        }
        case DT_FLOAT32:
            out.write(reinterpret_cast<const char*>(v.data.data()), static_cast<std::streamsize>(n * 4));
            break;
    }
    out.flush();
    if (!out) fail(ErrorCode::IoFailure, "write failed: " + path);
}

} // namespace lunc

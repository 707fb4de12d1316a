#include "lesionunc/volume.hpp"

#include <cmath>
#include <string>

namespace lunc {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::CorruptHeader: return "CorruptHeader";
        case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
        case ErrorCode::TruncatedData: return "TruncatedData";
        case ErrorCode::LabelOverflow: return "LabelOverflow";
        case ErrorCode::InvalidDims: return "InvalidDims";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::DuplicateColumn: return "DuplicateColumn";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::BothEmpty: return "BothEmpty";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::ConstantTarget: return "ConstantTarget";
        case ErrorCode::TooFewGroups: return "TooFewGroups";
        case ErrorCode::SpecInfeasible: return "SpecInfeasible";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidVolume: return "InvalidVolume";
    }
    return "UnknownError";
}

const char* volume_kind_name(VolumeKind k) {
    switch (k) {
        case VolumeKind::Intensity: return "intensity";
        case VolumeKind::Probability: return "probability";
        case VolumeKind::Label: return "label";
    }
    return "unknown";
}

Volume make_volume(std::array<int, 3> dims, std::array<double, 3> spacing, VolumeKind kind,
                   float fill, std::array<double, 3> origin) {
    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.origin = origin;
    v.kind = kind;
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        fail(ErrorCode::InvalidDims, "dims must be positive");
    v.data.assign(static_cast<std::size_t>(v.voxel_count()), fill);
    validate_volume(v);
    return v;
}

void validate_volume(const Volume& v) {
    if (v.dims[0] <= 0 || v.dims[1] <= 0 || v.dims[2] <= 0)
        fail(ErrorCode::InvalidDims, "dims must be positive");
    for (double s : v.spacing)
        if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorCode::InvalidDims, "spacing must be positive");
    if (static_cast<std::int64_t>(v.data.size()) != v.voxel_count())
        fail(ErrorCode::InvalidVolume, "data length " + std::to_string(v.data.size()) +
                                           " != nx*ny*nz " + std::to_string(v.voxel_count()));
    if (v.kind == VolumeKind::Probability) {
        for (float x : v.data)
            if (!(x >= 0.0f && x <= 1.0f))
                fail(ErrorCode::InvalidVolume, "probability value outside [0,1]: " + std::to_string(x));
    } else if (v.kind == VolumeKind::Label) {
        for (float x : v.data)
            if (!(x >= 0.0f) || x != std::floor(x) || x > 16777216.0f)
                fail(ErrorCode::InvalidVolume, "label value not a non-negative integer: " + std::to_string(x));
    }
}

} // namespace lunc

#ifndef LESIONUNC_NIFTI_HPP
#define LESIONUNC_NIFTI_HPP

#include <string>

#include "lesionunc/volume.hpp"

namespace lunc {

// Minimal single-file NIfTI-1 subset.
//
// Supported on read: magic "n+1\0", datatypes uint8/int16/float32, at most
// 3 effective dimensions, byte order auto-detected from dim[0]. scl_slope /
// scl_inter are applied (slope 0 treated as 1). Spacing comes from
// pixdim[1..3], origin from qoffset_{x,y,z}; orientation codes are ignored —
// callers must supply co-registered inputs.
//
// On write: 348-byte header + 4 zero bytes (vox_offset = 352), little-endian,
// no extensions. Intensity/probability volumes are stored as float32; label
// volumes as uint8 when max label <= 255, else int16, else LabelOverflow.
// The volume kind is recorded in descrip as "lesionunc kind=<k>" so a write
// followed by a read restores the Volume field-for-field.
//
// Not supported (by design): .nii.gz, detached .hdr/.img pairs ("ni1\0"),
// extensions, orientation matrices, resampling.

Volume read_nifti(const std::string& path);
void write_nifti(const Volume& v, const std::string& path);

} // namespace lunc

#endif

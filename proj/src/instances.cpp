#include "lesionunc/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace lunc {

Connectivity connectivity_from_int(int c) {
    switch (c) {
        case 6: return Connectivity::Faces6;
        case 18: return Connectivity::Edges18;
        case 26: return Connectivity::Full26;
    }
    fail(ErrorCode::InvalidArgument, "connectivity must be 6, 18 or 26, got " + std::to_string(c));
}

const std::array<std::array<int, 3>, 26>& neighbor_offsets() {
    static const std::array<std::array<int, 3>, 26> offsets = [] {
        std::array<std::array<int, 3>, 26> o{};
        std::size_t k = 0;
        // faces, then edges, then corners, so a prefix matches the connectivity
        for (int order = 1; order <= 3; ++order)
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if (std::abs(dx) + std::abs(dy) + std::abs(dz) == order)
                            o[k++] = {dx, dy, dz};
        return o;
    }();
    return offsets;
}

std::size_t neighbor_offset_count(Connectivity c) {
    switch (c) {
        case Connectivity::Faces6: return 6;
        case Connectivity::Edges18: return 18;
        case Connectivity::Full26: return 26;
    }
    return 26;
}

namespace {

bool is_foreground(float v) { return v > 0.5f; }

void check_binary(const Volume& mask) {
    for (float v : mask.data)
        if (v != 0.0f && v != 1.0f)
            fail(ErrorCode::InvalidArgument, "mask is not binary, found value " + std::to_string(v));
}

InstanceSet finalize_instances(const Volume& grid, std::vector<std::vector<std::uint32_t>> components,
                               InstanceSource source) {
    // id order: smallest linear index of each component
    for (auto& c : components) std::sort(c.begin(), c.end());
    std::sort(components.begin(), components.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    InstanceSet set;
    set.dims = grid.dims;
    set.spacing = grid.spacing;
    set.origin = grid.origin;
    set.instances.reserve(components.size());
    const double vox = grid.voxel_volume_mm3();
    int id = 1;
    for (auto& c : components) {
        LesionInstance inst;
        inst.id = id++;
        inst.volume_mm3 = static_cast<double>(c.size()) * vox;
        inst.voxels = std::move(c);
        inst.source = source;
        set.instances.push_back(std::move(inst));
    }
    return set;
}

} // namespace

InstanceSet connected_components(const Volume& mask, Connectivity connectivity, InstanceSource source) {
    check_binary(mask);
    const std::int64_t n = mask.voxel_count();
    if (n > std::numeric_limits<std::uint32_t>::max())
        fail(ErrorCode::InvalidDims, "volume too large for 32-bit voxel indices");

    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    const auto& offs = neighbor_offsets();
    const std::size_t n_offs = neighbor_offset_count(connectivity);

    std::vector<std::uint8_t> visited(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<std::uint32_t>> components;
    std::vector<std::uint32_t> stack;

    for (std::int64_t seed = 0; seed < n; ++seed) {
        if (visited[seed] || !is_foreground(mask.data[seed])) continue;
        std::vector<std::uint32_t> comp;
        stack.clear();
        stack.push_back(static_cast<std::uint32_t>(seed));
        visited[seed] = 1;
        while (!stack.empty()) {
            const std::uint32_t cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            const int x = static_cast<int>(cur % static_cast<std::uint32_t>(nx));
            const std::uint32_t rest = cur / static_cast<std::uint32_t>(nx);
            const int y = static_cast<int>(rest % static_cast<std::uint32_t>(ny));
            const int z = static_cast<int>(rest / static_cast<std::uint32_t>(ny));
            for (std::size_t k = 0; k < n_offs; ++k) {
                const int xx = x + offs[k][0], yy = y + offs[k][1], zz = z + offs[k][2];
                if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz) continue;
                const std::int64_t ni = mask.linear_index(xx, yy, zz);
                if (visited[ni] || !is_foreground(mask.data[ni])) continue;
                visited[ni] = 1;
                stack.push_back(static_cast<std::uint32_t>(ni));
            }
        }
        components.push_back(std::move(comp));
    }
    return finalize_instances(mask, std::move(components), source);
}

Volume threshold(const Volume& prob, double t) {
    if (!(t > 0.0 && t < 1.0))
        fail(ErrorCode::InvalidArgument, "threshold must lie in (0,1), got " + std::to_string(t));
    for (float v : prob.data)
        if (!(v >= 0.0f && v <= 1.0f))
            fail(ErrorCode::InvalidVolume, "probability value outside [0,1]: " + std::to_string(v));

    Volume out = prob;
    out.kind = VolumeKind::Label;
    // compare at the data's own precision, so a stored 0.55f is background at t = 0.55
    const float tf = static_cast<float>(t);
    for (auto& v : out.data) v = (v > tf) ? 1.0f : 0.0f;
    return out;
}

Volume rasterize_instances(const InstanceSet& set) {
    Volume out = make_volume(set.dims, set.spacing, VolumeKind::Label, 0.0f, set.origin);
    for (const auto& inst : set.instances)
        for (std::uint32_t v : inst.voxels) out.data[v] = static_cast<float>(inst.id);
    return out;
}

InstanceSet filter_min_size(const InstanceSet& set, std::int64_t min_voxels) {
    if (min_voxels <= 1) return set;
    InstanceSet out;
    out.dims = set.dims;
    out.spacing = set.spacing;
    out.origin = set.origin;
    int id = 1;
    for (const auto& inst : set.instances) {
        if (static_cast<std::int64_t>(inst.voxels.size()) < min_voxels) continue;
        LesionInstance kept = inst;
        kept.id = id++;
        out.instances.push_back(std::move(kept));
    }
    return out;
}

InstanceSet instances_from_volume(const Volume& v, Connectivity connectivity, InstanceSource source) {
    bool binary = true;
    for (float x : v.data) {
        if (x != 0.0f && x != 1.0f) {
            binary = false;
            break;
        }
    }
    if (binary) return connected_components(v, connectivity, source);

    std::map<std::int64_t, std::vector<std::uint32_t>> by_label;
    for (std::int64_t i = 0; i < v.voxel_count(); ++i) {
        const float x = v.data[i];
        if (x == 0.0f) continue;
        if (!(x > 0.0f) || x != std::floor(x))
            fail(ErrorCode::InvalidVolume, "instance volume holds a non-integer value: " + std::to_string(x));
        by_label[static_cast<std::int64_t>(x)].push_back(static_cast<std::uint32_t>(i));
    }
    std::vector<std::vector<std::uint32_t>> components;
    components.reserve(by_label.size());
    for (auto& [label, voxels] : by_label) components.push_back(std::move(voxels));
    return finalize_instances(v, std::move(components), source);
}

} // namespace lunc

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parcelsteer/atlas_meta.hpp"

namespace parcelsteer {

struct Dims3 {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t voxels() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    std::size_t index(int x, int y, int z) const noexcept {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
    }
    bool operator==(const Dims3&) const = default;
};

/// Orientation and bookkeeping fields of a NIfTI-1 header. They are carried
/// through load/save untouched and never interpreted; slices index array axes.
struct NiftiGeometry {
    std::array<float, 8> pixdim{1.f, 1.f, 1.f, 1.f, 1.f, 1.f, 1.f, 1.f};
    std::uint8_t xyzt_units = 0;
    std::uint8_t dim_info = 0;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    std::array<float, 3> quatern{0.f, 0.f, 0.f};
    std::array<float, 3> qoffset{0.f, 0.f, 0.f};
    std::array<std::array<float, 4>, 3> srow{{{1.f, 0.f, 0.f, 0.f}, {0.f, 1.f, 0.f, 0.f}, {0.f, 0.f, 1.f, 0.f}}};
    float toffset = 0.f;
    std::string descrip;

    bool operator==(const NiftiGeometry&) const = default;
};

/// 4D BOLD series, x fastest: sample (x,y,z,t) lives at x + nx*(y + ny*(z + nz*t)).
struct TimeSeriesVolume {
    Dims3 spatial;
    int nt = 0;
    std::vector<float> data;
    NiftiGeometry geometry;

    std::size_t voxels() const noexcept { return spatial.voxels(); }
    float at(int x, int y, int z, int t) const noexcept {
        return data[spatial.index(x, y, z) + voxels() * static_cast<std::size_t>(t)];
    }
    std::array<float, 3> voxel_size_mm() const noexcept {
        return {geometry.pixdim[1], geometry.pixdim[2], geometry.pixdim[3]};
    }
};

struct AtlasVolume {
    Dims3 dims;
    std::vector<std::int32_t> labels;
    NiftiGeometry geometry;

    std::int32_t at(int x, int y, int z) const noexcept { return labels[dims.index(x, y, z)]; }
};

enum class NiftiDatatype : std::int16_t { Int16 = 4, Int32 = 8, Float32 = 16 };

// Scans: float32 (16) or int16 (4, promoted via scl_slope/scl_inter).
TimeSeriesVolume decode_timeseries(std::string_view bytes);
TimeSeriesVolume load_timeseries(const std::filesystem::path& path);
std::string encode_timeseries(const TimeSeriesVolume& vol);
void save_timeseries(const TimeSeriesVolume& vol, const std::filesystem::path& path);

// Label volumes: int16 (4) or int32 (8). Written as int16 when every label
// fits, int32 otherwise.
AtlasVolume decode_label_volume(std::string_view bytes);
AtlasVolume load_label_volume(const std::filesystem::path& path);
std::string encode_label_volume(const AtlasVolume& vol);
void save_label_volume(const AtlasVolume& vol, const std::filesystem::path& path);

/// Loads a label volume plus its metadata table and checks that every
/// nonzero label in the grid is listed (UnknownLabel otherwise).
std::pair<AtlasVolume, AtlasMeta> load_atlas(const std::filesystem::path& vol_path,
                                             const std::filesystem::path& meta_path);

void validate_atlas(const AtlasVolume& atlas, const AtlasMeta& meta);
void check_compatible(const TimeSeriesVolume& scan, const AtlasVolume& atlas);

/// Per-voxel temporal mean, used as the grayscale underlay for slice views.
std::vector<float> temporal_mean(const TimeSeriesVolume& scan);

} // namespace parcelsteer

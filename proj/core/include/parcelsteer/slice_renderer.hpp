#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "parcelsteer/hierarchy.hpp"
#include "parcelsteer/volume_io.hpp"

namespace parcelsteer {

/// Sagittal = yz plane at fixed x, coronal = xz at fixed y, axial = xy at
/// fixed z. In-plane coordinates (u, v) are the two remaining array axes in
/// (x, y, z) order.
enum class Plane : std::uint8_t { Sagittal, Coronal, Axial };

std::string_view to_string(Plane plane) noexcept;
Plane parse_plane(std::string_view name);  // InvalidPlane
int plane_extent(const Dims3& dims, Plane plane) noexcept;

struct LabelImage {
    int width = 0;   // u extent
    int height = 0;  // v extent
    std::vector<std::int32_t> labels;  // row-major, labels[v * width + u]

    std::int32_t at(int u, int v) const noexcept { return labels[static_cast<std::size_t>(v) * width + u]; }
};

/// Pixel corner coordinates: pixel (u, v) spans [u, u+1] x [v, v+1].
struct Point {
    int u = 0;
    int v = 0;
    bool operator==(const Point&) const = default;
};

/// Closed staircase polyline (first point repeated at the end). The region is
/// on the left of travel, so outer boundaries have positive shoelace area and
/// hole boundaries negative.
struct Contour {
    std::int32_t label = 0;
    std::vector<Point> points;
    bool hole = false;
};

double signed_area(std::span<const Point> closed_polyline) noexcept;

/// Pixel-edge boundaries of every 4-connected region of each nonzero label.
/// Diagonal contacts do not connect regions.
std::vector<Contour> trace_contours(const LabelImage& image);

/// In-plane grid of current leaf ids (0 = background).
LabelImage slice_labels(std::span<const ParcelEntry> parcellation, const AtlasVolume& atlas, Plane plane, int index);

/// Any scalar volume sliced the same way (used for the mean-image underlay).
std::vector<float> slice_values(std::span<const float> volume, const Dims3& dims, Plane plane, int index);

struct SliceContour {
    int leaf_id = 0;
    int network_id = 0;
    bool hole = false;
    bool highlighted = false;
    std::vector<Point> points;
};

struct SliceOverlay {
    Plane plane = Plane::Axial;
    int index = 0;
    LabelImage label_image;
    std::vector<SliceContour> contours;
    std::optional<int> highlight;
};

SliceOverlay render_slice(std::span<const ParcelEntry> parcellation, const AtlasVolume& atlas, Plane plane, int index,
                          std::optional<int> highlight = std::nullopt);

} // namespace parcelsteer

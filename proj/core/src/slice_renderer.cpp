#include "parcelsteer/slice_renderer.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

std::string_view to_string(Plane plane) noexcept {
    switch (plane) {
    case Plane::Sagittal: return "sagittal";
    case Plane::Coronal: return "coronal";
    case Plane::Axial: return "axial";
    }
    return "axial";
}

Plane parse_plane(std::string_view name) {
    for (Plane p : {Plane::Sagittal, Plane::Coronal, Plane::Axial})
        if (to_string(p) == name) return p;
    throw Error(ErrorKind::InvalidPlane, "plane must be sagittal, coronal or axial", std::string(name));
}

int plane_extent(const Dims3& dims, Plane plane) noexcept {
    switch (plane) {
    case Plane::Sagittal: return dims.nx;
    case Plane::Coronal: return dims.ny;
    case Plane::Axial: return dims.nz;
    }
    return 0;
}

namespace {

struct PlaneGeometry {
    int width = 0;
    int height = 0;
};

PlaneGeometry plane_geometry(const Dims3& d, Plane plane, int index) {
    const int extent = plane_extent(d, plane);
    if (index < 0 || index >= extent)
        throw Error(ErrorKind::IndexOutOfRange, "slice index outside the volume",
                    std::string(to_string(plane)) + " " + std::to_string(index) + " not in [0," + std::to_string(extent) + ")");
    switch (plane) {
    case Plane::Sagittal: return {d.ny, d.nz};
    case Plane::Coronal: return {d.nx, d.nz};
    case Plane::Axial: return {d.nx, d.ny};
    }
    return {};
}

std::size_t voxel_of(const Dims3& d, Plane plane, int index, int u, int v) {
    switch (plane) {
    case Plane::Sagittal: return d.index(index, u, v);
    case Plane::Coronal: return d.index(u, index, v);
    case Plane::Axial: return d.index(u, v, index);
    }
    return 0;
}

struct Edge {
    Point from;
    Point to;
};

Point direction(const Edge& e) { return {e.to.u - e.from.u, e.to.v - e.from.v}; }

// Drops interior points of straight runs; keeps the loop closed.
std::vector<Point> simplify(const std::vector<Point>& loop) {
    const std::size_t n = loop.size() - 1;  // distinct vertices
    auto turn = [&](std::size_t i) {
        const Point& prev = loop[(i + n - 1) % n];
        const Point& cur = loop[i];
        const Point& next = loop[(i + 1) % n];
        const long cross = static_cast<long>(cur.u - prev.u) * (next.v - cur.v) -
                           static_cast<long>(cur.v - prev.v) * (next.u - cur.u);
        return cross != 0;
    };
    std::vector<Point> out;
    for (std::size_t i = 0; i < n; ++i)
        if (turn(i)) out.push_back(loop[i]);
    out.push_back(out.front());
    return out;
}

} // namespace

double signed_area(std::span<const Point> pts) noexcept {
    long long twice = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        twice += static_cast<long long>(pts[i].u) * pts[i + 1].v - static_cast<long long>(pts[i + 1].u) * pts[i].v;
    return static_cast<double>(twice) / 2.0;
}

std::vector<Contour> trace_contours(const LabelImage& image) {
    const int w = image.width;
    const int h = image.height;
    std::vector<int> component(static_cast<std::size_t>(w) * h, -1);
    std::vector<std::int32_t> component_label;
    std::vector<std::vector<std::pair<int, int>>> component_pixels;

    // 4-connected components in raster order (v major, then u).
    std::vector<std::pair<int, int>> queue;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::size_t p = static_cast<std::size_t>(v) * w + u;
            const std::int32_t label = image.labels[p];
            if (label == 0 || component[p] >= 0) continue;
            const int cid = static_cast<int>(component_label.size());
            component_label.push_back(label);
            component_pixels.emplace_back();
            queue.assign(1, {u, v});
            component[p] = cid;
            for (std::size_t q = 0; q < queue.size(); ++q) {
                const auto [cu, cv] = queue[q];
                component_pixels.back().push_back({cu, cv});
                const int nbr[4][2] = {{cu + 1, cv}, {cu - 1, cv}, {cu, cv + 1}, {cu, cv - 1}};
                for (const auto& nb : nbr) {
                    if (nb[0] < 0 || nb[0] >= w || nb[1] < 0 || nb[1] >= h) continue;
                    const std::size_t np = static_cast<std::size_t>(nb[1]) * w + nb[0];
                    if (component[np] >= 0 || image.labels[np] != label) continue;
                    component[np] = cid;
                    queue.push_back({nb[0], nb[1]});
                }
            }
        }
    }

    auto inside = [&](int u, int v, int cid) {
        return u >= 0 && u < w && v >= 0 && v < h && component[static_cast<std::size_t>(v) * w + u] == cid;
    };
    auto vertex_key = [&](const Point& p) { return static_cast<long long>(p.v) * (w + 1) + p.u; };

    std::vector<Contour> contours;
    for (std::size_t cid = 0; cid < component_label.size(); ++cid) {
        const int c = static_cast<int>(cid);
        auto pixels = component_pixels[cid];
        std::sort(pixels.begin(), pixels.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second < b.second : a.first < b.first;
        });

        std::vector<Edge> edges;
        for (const auto& [u, v] : pixels) {
            if (!inside(u, v - 1, c)) edges.push_back({{u, v}, {u + 1, v}});
            if (!inside(u + 1, v, c)) edges.push_back({{u + 1, v}, {u + 1, v + 1}});
            if (!inside(u, v + 1, c)) edges.push_back({{u + 1, v + 1}, {u, v + 1}});
            if (!inside(u - 1, v, c)) edges.push_back({{u, v + 1}, {u, v}});
        }
        std::unordered_map<long long, std::vector<std::size_t>> outgoing;
        for (std::size_t e = 0; e < edges.size(); ++e) outgoing[vertex_key(edges[e].from)].push_back(e);

        std::vector<bool> used(edges.size(), false);
        for (std::size_t start = 0; start < edges.size(); ++start) {
            if (used[start]) continue;
            std::vector<Point> loop{edges[start].from};
            std::size_t cur = start;
            while (true) {
                used[cur] = true;
                loop.push_back(edges[cur].to);
                if (edges[cur].to == edges[start].from) break;
                const auto& cands = outgoing.at(vertex_key(edges[cur].to));
                const Point in = direction(edges[cur]);
                const Point left{-in.v, in.u};
                std::size_t next = edges.size();
                for (std::size_t e : cands) {
                    if (used[e]) continue;
                    if (next == edges.size() || direction(edges[e]) == left) next = e;
                }
                cur = next;
            }
            Contour contour;
            contour.label = component_label[cid];
            contour.points = simplify(loop);
            contour.hole = signed_area(contour.points) < 0.0;
            contours.push_back(std::move(contour));
        }
    }
    std::stable_sort(contours.begin(), contours.end(),
                     [](const Contour& a, const Contour& b) { return a.label < b.label; });
    return contours;
}

LabelImage slice_labels(std::span<const ParcelEntry> parcellation, const AtlasVolume& atlas, Plane plane, int index) {
    const PlaneGeometry g = plane_geometry(atlas.dims, plane, index);
    std::unordered_map<std::int32_t, std::int32_t> leaf_of;
    for (const auto& p : parcellation)
        for (int sv : p.sv_members) leaf_of[sv] = p.leaf_id;

    LabelImage img;
    img.width = g.width;
    img.height = g.height;
    img.labels.resize(static_cast<std::size_t>(g.width) * g.height, 0);
    for (int v = 0; v < g.height; ++v) {
        for (int u = 0; u < g.width; ++u) {
            const std::int32_t label = atlas.labels[voxel_of(atlas.dims, plane, index, u, v)];
            if (label == 0) continue;
            auto it = leaf_of.find(label);
            img.labels[static_cast<std::size_t>(v) * g.width + u] = it == leaf_of.end() ? 0 : it->second;
        }
    }
    return img;
}

std::vector<float> slice_values(std::span<const float> volume, const Dims3& dims, Plane plane, int index) {
    const PlaneGeometry g = plane_geometry(dims, plane, index);
    if (volume.size() != dims.voxels()) throw Error(ErrorKind::LengthMismatch, "volume size does not match dims");
    std::vector<float> out(static_cast<std::size_t>(g.width) * g.height);
    for (int v = 0; v < g.height; ++v)
        for (int u = 0; u < g.width; ++u)
            out[static_cast<std::size_t>(v) * g.width + u] = volume[voxel_of(dims, plane, index, u, v)];
    return out;
}

SliceOverlay render_slice(std::span<const ParcelEntry> parcellation, const AtlasVolume& atlas, Plane plane, int index,
                          std::optional<int> highlight) {
    SliceOverlay overlay;
    overlay.plane = plane;
    overlay.index = index;
    overlay.highlight = highlight;
    overlay.label_image = slice_labels(parcellation, atlas, plane, index);

    std::unordered_map<int, int> network_of;
    for (const auto& p : parcellation) network_of[p.leaf_id] = p.network_id;
    for (auto& c : trace_contours(overlay.label_image)) {
        SliceContour sc;
        sc.leaf_id = c.label;
        sc.network_id = network_of.at(c.label);
        sc.hole = c.hole;
        sc.highlighted = highlight && *highlight == c.label;
        sc.points = std::move(c.points);
        overlay.contours.push_back(std::move(sc));
    }
    return overlay;
}

} // namespace parcelsteer

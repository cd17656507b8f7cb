#include "parcelsteer/linkage.hpp"

#include <limits>
#include <numeric>
#include <string>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct NearestRow {
    std::size_t j = kNone;
    double d = std::numeric_limits<double>::infinity();
};

} // namespace

std::vector<LinkageStep> complete_linkage(const DistanceMatrix& dm) {
    const std::size_t n = dm.n;
    std::vector<LinkageStep> steps;
    if (n < 2) return steps;
    steps.reserve(n - 1);

    // Slot i holds the active cluster whose smallest member is item i.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = dm.at(i, j);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> cluster_id(n), cluster_size(n, 1);
    std::iota(cluster_id.begin(), cluster_id.end(), std::size_t{0});

    std::vector<NearestRow> nearest(n);
    auto refresh = [&](std::size_t i) {
        NearestRow best;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!active[j]) continue;
            const double d = dist[i * n + j];
            if (d < best.d) best = {j, d};
        }
        nearest[i] = best;
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t a = kNone;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i] || nearest[i].j == kNone) continue;
            if (a == kNone || nearest[i].d < nearest[a].d) a = i;
        }
        const std::size_t b = nearest[a].j;
        const double d_ab = nearest[a].d;

        steps.push_back({cluster_id[a], cluster_id[b], d_ab, cluster_size[a] + cluster_size[b]});
        cluster_id[a] = n + step;
        cluster_size[a] += cluster_size[b];
        active[b] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            const double merged = std::max(dist[a * n + k], dist[b * n + k]);
            dist[a * n + k] = dist[k * n + a] = merged;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (i == a || nearest[i].j == a || nearest[i].j == b) refresh(i);
        }
    }
    return steps;
}

std::vector<int> cut_at_threshold(std::span<const LinkageStep> steps, std::size_t n, double t) {
    if (!(t >= 0.0 && t <= 2.0))
        throw Error(ErrorKind::ThresholdOutOfRange, "threshold must lie in [0, 2]", std::to_string(t));
    if (n > 0 && steps.size() > n - 1)
        throw Error(ErrorKind::LengthMismatch, "more linkage steps than items allow");

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::size_t> representative(n + steps.size());
    std::iota(representative.begin(), representative.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});

    for (std::size_t k = 0; k < steps.size(); ++k) {
        if (steps[k].distance > t) break;  // distances are nondecreasing
        const std::size_t ra = find(representative[steps[k].left]);
        const std::size_t rb = find(representative[steps[k].right]);
        parent[std::max(ra, rb)] = std::min(ra, rb);
        representative[n + k] = std::min(ra, rb);
    }

    std::vector<int> labels(n, -1);
    std::vector<int> root_label(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (root_label[r] < 0) root_label[r] = next++;
        labels[i] = root_label[r];
    }
    return labels;
}

} // namespace parcelsteer

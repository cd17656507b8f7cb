#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "parcelsteer/atlas_meta.hpp"
#include "parcelsteer/signal_metrics.hpp"
#include "parcelsteer/volume_io.hpp"

namespace parcelsteer {

/// The clustering atom: one atlas region's voxels and their mean course.
struct SuperVoxel {
    int sv_id = 0;  // atlas label id
    std::vector<std::size_t> voxel_indices;
    TimeCourse mean_tc;
    int network_id = 0;
    Hemisphere hemisphere = Hemisphere::Left;
    std::string name;
};

/// One super-voxel per atlas label that covers at least one voxel, sorted by
/// label. Throws EmptyAtlas when the grid has no nonzero label.
std::vector<SuperVoxel> extract_supervoxels(const TimeSeriesVolume& scan, const AtlasVolume& atlas,
                                            const AtlasMeta& meta);

/// Immutable super-voxel table shared by every hierarchy built from one
/// dataset. Holds the full pairwise correlation matrix so clustering and
/// homogeneity never revisit the raw courses.
class SupervoxelSet {
public:
    explicit SupervoxelSet(std::vector<SuperVoxel> svs);

    const std::vector<SuperVoxel>& items() const noexcept { return svs_; }
    std::size_t size() const noexcept { return svs_.size(); }
    std::size_t timepoints() const noexcept { return svs_.empty() ? 0 : svs_.front().mean_tc.size(); }
    const SuperVoxel& at(std::size_t index) const { return svs_.at(index); }

    bool contains(int sv_id) const noexcept { return index_.count(sv_id) != 0; }
    std::size_t index_of(int sv_id) const;

    const CorrelationMatrix& correlations() const noexcept { return corr_; }

private:
    std::vector<SuperVoxel> svs_;
    std::unordered_map<int, std::size_t> index_;
    CorrelationMatrix corr_;
};

} // namespace parcelsteer

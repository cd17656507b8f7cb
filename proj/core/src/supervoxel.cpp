#include "parcelsteer/supervoxel.hpp"

#include <algorithm>
#include <string>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

std::vector<SuperVoxel> extract_supervoxels(const TimeSeriesVolume& scan, const AtlasVolume& atlas,
                                            const AtlasMeta& meta) {
    check_compatible(scan, atlas);
    validate_atlas(atlas, meta);

    std::int32_t max_label = 0;
    for (auto v : atlas.labels) max_label = std::max(max_label, v);
    if (max_label == 0) throw Error(ErrorKind::EmptyAtlas, "atlas has no nonzero labels");

    std::vector<int> slot(static_cast<std::size_t>(max_label) + 1, -1);
    std::vector<SuperVoxel> svs;
    for (std::size_t v = 0; v < atlas.labels.size(); ++v) {
        const auto label = static_cast<std::size_t>(atlas.labels[v]);
        if (label == 0) continue;
        if (slot[label] < 0) {
            slot[label] = static_cast<int>(svs.size());
            SuperVoxel sv;
            sv.sv_id = static_cast<int>(label);
            const AtlasEntry* e = meta.find(sv.sv_id);
            sv.network_id = e->network_id;
            sv.hemisphere = e->hemisphere;
            sv.name = e->name;
            svs.push_back(std::move(sv));
        }
        svs[static_cast<std::size_t>(slot[label])].voxel_indices.push_back(v);
    }

    const std::size_t nv = scan.voxels();
    const auto nt = static_cast<std::size_t>(scan.nt);
    std::vector<double> sums(svs.size() * nt, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
        const float* frame = scan.data.data() + nv * t;
        for (std::size_t v = 0; v < nv; ++v) {
            const auto label = static_cast<std::size_t>(atlas.labels[v]);
            if (label == 0) continue;
            sums[static_cast<std::size_t>(slot[label]) * nt + t] += frame[v];
        }
    }
    for (std::size_t s = 0; s < svs.size(); ++s) {
        auto& sv = svs[s];
        const double count = static_cast<double>(sv.voxel_indices.size());
        sv.mean_tc.source_count = static_cast<int>(sv.voxel_indices.size());
        sv.mean_tc.samples.resize(nt);
        for (std::size_t t = 0; t < nt; ++t) sv.mean_tc.samples[t] = sums[s * nt + t] / count;
    }
    std::sort(svs.begin(), svs.end(), [](const SuperVoxel& a, const SuperVoxel& b) { return a.sv_id < b.sv_id; });
    return svs;
}

SupervoxelSet::SupervoxelSet(std::vector<SuperVoxel> svs) : svs_(std::move(svs)) {
    if (svs_.empty()) throw Error(ErrorKind::EmptyAtlas, "no super-voxels");
    std::sort(svs_.begin(), svs_.end(), [](const SuperVoxel& a, const SuperVoxel& b) { return a.sv_id < b.sv_id; });
    for (std::size_t i = 0; i < svs_.size(); ++i) {
        if (!index_.emplace(svs_[i].sv_id, i).second)
            throw Error(ErrorKind::DuplicateLabel, "duplicate super-voxel id", std::to_string(svs_[i].sv_id));
    }
    std::vector<TimeCourse> tcs;
    tcs.reserve(svs_.size());
    for (const auto& sv : svs_) tcs.push_back(sv.mean_tc);
    corr_ = correlation_matrix(tcs);
}

std::size_t SupervoxelSet::index_of(int sv_id) const {
    auto it = index_.find(sv_id);
    if (it == index_.end()) throw Error(ErrorKind::UnknownLabel, "unknown super-voxel id", std::to_string(sv_id));
    return it->second;
}

} // namespace parcelsteer

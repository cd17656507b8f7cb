#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include <json.hpp>

#include "parcelsteer/atlas_meta.hpp"
#include "parcelsteer/volume_io.hpp"

namespace parcelsteer {

/// Planted-cluster dataset description. Every cluster owns one latent course
/// (unit-variance AR(1) noise); its voxels carry baseline + latent + iid
/// Gaussian noise of sd `noise_sd`, so two voxels of one cluster correlate
/// at 1 / (1 + noise_sd^2). Latents of different clusters correlate at
/// `between_r` through a shared global component.
struct SynthSpec {
    Dims3 dims{20, 20, 20};
    int n_networks = 2;
    int clusters_per_network = 4;
    int supervoxels_per_cluster = 4;
    int timepoints = 120;
    double noise_sd = 0.5;
    double between_r = 0.0;
    std::uint64_t seed = 1;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

struct SynthDataset {
    SynthSpec spec;
    TimeSeriesVolume scan;
    AtlasVolume atlas;
    AtlasMeta meta;
    std::map<int, int> cluster_of_label;  // ground truth: atlas label -> planted cluster
    std::vector<std::vector<double>> latents;  // per planted cluster, without baseline
};

/// Clusters alternate hemispheres (even index left, odd right) so each
/// (hemisphere, network) group holds whole clusters. Regions are contiguous
/// slabs inside a one-voxel background border.
SynthDataset generate_synth(const SynthSpec& spec);

nlohmann::json truth_document(const SynthDataset& ds);

struct SynthPaths {
    std::filesystem::path scan, atlas, meta, truth;
};

SynthPaths synth_paths(const std::filesystem::path& dir);
SynthPaths write_synth(const SynthDataset& ds, const std::filesystem::path& dir);

} // namespace parcelsteer

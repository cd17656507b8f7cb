#include "parcelsteer/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

using nlohmann::json;

namespace {

constexpr float kBaseline = 100.0f;
constexpr double kSmoothing = 0.5;  // AR(1) coefficient of latent courses

std::vector<double> ar1_course(std::mt19937_64& rng, int nt) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - kSmoothing * kSmoothing);
    std::vector<double> out(static_cast<std::size_t>(nt));
    double x = normal(rng);
    for (auto& v : out) {
        v = x;
        x = kSmoothing * x + innovation * normal(rng);
    }
    return out;
}

void validate(const SynthSpec& s) {
    if (s.dims.nx < 4 || s.dims.ny < 3 || s.dims.nz < 3)
        throw Error(ErrorKind::InvalidRange, "synthetic volume needs at least 4x3x3 voxels");
    if (s.n_networks <= 0 || s.clusters_per_network <= 0 || s.supervoxels_per_cluster <= 0)
        throw Error(ErrorKind::InvalidRange, "synthetic counts must be positive");
    if (s.timepoints < 2) throw Error(ErrorKind::InvalidRange, "synthetic scan needs at least 2 timepoints");
    if (!(s.noise_sd >= 0.0)) throw Error(ErrorKind::InvalidRange, "noise_sd must be non-negative");
    if (!(s.between_r >= 0.0 && s.between_r < 1.0)) throw Error(ErrorKind::InvalidRange, "between_r must lie in [0, 1)");
}

} // namespace

SynthSpec synth_spec_from_json(const json& j) {
    SynthSpec s;
    try {
        if (j.contains("dims")) {
            const auto d = j.at("dims").get<std::vector<int>>();
            if (d.size() != 3) throw Error(ErrorKind::InvalidRange, "dims must have three entries");
            s.dims = {d[0], d[1], d[2]};
        }
        s.n_networks = j.value("n_networks", s.n_networks);
        s.clusters_per_network = j.value("clusters_per_network", s.clusters_per_network);
        s.supervoxels_per_cluster = j.value("supervoxels_per_cluster", s.supervoxels_per_cluster);
        s.timepoints = j.value("timepoints", s.timepoints);
        s.noise_sd = j.value("noise_sd", s.noise_sd);
        s.between_r = j.value("between_r", s.between_r);
        s.seed = j.value("seed", s.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidRange, "malformed synth spec", e.what());
    }
    validate(s);
    return s;
}

json to_json(const SynthSpec& s) {
    return json{{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
                {"n_networks", s.n_networks},
                {"clusters_per_network", s.clusters_per_network},
                {"supervoxels_per_cluster", s.supervoxels_per_cluster},
                {"timepoints", s.timepoints},
                {"noise_sd", s.noise_sd},
                {"between_r", s.between_r},
                {"seed", s.seed}};
}

SynthDataset generate_synth(const SynthSpec& spec) {
    validate(spec);
    SynthDataset ds;
    ds.spec = spec;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Labels 1..N enumerate (network, cluster, member).
    struct Region {
        int label;
        int cluster;
        Hemisphere hemi;
    };
    std::vector<Region> regions[2];
    std::vector<AtlasEntry> entries;
    int label = 1;
    for (int n = 0; n < spec.n_networks; ++n) {
        for (int c = 0; c < spec.clusters_per_network; ++c) {
            const int cluster = n * spec.clusters_per_network + c;
            const Hemisphere hemi = c % 2 == 0 ? Hemisphere::Left : Hemisphere::Right;
            for (int m = 0; m < spec.supervoxels_per_cluster; ++m, ++label) {
                regions[static_cast<int>(hemi)].push_back({label, cluster, hemi});
                entries.push_back({label,
                                   std::string(to_string(hemi)) + "_Net" + std::to_string(n + 1) + "_C" +
                                       std::to_string(c) + "_S" + std::to_string(m),
                                   n + 1, hemi});
                ds.cluster_of_label[label] = cluster;
            }
        }
    }
    ds.meta = AtlasMeta(entries);

    const Dims3 d = spec.dims;
    ds.atlas.dims = d;
    ds.atlas.labels.assign(d.voxels(), 0);
    const int mid = d.nx / 2;
    for (int h = 0; h < 2; ++h) {
        const auto& regs = regions[h];
        if (regs.empty()) continue;
        const int x0 = h == 0 ? 1 : mid;
        const int x1 = h == 0 ? mid : d.nx - 1;
        std::vector<std::size_t> voxels;
        for (int z = 1; z < d.nz - 1; ++z)
            for (int y = 1; y < d.ny - 1; ++y)
                for (int x = x0; x < x1; ++x) voxels.push_back(d.index(x, y, z));
        if (voxels.size() < regs.size())
            throw Error(ErrorKind::InvalidRange, "volume too small for the requested number of regions",
                        std::to_string(voxels.size()) + " voxels for " + std::to_string(regs.size()) + " regions");
        for (std::size_t i = 0; i < voxels.size(); ++i)
            ds.atlas.labels[voxels[i]] = regs[i * regs.size() / voxels.size()].label;
    }

    const int n_clusters = spec.n_networks * spec.clusters_per_network;
    const auto global = ar1_course(rng, spec.timepoints);
    const double shared = std::sqrt(spec.between_r);
    const double own = std::sqrt(1.0 - spec.between_r);
    auto& latents = ds.latents;
    for (int c = 0; c < n_clusters; ++c) {
        auto lat = ar1_course(rng, spec.timepoints);
        for (std::size_t t = 0; t < lat.size(); ++t) lat[t] = shared * global[t] + own * lat[t];
        latents.push_back(std::move(lat));
    }

    ds.scan.spatial = d;
    ds.scan.nt = spec.timepoints;
    ds.scan.data.resize(d.voxels() * static_cast<std::size_t>(spec.timepoints));
    const std::size_t nv = d.voxels();
    for (std::size_t v = 0; v < nv; ++v) {
        const int l = ds.atlas.labels[v];
        const std::vector<double>* lat = l == 0 ? nullptr : &latents[static_cast<std::size_t>(ds.cluster_of_label.at(l))];
        for (int t = 0; t < spec.timepoints; ++t) {
            double value = kBaseline;
            if (lat) {
                value += (*lat)[static_cast<std::size_t>(t)];
                if (spec.noise_sd > 0.0) value += spec.noise_sd * normal(rng);
            } else {
                value += normal(rng);
            }
            ds.scan.data[v + nv * static_cast<std::size_t>(t)] = static_cast<float>(value);
        }
    }
    ds.scan.geometry.pixdim = {1.f, 2.f, 2.f, 2.f, 0.72f, 1.f, 1.f, 1.f};
    ds.scan.geometry.xyzt_units = 2 | 8;  // mm, seconds
    ds.scan.geometry.descrip = "synthetic planted-cluster scan";
    ds.atlas.geometry = ds.scan.geometry;
    ds.atlas.geometry.descrip = "synthetic atlas";
    return ds;
}

json truth_document(const SynthDataset& ds) {
    std::map<int, std::vector<int>> members;
    for (const auto& [label, cluster] : ds.cluster_of_label) members[cluster].push_back(label);
    json clusters = json::array();
    for (const auto& [cluster, labels] : members) {
        const AtlasEntry* e = ds.meta.find(labels.front());
        clusters.push_back({{"cluster_id", cluster},
                            {"network_id", e->network_id},
                            {"hemisphere", std::string(to_string(e->hemisphere))},
                            {"labels", labels}});
    }
    json label_map = json::object();
    for (const auto& [label, cluster] : ds.cluster_of_label) label_map[std::to_string(label)] = cluster;
    return json{{"spec", to_json(ds.spec)},
                {"design_within_r", 1.0 / (1.0 + ds.spec.noise_sd * ds.spec.noise_sd)},
                {"clusters", clusters},
                {"cluster_of_label", label_map}};
}

SynthPaths synth_paths(const std::filesystem::path& dir) {
    return {dir / "scan.nii", dir / "atlas.nii", dir / "atlas.tsv", dir / "truth.json"};
}

SynthPaths write_synth(const SynthDataset& ds, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "cannot create output directory", dir.string());
    const SynthPaths paths = synth_paths(dir);
    save_timeseries(ds.scan, paths.scan);
    save_label_volume(ds.atlas, paths.atlas);
    save_atlas_meta(ds.meta, paths.meta);
    std::ofstream out(paths.truth, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write truth document", paths.truth.string());
    out << truth_document(ds).dump(2) << '\n';
    return paths;
}

} // namespace parcelsteer

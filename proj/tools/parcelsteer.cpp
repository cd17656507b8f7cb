// parcelsteer: serve the steering API, run a headless init/export, or write
// synthetic planted-cluster datasets.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "parcelsteer/api_server.hpp"
#include "parcelsteer/errors.hpp"
#include "parcelsteer/hierarchy_document.hpp"
#include "parcelsteer/partition.hpp"
#include "parcelsteer/session.hpp"
#include "parcelsteer/synth.hpp"

namespace {

using nlohmann::json;
namespace ps = parcelsteer;

constexpr int kExitLoadFailure = 2;

ps::ApiServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

bool is_load_error(ps::ErrorKind k) {
    switch (k) {
    case ps::ErrorKind::NotFound:
    case ps::ErrorKind::IoFailure:
    case ps::ErrorKind::MalformedHeader:
    case ps::ErrorKind::UnsupportedFormat:
    case ps::ErrorKind::UnsupportedDatatype:
    case ps::ErrorKind::NonFiniteSample:
    case ps::ErrorKind::NegativeLabel:
    case ps::ErrorKind::DimsMismatch:
    case ps::ErrorKind::UnknownLabel:
    case ps::ErrorKind::DuplicateLabel:
    case ps::ErrorKind::MalformedMeta:
    case ps::ErrorKind::EmptyAtlas:
        return true;
    default:
        return false;
    }
}

int report(const ps::Error& e) {
    std::cerr << "error: " << ps::to_string(e.kind()) << ": " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << '\n';
    return is_load_error(e.kind()) ? kExitLoadFailure : 1;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ps::Error(ps::ErrorKind::NotFound, "cannot open", path);
    return json::parse(in);
}

struct DatasetArgs {
    std::string scan, atlas, meta;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& a, bool required) {
    auto* s = cmd->add_option("--scan", a.scan, "4D NIfTI-1 scan (float32 or int16)");
    auto* at = cmd->add_option("--atlas", a.atlas, "3D NIfTI-1 label volume (int16 or int32)");
    auto* m = cmd->add_option("--meta", a.meta, "atlas table: label_id, name, network_id, hemisphere (TSV)");
    if (required) {
        s->required();
        at->required();
        m->required();
    } else {
        s->needs(at)->needs(m);
        at->needs(s);
        m->needs(s);
    }
}

int run_serve(const DatasetArgs& data, const std::string& host, int port, const std::string& data_root) {
    ps::ServerConfig cfg;
    cfg.host = host;
    cfg.port = port;
    cfg.data_root = data_root;
    ps::ApiServer server(cfg);
    if (!data.scan.empty()) {
        const std::string id = server.create_session(data.scan, data.atlas, data.meta);
        std::cerr << "session " << id << ": n_supervoxels=" << server.session(id)->dataset().supervoxels->size()
                  << '\n';
    }
    const int bound = server.bind();
    std::cerr << "listening on http://" << host << ':' << bound << '\n';
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.listen();
    g_server = nullptr;
    return 0;
}

int run_init(const DatasetArgs& data, double threshold, const std::string& out, const std::string& truth_path) {
    const auto ds = ps::Dataset::load(data.scan, data.atlas, data.meta);
    const ps::Hierarchy h = ps::Hierarchy::build(ds->supervoxels, threshold);
    const ps::AtlasVolume labels = ps::export_labels(h, ds->atlas);
    ps::save_label_volume(labels, out + ".nii");
    {
        std::ofstream doc(out + ".json", std::ios::trunc);
        if (!doc) throw ps::Error(ps::ErrorKind::IoFailure, "cannot write", out + ".json");
        doc << ps::to_document(h).dump(2) << '\n';
    }
    std::cout << "n_supervoxels=" << ds->supervoxels->size() << " leaves=" << h.leaf_count() << '\n';

    if (!truth_path.empty()) {
        const json truth = read_json(truth_path);
        const auto& label_map = truth.at("cluster_of_label");
        std::vector<int> found, expected;
        for (const auto& p : h.current_parcellation()) {
            for (int sv : p.sv_members) {
                found.push_back(p.leaf_id);
                expected.push_back(label_map.at(std::to_string(sv)).get<int>());
            }
        }
        std::cout << "ari=" << ps::adjusted_rand_index(found, expected) << '\n';
    }
    return 0;
}

int run_synth(ps::SynthSpec spec, const std::string& out) {
    const ps::SynthDataset ds = ps::generate_synth(spec);
    const ps::SynthPaths paths = ps::write_synth(ds, out);
    std::cout << "wrote " << paths.scan.string() << ", " << paths.atlas.string() << ", " << paths.meta.string()
              << ", " << paths.truth.string() << " (" << ds.meta.size() << " regions)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive fMRI parcellation engine"};
    app.require_subcommand(1);

    DatasetArgs serve_data;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_root;
    auto* serve = app.add_subcommand("serve", "Run the HTTP steering API");
    add_dataset_options(serve, serve_data, false);
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "TCP port (0 picks a free port)")->capture_default_str();
    serve->add_option("--data-root", data_root, "Directory that relative dataset paths resolve against")
        ->envname("PARCELSTEER_DATA_ROOT");

    DatasetArgs init_data;
    double threshold = 0.5;
    std::string init_out;
    std::string truth;
    auto* init = app.add_subcommand("init", "Initialize a hierarchy and export it without serving");
    add_dataset_options(init, init_data, true);
    init->add_option("--threshold", threshold,
                     "Correlation-distance threshold (1 - Pearson r), range 0-2; clusters merge while linkage <= threshold")
        ->required()
        ->check(CLI::Range(0.0, 2.0));
    init->add_option("--out", init_out, "Output prefix; writes <prefix>.nii and <prefix>.json")->required();
    init->add_option("--truth", truth, "Ground-truth document from `synth`; prints the adjusted Rand index");

    ps::SynthSpec spec;
    std::string spec_path;
    std::string synth_out;
    std::vector<int> dims;
    auto* synth = app.add_subcommand("synth", "Write a synthetic scan, atlas, table and ground truth");
    synth->add_option("--spec", spec_path, "JSON synth spec (fields as the flags below)");
    synth->add_option("--dims", dims, "Volume size nx ny nz")->expected(3);
    synth->add_option("--networks", spec.n_networks, "Number of networks");
    synth->add_option("--clusters", spec.clusters_per_network, "Planted clusters per network");
    synth->add_option("--supervoxels", spec.supervoxels_per_cluster, "Atlas regions per planted cluster");
    synth->add_option("--timepoints", spec.timepoints, "Samples per course");
    synth->add_option("--noise-sd", spec.noise_sd, "Voxel noise sd (latent sd is 1)");
    synth->add_option("--between-r", spec.between_r, "Correlation between latents of different clusters");
    synth->add_option("--seed", spec.seed, "RNG seed");
    synth->add_option("--out", synth_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return run_serve(serve_data, host, port, data_root);
        if (*init) return run_init(init_data, threshold, init_out, truth);
        if (*synth) {
            if (!spec_path.empty()) {
                const ps::SynthSpec from_file = ps::synth_spec_from_json(read_json(spec_path));
                // flags given on the command line override the file
                ps::SynthSpec merged = from_file;
                if (synth->count("--networks")) merged.n_networks = spec.n_networks;
                if (synth->count("--clusters")) merged.clusters_per_network = spec.clusters_per_network;
                if (synth->count("--supervoxels")) merged.supervoxels_per_cluster = spec.supervoxels_per_cluster;
                if (synth->count("--timepoints")) merged.timepoints = spec.timepoints;
                if (synth->count("--noise-sd")) merged.noise_sd = spec.noise_sd;
                if (synth->count("--between-r")) merged.between_r = spec.between_r;
                if (synth->count("--seed")) merged.seed = spec.seed;
                spec = merged;
            }
            if (!dims.empty()) spec.dims = {dims[0], dims[1], dims[2]};
            return run_synth(ps::synth_spec_from_json(ps::to_json(spec)), synth_out);
        }
    } catch (const ps::Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

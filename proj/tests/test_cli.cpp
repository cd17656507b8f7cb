#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <json.hpp>
#include <regex>
#include <set>
#include <sys/wait.h>
#include <thread>

#include "parcelsteer/volume_io.hpp"
#include "test_support.hpp"

using testsupport::slurp;
using testsupport::TempDir;

namespace {

const std::string kCli = PARCELSTEER_CLI_PATH;

struct Run {
    int exit_code = -1;
    std::string out, err;
};

Run run(const TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = "'" + kCli + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string synth_into(const TempDir& dir, const std::string& extra = "") {
    const auto data = (dir / "data").string();
    const auto r = run(dir, "synth --out '" + data + "' " + extra);
    REQUIRE(r.exit_code == 0);
    return data;
}

std::string dataset_flags(const std::string& data) {
    return "--scan '" + data + "/scan.nii' --atlas '" + data + "/atlas.nii' --meta '" + data + "/atlas.tsv'";
}

std::set<int> label_ids(const std::filesystem::path& p) {
    const auto vol = parcelsteer::load_label_volume(p);
    std::set<int> ids(vol.labels.begin(), vol.labels.end());
    ids.erase(0);
    return ids;
}

/// Single-letter state from /proc ('Z' for an unreaped zombie), or 0.
char process_state(int pid) {
    const std::string stat = slurp("/proc/" + std::to_string(pid) + "/stat");
    const auto close = stat.rfind(')');
    return close == std::string::npos || close + 2 >= stat.size() ? 0 : stat[close + 2];
}

} // namespace

TEST_CASE("synth writes all four artifacts") {
    TempDir dir("cli");
    const auto data = synth_into(dir, "--dims 16 16 12 --networks 2 --clusters 4 --supervoxels 2 --timepoints 50 --seed 9");
    for (const char* f : {"scan.nii", "atlas.nii", "atlas.tsv", "truth.json"}) CHECK(std::filesystem::exists(std::filesystem::path(data) / f));
    const auto truth = nlohmann::json::parse(slurp(std::filesystem::path(data) / "truth.json"));
    CHECK(truth.at("clusters").size() == 8);
    CHECK(truth.at("cluster_of_label").size() == 16);
    CHECK(parcelsteer::load_timeseries(std::filesystem::path(data) / "scan.nii").nt == 50);
}

TEST_CASE("synth from a spec file, with flags overriding it") {
    TempDir dir("cli");
    testsupport::spit(dir / "spec.json", R"({"dims": [14, 12, 10], "n_networks": 3, "clusters_per_network": 2, "timepoints": 30})");
    const auto r = run(dir, "synth --spec '" + (dir / "spec.json").string() + "' --timepoints 40 --out '" + (dir / "d").string() + "'");
    REQUIRE(r.exit_code == 0);
    const auto scan = parcelsteer::load_timeseries(dir / "d" / "scan.nii");
    CHECK(scan.spatial == parcelsteer::Dims3{14, 12, 10});
    CHECK(scan.nt == 40);
}

TEST_CASE("init exports one label per super-voxel at t = 0 and one per group at t = 2") {
    TempDir dir("cli");
    const auto data = synth_into(dir);
    auto r = run(dir, "init " + dataset_flags(data) + " --threshold 0 --out '" + (dir / "t0").string() + "'");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("n_supervoxels=32 leaves=32") != std::string::npos);
    CHECK(label_ids(dir / "t0.nii").size() == 32);
    const auto doc = nlohmann::json::parse(slurp(dir / "t0.json"));
    CHECK(doc.at("leaf_count") == 32);

    r = run(dir, "init " + dataset_flags(data) + " --threshold 2 --out '" + (dir / "t2").string() + "'");
    REQUIRE(r.exit_code == 0);
    CHECK(label_ids(dir / "t2.nii").size() == 4);  // 2 hemispheres x 2 networks
}

TEST_CASE("init at a separating threshold recovers the planted clusters") {
    TempDir dir("cli");
    const auto data = synth_into(dir);
    const auto r = run(dir, "init " + dataset_flags(data) + " --threshold 0.3 --out '" + (dir / "p").string() + "' --truth '" +
                                data + "/truth.json'");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("leaves=8") != std::string::npos);
    CHECK(r.out.find("ari=1\n") != std::string::npos);
}

TEST_CASE("init is deterministic end to end") {
    TempDir dir("cli");
    const auto data = synth_into(dir);
    run(dir, "init " + dataset_flags(data) + " --threshold 0.4 --out '" + (dir / "a").string() + "'");
    run(dir, "init " + dataset_flags(data) + " --threshold 0.4 --out '" + (dir / "b").string() + "'");
    CHECK(slurp(dir / "a.nii") == slurp(dir / "b.nii"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
}

TEST_CASE("usage and load errors") {
    TempDir dir("cli");
    auto r = run(dir, "init --scan /nonexistent/scan.nii --atlas /nonexistent/a.nii --meta /nonexistent/a.tsv --threshold 0.5 --out x");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("NotFound") != std::string::npos);

    r = run(dir, "serve --scan /nonexistent/scan.nii --atlas /nonexistent/a.nii --meta /nonexistent/a.tsv --port 0");
    CHECK(r.exit_code == 2);

    const auto data = synth_into(dir);
    r = run(dir, "init " + dataset_flags(data) + " --threshold 2.5 --out x");
    CHECK(r.exit_code != 0);
    CHECK(r.exit_code != 2);

    r = run(dir, "init --help");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("range 0-2") != std::string::npos);
}

TEST_CASE("serve loads the dataset, logs its size and answers requests") {
    TempDir dir("cli");
    const auto data = synth_into(dir);
    const auto log = dir / "serve.log";
    const auto pidfile = dir / "serve.pid";
    const std::string cmd = "sh -c 'echo $$ > \"" + pidfile.string() + "\"; exec timeout 60 \"" + kCli + "\" serve " +
                            dataset_flags(data) + " --port 0' 2> '" + log.string() + "' &";
    REQUIRE(std::system(cmd.c_str()) == 0);

    int port = 0;
    const std::regex listening(R"(listening on http://127\.0\.0\.1:(\d+))");
    for (int tries = 0; tries < 300 && port == 0; ++tries) {
        std::smatch m;
        const std::string text = slurp(log);
        if (std::regex_search(text, m, listening)) port = std::stoi(m[1].str());
        else std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    REQUIRE(port > 0);
    CHECK(slurp(log).find("n_supervoxels=32") != std::string::npos);

    httplib::Client client("127.0.0.1", port);
    const auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    const auto tree = client.Post("/session/s1/hierarchy", R"({"threshold": 0.3})", "application/json");
    REQUIRE(tree);
    CHECK(tree->status == 200);

    const int pid = std::stoi(slurp(pidfile));
    ::kill(pid, SIGTERM);
    bool exited = false;
    for (int tries = 0; tries < 100 && !exited; ++tries) {
        exited = ::kill(pid, 0) != 0 || process_state(pid) == 'Z';
        if (!exited) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    CHECK(exited);
}

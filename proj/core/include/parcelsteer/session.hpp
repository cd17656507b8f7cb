#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "parcelsteer/hierarchy.hpp"
#include "parcelsteer/supervoxel.hpp"
#include "parcelsteer/volume_io.hpp"

namespace parcelsteer {

/// Everything loaded for one scan. Immutable once built; the raw 4D series
/// is dropped after super-voxel extraction and only its mean image kept.
struct Dataset {
    AtlasVolume atlas;
    AtlasMeta meta;
    std::shared_ptr<const SupervoxelSet> supervoxels;
    std::vector<float> mean_image;
    Dims3 dims;
    int nt = 0;

    static std::shared_ptr<const Dataset> load(const std::filesystem::path& scan, const std::filesystem::path& atlas,
                                               const std::filesystem::path& meta);
    static std::shared_ptr<const Dataset> from_volumes(const TimeSeriesVolume& scan, AtlasVolume atlas, AtlasMeta meta);
};

/// Failure raised by the session layer itself (as opposed to the engine).
class SessionError : public std::runtime_error {
public:
    SessionError(int status, std::string kind, const std::string& message)
        : std::runtime_error(message), status_(status), kind_(std::move(kind)) {}
    int status() const noexcept { return status_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    int status_;
    std::string kind_;
};

/// One user's steering state. Mutations are serialized; readers take
/// immutable snapshots and never wait on a running mutation.
class Session {
public:
    struct Snapshot {
        std::shared_ptr<const Hierarchy> hierarchy;  // null until initialized
        std::uint64_t revision = 0;
        std::vector<int> locked;
    };

    struct SteerResult {
        HierarchyDelta delta;
        Snapshot snapshot;
    };

    Session(std::string id, std::shared_ptr<const Dataset> dataset);

    const std::string& id() const noexcept { return id_; }
    const Dataset& dataset() const noexcept { return *dataset_; }

    Snapshot snapshot() const;

    /// (Re)initializes the hierarchy. Replacing an existing one requires
    /// `confirm` (SessionError 409 ConfirmRequired otherwise).
    Snapshot initialize(double threshold, bool confirm);
    /// Replaces the hierarchy with a replay of an exported document.
    Snapshot replay(const nlohmann::json& document, bool confirm);

    SteerResult expand(int node_id, double threshold);
    SteerResult merge(int target_id, int source_id);
    SteerResult collapse(int node_id);

    Snapshot lock(int node_id);
    Snapshot unlock(int node_id);

    /// FC over the current leaves of `snap`, computed once per revision.
    std::shared_ptr<const FCMatrix> fc(const Snapshot& snap);

    bool fc_cached(std::uint64_t revision) const;

private:
    SteerResult steer(const std::function<HierarchyDelta(Hierarchy&)>& op);
    void publish(std::shared_ptr<const Hierarchy> h, std::vector<int> locked);

    std::string id_;
    std::shared_ptr<const Dataset> dataset_;

    std::mutex write_mutex_;          // serializes mutations (total order)
    mutable std::mutex state_mutex_;  // guards the published snapshot
    Snapshot current_;

    mutable std::mutex fc_mutex_;
    std::shared_ptr<const FCMatrix> fc_;
    std::uint64_t fc_revision_ = 0;
    bool fc_valid_ = false;
};

} // namespace parcelsteer

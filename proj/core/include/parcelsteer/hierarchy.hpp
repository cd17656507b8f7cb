#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parcelsteer/signal_metrics.hpp"
#include "parcelsteer/supervoxel.hpp"

namespace parcelsteer {

enum class NodeKind : std::uint8_t { Root, Hemisphere, Network, Cluster, Leaf };

std::string_view to_string(NodeKind kind) noexcept;
NodeKind parse_node_kind(std::string_view name);

struct ParcelNode {
    int id = -1;
    NodeKind kind = NodeKind::Leaf;
    int parent = -1;                       // -1 for the root
    std::vector<int> children;             // empty iff Leaf
    std::vector<int> members;              // sorted sv ids; Leaf only
    std::optional<Hemisphere> hemisphere;  // Hemisphere and below
    std::optional<int> network_id;         // Network and below
    double homogeneity = 1.0;
    bool degenerate = false;
    double formation_threshold = 0.0;
    std::size_t member_count = 0;          // size of the derived member set

    bool operator==(const ParcelNode&) const = default;
};

enum class OpKind : std::uint8_t { Expand, Merge, Collapse };

std::string_view to_string(OpKind kind) noexcept;
OpKind parse_op_kind(std::string_view name);

/// One applied steering operation. `seq` is a logical timestamp (1-based
/// position in the log), so identical sessions produce identical logs.
struct OpRecord {
    std::uint64_t seq = 0;
    OpKind kind = OpKind::Merge;
    int node_id = -1;       // expand/collapse node, merge target
    int source_id = -1;     // merge only
    double threshold = 0.0; // expand only
    std::size_t leaf_count = 0;
    bool changed = true;    // false for an expand that did not split

    bool operator==(const OpRecord&) const = default;
};

struct HierarchyDelta {
    std::vector<int> removed;
    std::vector<int> added;
    std::vector<int> updated;
    std::optional<std::string> notice;  // "NoSplit"
    std::size_t leaf_count = 0;
};

struct ParcelEntry {
    int leaf_id = -1;
    std::vector<int> sv_members;
    int network_id = 0;
    Hemisphere hemisphere = Hemisphere::Left;

    bool operator==(const ParcelEntry&) const = default;
};

/// The steerable parcel tree: root -> two hemispheres -> networks -> cluster
/// nodes -> leaves. Leaves partition the super-voxel set at all times. A
/// Hierarchy is a value type; copies are independent snapshots that share
/// the immutable super-voxel table.
class Hierarchy {
public:
    /// Complete-linkage clustering of every (hemisphere, network) group at
    /// threshold t; each cluster becomes a leaf under its network node.
    static Hierarchy build(std::shared_ptr<const SupervoxelSet> svs, double threshold);

    /// Rebuilds from stored parts (see hierarchy_document.hpp). Structure is
    /// validated and homogeneities recomputed.
    static Hierarchy restore(std::shared_ptr<const SupervoxelSet> svs, double init_threshold, int root_id,
                             int next_id, std::map<int, ParcelNode> nodes, std::vector<OpRecord> op_log);

    HierarchyDelta expand(int node_id, double t_new);
    HierarchyDelta merge(int target_id, int source_id);
    HierarchyDelta collapse(int node_id);
    /// Re-applies a logged operation (replay).
    HierarchyDelta apply(const OpRecord& op);

    const ParcelNode& node(int node_id) const;
    const ParcelNode* find(int node_id) const noexcept;
    const std::map<int, ParcelNode>& nodes() const noexcept { return nodes_; }
    int root_id() const noexcept { return root_id_; }
    int next_id() const noexcept { return next_id_; }
    double init_threshold() const noexcept { return init_threshold_; }
    const std::vector<OpRecord>& op_log() const noexcept { return op_log_; }
    std::size_t leaf_count() const noexcept;

    const SupervoxelSet& supervoxels() const noexcept { return *svs_; }
    const std::shared_ptr<const SupervoxelSet>& supervoxels_ptr() const noexcept { return svs_; }

    /// Sorted sv ids under a node (union of leaf descendants).
    std::vector<int> members_of(int node_id) const;
    /// Leaves ordered by (hemisphere, network_id, leaf_id).
    std::vector<ParcelEntry> current_parcellation() const;

    /// Unweighted mean of the node's member super-voxel courses.
    TimeCourse node_course(int node_id) const;
    BandedTimeCourse node_band(int node_id) const;

    /// Throws MalformedDocument describing the first violated invariant.
    void check_invariants() const;
    void check_invariants_structure_only() const;

    bool operator==(const Hierarchy& other) const;

private:
    Hierarchy() = default;

    int add_node(ParcelNode node);
    void erase_subtree(int node_id);
    void collect_members(int node_id, std::vector<int>& out) const;
    void refresh_homogeneity();
    std::vector<std::size_t> refresh_node(int node_id);
    std::vector<std::vector<int>> cluster_members(const std::vector<int>& sv_ids, double t) const;
    HierarchyDelta finish(const std::map<int, ParcelNode>& before, OpRecord op, std::optional<std::string> notice);

    std::shared_ptr<const SupervoxelSet> svs_;
    std::map<int, ParcelNode> nodes_;
    int root_id_ = -1;
    int next_id_ = 0;
    double init_threshold_ = 0.0;
    std::vector<OpRecord> op_log_;
};

/// Functional connectivity over the current leaves, in current_parcellation order.
FCMatrix parcellation_fc(const Hierarchy& h);

} // namespace parcelsteer

#include "parcelsteer/hierarchy.hpp"

#include <algorithm>
#include <iterator>
#include <set>
#include <string>

#include "parcelsteer/errors.hpp"
#include "parcelsteer/linkage.hpp"

namespace parcelsteer {

std::string_view to_string(NodeKind kind) noexcept {
    switch (kind) {
    case NodeKind::Root: return "Root";
    case NodeKind::Hemisphere: return "Hemisphere";
    case NodeKind::Network: return "Network";
    case NodeKind::Cluster: return "Cluster";
    case NodeKind::Leaf: return "Leaf";
    }
    return "Leaf";
}

NodeKind parse_node_kind(std::string_view name) {
    for (NodeKind k : {NodeKind::Root, NodeKind::Hemisphere, NodeKind::Network, NodeKind::Cluster, NodeKind::Leaf})
        if (to_string(k) == name) return k;
    throw Error(ErrorKind::MalformedDocument, "unknown node kind", std::string(name));
}

std::string_view to_string(OpKind kind) noexcept {
    switch (kind) {
    case OpKind::Expand: return "expand";
    case OpKind::Merge: return "merge";
    case OpKind::Collapse: return "collapse";
    }
    return "merge";
}

OpKind parse_op_kind(std::string_view name) {
    for (OpKind k : {OpKind::Expand, OpKind::Merge, OpKind::Collapse})
        if (to_string(k) == name) return k;
    throw Error(ErrorKind::MalformedDocument, "unknown operation kind", std::string(name));
}

namespace {

void require_threshold(double t) {
    if (!(t >= 0.0 && t <= 2.0))
        throw Error(ErrorKind::ThresholdOutOfRange, "threshold must lie in [0, 2]", std::to_string(t));
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::MalformedDocument, "invalid hierarchy", what); }

} // namespace

Hierarchy Hierarchy::build(std::shared_ptr<const SupervoxelSet> svs, double threshold) {
    require_threshold(threshold);
    if (!svs || svs->size() == 0) throw Error(ErrorKind::EmptyAtlas, "no super-voxels to cluster");

    Hierarchy h;
    h.svs_ = std::move(svs);
    h.init_threshold_ = threshold;

    // (hemisphere, network) -> sv ids, ascending
    std::map<std::pair<Hemisphere, int>, std::vector<int>> groups;
    for (const auto& sv : h.svs_->items()) groups[{sv.hemisphere, sv.network_id}].push_back(sv.sv_id);

    ParcelNode root;
    root.kind = NodeKind::Root;
    root.formation_threshold = threshold;
    h.root_id_ = h.add_node(root);

    for (Hemisphere hemi : {Hemisphere::Left, Hemisphere::Right}) {
        ParcelNode hn;
        hn.kind = NodeKind::Hemisphere;
        hn.parent = h.root_id_;
        hn.hemisphere = hemi;
        hn.formation_threshold = threshold;
        const int hid = h.add_node(hn);
        h.nodes_.at(h.root_id_).children.push_back(hid);

        for (const auto& [key, ids] : groups) {
            if (key.first != hemi) continue;
            ParcelNode net;
            net.kind = NodeKind::Network;
            net.parent = hid;
            net.hemisphere = hemi;
            net.network_id = key.second;
            net.formation_threshold = threshold;
            const int nid = h.add_node(net);
            h.nodes_.at(hid).children.push_back(nid);

            for (auto& members : h.cluster_members(ids, threshold)) {
                ParcelNode leaf;
                leaf.kind = NodeKind::Leaf;
                leaf.parent = nid;
                leaf.hemisphere = hemi;
                leaf.network_id = key.second;
                leaf.members = std::move(members);
                leaf.formation_threshold = threshold;
                const int lid = h.add_node(std::move(leaf));
                h.nodes_.at(nid).children.push_back(lid);
            }
        }
    }
    h.refresh_homogeneity();
    return h;
}

Hierarchy Hierarchy::restore(std::shared_ptr<const SupervoxelSet> svs, double init_threshold, int root_id, int next_id,
                             std::map<int, ParcelNode> nodes, std::vector<OpRecord> op_log) {
    require_threshold(init_threshold);
    if (!svs) invalid("missing super-voxel table");
    Hierarchy h;
    h.svs_ = std::move(svs);
    h.init_threshold_ = init_threshold;
    h.root_id_ = root_id;
    h.next_id_ = next_id;
    h.nodes_ = std::move(nodes);
    h.op_log_ = std::move(op_log);
    for (const auto& [id, n] : h.nodes_) {
        if (id != n.id) invalid("node key/id mismatch at " + std::to_string(id));
        if (id >= next_id) invalid("next_id must exceed every node id");
        for (int m : n.members)
            if (!h.svs_->contains(m)) invalid("unknown super-voxel " + std::to_string(m));
        if (n.parent != -1 && !h.nodes_.count(n.parent)) invalid("dangling parent at node " + std::to_string(id));
        for (int c : n.children)
            if (!h.nodes_.count(c)) invalid("dangling child at node " + std::to_string(id));
    }
    if (!h.nodes_.count(root_id)) invalid("root node missing");
    for (std::size_t i = 0; i < h.op_log_.size(); ++i)
        if (h.op_log_[i].seq != i + 1) invalid("op_log sequence numbers must be 1..n");
    h.check_invariants_structure_only();
    h.refresh_homogeneity();
    h.check_invariants();
    return h;
}

int Hierarchy::add_node(ParcelNode node) {
    node.id = next_id_++;
    const int id = node.id;
    nodes_.emplace(id, std::move(node));
    return id;
}

const ParcelNode* Hierarchy::find(int node_id) const noexcept {
    auto it = nodes_.find(node_id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const ParcelNode& Hierarchy::node(int node_id) const {
    const ParcelNode* n = find(node_id);
    if (!n) throw Error(ErrorKind::UnknownNode, "no such node", std::to_string(node_id));
    return *n;
}

std::size_t Hierarchy::leaf_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                  [](const auto& kv) { return kv.second.kind == NodeKind::Leaf; }));
}

void Hierarchy::collect_members(int node_id, std::vector<int>& out) const {
    const ParcelNode& n = nodes_.at(node_id);
    if (n.kind == NodeKind::Leaf) {
        out.insert(out.end(), n.members.begin(), n.members.end());
        return;
    }
    for (int c : n.children) collect_members(c, out);
}

std::vector<int> Hierarchy::members_of(int node_id) const {
    node(node_id);
    std::vector<int> out;
    collect_members(node_id, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ParcelEntry> Hierarchy::current_parcellation() const {
    std::vector<ParcelEntry> out;
    for (const auto& [id, n] : nodes_) {
        if (n.kind != NodeKind::Leaf) continue;
        out.push_back({id, n.members, n.network_id.value_or(0), n.hemisphere.value_or(Hemisphere::Left)});
    }
    std::sort(out.begin(), out.end(), [](const ParcelEntry& a, const ParcelEntry& b) {
        if (a.hemisphere != b.hemisphere) return a.hemisphere < b.hemisphere;
        if (a.network_id != b.network_id) return a.network_id < b.network_id;
        return a.leaf_id < b.leaf_id;
    });
    return out;
}

TimeCourse Hierarchy::node_course(int node_id) const {
    const auto members = members_of(node_id);
    if (members.empty()) throw Error(ErrorKind::TooFewItems, "node has no members", std::to_string(node_id));
    std::vector<const TimeCourse*> tcs;
    tcs.reserve(members.size());
    for (int m : members) tcs.push_back(&svs_->at(svs_->index_of(m)).mean_tc);
    return mean_course(tcs);
}

BandedTimeCourse Hierarchy::node_band(int node_id) const {
    const auto members = members_of(node_id);
    if (members.empty()) throw Error(ErrorKind::TooFewItems, "node has no members", std::to_string(node_id));
    std::vector<const TimeCourse*> tcs;
    tcs.reserve(members.size());
    for (int m : members) tcs.push_back(&svs_->at(svs_->index_of(m)).mean_tc);
    return mean_se(tcs);
}

std::vector<std::size_t> Hierarchy::refresh_node(int node_id) {
    ParcelNode& n = nodes_.at(node_id);
    std::vector<std::size_t> idx;
    if (n.kind == NodeKind::Leaf) {
        idx.reserve(n.members.size());
        for (int m : n.members) idx.push_back(svs_->index_of(m));
    } else {
        for (int c : std::vector<int>(n.children)) {
            auto sub = refresh_node(c);
            idx.insert(idx.end(), sub.begin(), sub.end());
        }
        std::sort(idx.begin(), idx.end());
    }
    ParcelNode& self = nodes_.at(node_id);
    const Homogeneity h = idx.empty() ? Homogeneity{} : homogeneity(svs_->correlations(), idx);
    self.homogeneity = h.value;
    self.degenerate = h.degenerate;
    self.member_count = idx.size();
    return idx;
}

void Hierarchy::refresh_homogeneity() { refresh_node(root_id_); }

std::vector<std::vector<int>> Hierarchy::cluster_members(const std::vector<int>& sv_ids, double t) const {
    if (sv_ids.size() == 1) return {sv_ids};
    std::vector<std::size_t> items;
    items.reserve(sv_ids.size());
    for (int id : sv_ids) items.push_back(svs_->index_of(id));
    const DistanceMatrix dm = distance_matrix(svs_->correlations(), items);
    const auto steps = complete_linkage(dm);
    const auto labels = cut_at_threshold(steps, items.size(), t);
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(sv_ids[i]);
    return out;
}

HierarchyDelta Hierarchy::finish(const std::map<int, ParcelNode>& before, OpRecord op,
                                 std::optional<std::string> notice) {
    HierarchyDelta delta;
    delta.notice = std::move(notice);
    for (const auto& [id, n] : before) {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) delta.removed.push_back(id);
        else if (!(it->second == n)) delta.updated.push_back(id);
    }
    for (const auto& [id, n] : nodes_)
        if (!before.count(id)) delta.added.push_back(id);
    delta.leaf_count = leaf_count();
    op.seq = op_log_.size() + 1;
    op.leaf_count = delta.leaf_count;
    op_log_.push_back(op);
    return delta;
}

HierarchyDelta Hierarchy::expand(int node_id, double t_new) {
    const ParcelNode& leaf = node(node_id);
    if (leaf.kind != NodeKind::Leaf) throw Error(ErrorKind::NotALeaf, "only leaves can be expanded", std::to_string(node_id));
    if (leaf.members.size() < 2)
        throw Error(ErrorKind::SingletonLeaf, "leaf has a single super-voxel", std::to_string(node_id));
    require_threshold(t_new);
    if (!(t_new < leaf.formation_threshold))
        throw Error(ErrorKind::ThresholdNotTighter, "expand threshold must be below the leaf's formation threshold",
                    std::to_string(t_new) + " >= " + std::to_string(leaf.formation_threshold));

    OpRecord op;
    op.kind = OpKind::Expand;
    op.node_id = node_id;
    op.threshold = t_new;

    auto clusters = cluster_members(leaf.members, t_new);
    if (clusters.size() == 1) {
        op.changed = false;
        return finish(nodes_, op, std::string("NoSplit"));
    }

    const auto before = nodes_;
    const ParcelNode proto = leaf;
    {
        ParcelNode& n = nodes_.at(node_id);
        n.kind = NodeKind::Cluster;
        n.members.clear();
    }
    for (auto& members : clusters) {
        ParcelNode child;
        child.kind = NodeKind::Leaf;
        child.parent = node_id;
        child.hemisphere = proto.hemisphere;
        child.network_id = proto.network_id;
        child.members = std::move(members);
        child.formation_threshold = t_new;
        const int cid = add_node(std::move(child));
        nodes_.at(node_id).children.push_back(cid);
    }
    refresh_homogeneity();
    return finish(before, op, std::nullopt);
}

HierarchyDelta Hierarchy::merge(int target_id, int source_id) {
    const ParcelNode& target = node(target_id);
    const ParcelNode& source = node(source_id);
    if (target_id == source_id) throw Error(ErrorKind::SameNode, "cannot merge a node with itself", std::to_string(target_id));
    if (target.kind != NodeKind::Leaf) throw Error(ErrorKind::NotALeaf, "merge target is not a leaf", std::to_string(target_id));
    if (source.kind != NodeKind::Leaf) throw Error(ErrorKind::NotALeaf, "merge source is not a leaf", std::to_string(source_id));

    const auto before = nodes_;
    {
        ParcelNode& t = nodes_.at(target_id);
        const ParcelNode& s = nodes_.at(source_id);
        std::vector<int> merged;
        merged.reserve(t.members.size() + s.members.size());
        std::merge(t.members.begin(), t.members.end(), s.members.begin(), s.members.end(), std::back_inserter(merged));
        t.members = std::move(merged);
        t.formation_threshold = std::min(t.formation_threshold, s.formation_threshold);
    }

    const int parent_id = nodes_.at(source_id).parent;
    {
        auto& siblings = nodes_.at(parent_id).children;
        siblings.erase(std::find(siblings.begin(), siblings.end(), source_id));
    }
    nodes_.erase(source_id);

    ParcelNode& parent = nodes_.at(parent_id);
    if (parent.kind == NodeKind::Cluster && parent.children.size() == 1) {
        const int only_child = parent.children.front();
        const int grandparent = parent.parent;
        auto& gp_children = nodes_.at(grandparent).children;
        *std::find(gp_children.begin(), gp_children.end(), parent_id) = only_child;
        nodes_.at(only_child).parent = grandparent;
        nodes_.erase(parent_id);
    } else if (parent.kind == NodeKind::Network && parent.children.empty()) {
        auto& nets = nodes_.at(parent.parent).children;
        nets.erase(std::find(nets.begin(), nets.end(), parent_id));
        nodes_.erase(parent_id);
    }

    refresh_homogeneity();
    OpRecord op;
    op.kind = OpKind::Merge;
    op.node_id = target_id;
    op.source_id = source_id;
    return finish(before, op, std::nullopt);
}

void Hierarchy::erase_subtree(int node_id) {
    const std::vector<int> children = nodes_.at(node_id).children;
    for (int c : children) erase_subtree(c);
    nodes_.erase(node_id);
}

HierarchyDelta Hierarchy::collapse(int node_id) {
    const ParcelNode& n = node(node_id);
    if (n.kind != NodeKind::Cluster)
        throw Error(ErrorKind::ForbiddenKind, "only cluster nodes can be collapsed",
                    std::string(to_string(n.kind)) + " " + std::to_string(node_id));

    const auto before = nodes_;
    std::vector<int> members = members_of(node_id);
    const std::vector<int> children = n.children;
    for (int c : children) erase_subtree(c);
    ParcelNode& self = nodes_.at(node_id);
    self.children.clear();
    self.kind = NodeKind::Leaf;
    self.members = std::move(members);

    refresh_homogeneity();
    OpRecord op;
    op.kind = OpKind::Collapse;
    op.node_id = node_id;
    return finish(before, op, std::nullopt);
}

HierarchyDelta Hierarchy::apply(const OpRecord& op) {
    switch (op.kind) {
    case OpKind::Expand: return expand(op.node_id, op.threshold);
    case OpKind::Merge: return merge(op.node_id, op.source_id);
    case OpKind::Collapse: return collapse(op.node_id);
    }
    throw Error(ErrorKind::MalformedDocument, "unknown operation");
}

void Hierarchy::check_invariants_structure_only() const {
    const ParcelNode* root = find(root_id_);
    if (!root || root->kind != NodeKind::Root || root->parent != -1) invalid("root must be a parentless Root node");
    if (root->children.size() != 2) invalid("root must have exactly two hemisphere children");
    for (std::size_t i = 0; i < 2; ++i) {
        const ParcelNode* hemi = find(root->children[i]);
        if (!hemi || hemi->kind != NodeKind::Hemisphere || hemi->hemisphere != static_cast<Hemisphere>(i))
            invalid("root children must be the Left then Right hemisphere nodes");
    }

    std::size_t reached = 0;
    std::set<int> seen_svs;
    std::vector<int> stack{root_id_};
    std::set<int> visited;
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (!visited.insert(id).second) invalid("cycle or shared child at node " + std::to_string(id));
        ++reached;
        const ParcelNode& n = nodes_.at(id);
        const std::string where = " (node " + std::to_string(id) + ")";
        if (n.kind == NodeKind::Leaf) {
            if (!n.children.empty()) invalid("leaf with children" + where);
            if (n.members.empty()) invalid("empty leaf" + where);
            if (!std::is_sorted(n.members.begin(), n.members.end())) invalid("unsorted leaf members" + where);
            for (int m : n.members)
                if (!seen_svs.insert(m).second) invalid("super-voxel in two leaves: " + std::to_string(m));
        } else if (!n.members.empty()) {
            invalid("interior node stores members" + where);
        }
        if (n.kind == NodeKind::Cluster && n.children.size() < 2) invalid("cluster with fewer than two children" + where);
        if (n.kind != NodeKind::Root && !n.hemisphere) invalid("missing hemisphere" + where);
        if ((n.kind == NodeKind::Network || n.kind == NodeKind::Cluster || n.kind == NodeKind::Leaf) && !n.network_id)
            invalid("missing network id" + where);
        if (!(n.formation_threshold >= 0.0 && n.formation_threshold <= 2.0)) invalid("threshold out of range" + where);
        for (int c : n.children) {
            const ParcelNode* child = find(c);
            if (!child || child->parent != id) invalid("child/parent link mismatch" + where);
            const bool ok = (n.kind == NodeKind::Root && child->kind == NodeKind::Hemisphere) ||
                            (n.kind == NodeKind::Hemisphere && child->kind == NodeKind::Network) ||
                            ((n.kind == NodeKind::Network || n.kind == NodeKind::Cluster) &&
                             (child->kind == NodeKind::Cluster || child->kind == NodeKind::Leaf));
            if (!ok) invalid("illegal child kind" + where);
            if (n.kind != NodeKind::Root && child->hemisphere != n.hemisphere) invalid("hemisphere differs from parent" + where);
            if ((n.kind == NodeKind::Network || n.kind == NodeKind::Cluster) && child->network_id != n.network_id)
                invalid("network differs from parent" + where);
            stack.push_back(c);
        }
    }
    if (reached != nodes_.size()) invalid("unreachable nodes present");
    if (seen_svs.size() != svs_->size()) invalid("leaves do not cover every super-voxel");
}

void Hierarchy::check_invariants() const {
    check_invariants_structure_only();
    Hierarchy copy = *this;
    copy.refresh_homogeneity();
    for (const auto& [id, n] : nodes_) {
        const ParcelNode& fresh = copy.nodes_.at(id);
        if (fresh.homogeneity != n.homogeneity || fresh.degenerate != n.degenerate || fresh.member_count != n.member_count)
            invalid("stale homogeneity cache at node " + std::to_string(id));
    }
}

bool Hierarchy::operator==(const Hierarchy& other) const {
    return root_id_ == other.root_id_ && next_id_ == other.next_id_ && init_threshold_ == other.init_threshold_ &&
           nodes_ == other.nodes_ && op_log_ == other.op_log_;
}

FCMatrix parcellation_fc(const Hierarchy& h) {
    const auto parcels = h.current_parcellation();
    std::vector<int> ids;
    std::vector<TimeCourse> tcs;
    ids.reserve(parcels.size());
    tcs.reserve(parcels.size());
    for (const auto& p : parcels) {
        ids.push_back(p.leaf_id);
        tcs.push_back(h.node_course(p.leaf_id));
    }
    if (ids.size() < 2) {
        // A single parcel still gets a well-formed 1x1 matrix.
        FCMatrix fc;
        fc.parcel_ids = ids;
        fc.corr.n = ids.size();
        fc.corr.r.assign(ids.size(), 1.0);
        fc.corr.degenerate.assign(ids.size(), 0);
        return fc;
    }
    return fc_matrix(ids, tcs);
}

} // namespace parcelsteer

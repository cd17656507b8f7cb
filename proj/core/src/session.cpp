#include "parcelsteer/session.hpp"

#include <algorithm>

#include "parcelsteer/hierarchy_document.hpp"

namespace parcelsteer {

std::shared_ptr<const Dataset> Dataset::load(const std::filesystem::path& scan, const std::filesystem::path& atlas,
                                             const std::filesystem::path& meta) {
    auto [atlas_vol, atlas_meta] = load_atlas(atlas, meta);
    const TimeSeriesVolume ts = load_timeseries(scan);
    return from_volumes(ts, std::move(atlas_vol), std::move(atlas_meta));
}

std::shared_ptr<const Dataset> Dataset::from_volumes(const TimeSeriesVolume& scan, AtlasVolume atlas, AtlasMeta meta) {
    auto ds = std::make_shared<Dataset>();
    ds->supervoxels = std::make_shared<const SupervoxelSet>(extract_supervoxels(scan, atlas, meta));
    ds->mean_image = temporal_mean(scan);
    ds->dims = scan.spatial;
    ds->nt = scan.nt;
    ds->atlas = std::move(atlas);
    ds->meta = std::move(meta);
    return ds;
}

Session::Session(std::string id, std::shared_ptr<const Dataset> dataset)
    : id_(std::move(id)), dataset_(std::move(dataset)) {}

Session::Snapshot Session::snapshot() const {
    std::lock_guard lock(state_mutex_);
    return current_;
}

void Session::publish(std::shared_ptr<const Hierarchy> h, std::vector<int> locked) {
    std::lock_guard lock(state_mutex_);
    current_.hierarchy = std::move(h);
    current_.locked = std::move(locked);
    ++current_.revision;
}

Session::Snapshot Session::initialize(double threshold, bool confirm) {
    std::lock_guard guard(write_mutex_);
    if (snapshot().hierarchy && !confirm)
        throw SessionError(409, "ConfirmRequired", "a hierarchy already exists; pass confirm=true to discard its edits");
    auto h = std::make_shared<const Hierarchy>(Hierarchy::build(dataset_->supervoxels, threshold));
    publish(std::move(h), {});
    return snapshot();
}

Session::Snapshot Session::replay(const nlohmann::json& document, bool confirm) {
    std::lock_guard guard(write_mutex_);
    if (snapshot().hierarchy && !confirm)
        throw SessionError(409, "ConfirmRequired", "a hierarchy already exists; pass confirm=true to discard its edits");
    auto h = std::make_shared<const Hierarchy>(parcelsteer::replay(dataset_->supervoxels, document));
    publish(std::move(h), {});
    return snapshot();
}

Session::SteerResult Session::steer(const std::function<HierarchyDelta(Hierarchy&)>& op) {
    std::lock_guard guard(write_mutex_);
    const Snapshot before = snapshot();
    if (!before.hierarchy) throw SessionError(409, "NoHierarchy", "initialize a hierarchy first");
    auto next = std::make_shared<Hierarchy>(*before.hierarchy);
    HierarchyDelta delta = op(*next);
    std::vector<int> locked;
    for (int id : before.locked) {
        const ParcelNode* n = next->find(id);
        if (n && n->kind == NodeKind::Leaf) locked.push_back(id);
    }
    publish(std::move(next), std::move(locked));
    return {std::move(delta), snapshot()};
}

Session::SteerResult Session::expand(int node_id, double threshold) {
    return steer([&](Hierarchy& h) { return h.expand(node_id, threshold); });
}

Session::SteerResult Session::merge(int target_id, int source_id) {
    return steer([&](Hierarchy& h) { return h.merge(target_id, source_id); });
}

Session::SteerResult Session::collapse(int node_id) {
    return steer([&](Hierarchy& h) { return h.collapse(node_id); });
}

Session::Snapshot Session::lock(int node_id) {
    std::lock_guard guard(write_mutex_);
    Snapshot s = snapshot();
    if (!s.hierarchy) throw SessionError(409, "NoHierarchy", "initialize a hierarchy first");
    const ParcelNode* n = s.hierarchy->find(node_id);
    if (!n) throw SessionError(404, "UnknownNode", "no such node");
    if (n->kind != NodeKind::Leaf) throw SessionError(409, "NotALeaf", "only leaves can be locked");
    if (std::find(s.locked.begin(), s.locked.end(), node_id) != s.locked.end()) return s;
    if (s.locked.size() >= 2) throw SessionError(409, "LockLimit", "at most two nodes can be locked");
    std::lock_guard lock(state_mutex_);
    current_.locked.push_back(node_id);
    return current_;
}

Session::Snapshot Session::unlock(int node_id) {
    std::lock_guard guard(write_mutex_);
    std::lock_guard lock(state_mutex_);
    std::erase(current_.locked, node_id);
    return current_;
}

std::shared_ptr<const FCMatrix> Session::fc(const Snapshot& snap) {
    if (!snap.hierarchy) throw SessionError(409, "NoHierarchy", "initialize a hierarchy first");
    {
        std::lock_guard lock(fc_mutex_);
        if (fc_valid_ && fc_revision_ == snap.revision) return fc_;
    }
    auto fresh = std::make_shared<const FCMatrix>(parcellation_fc(*snap.hierarchy));
    std::lock_guard lock(fc_mutex_);
    if (!fc_valid_ || fc_revision_ < snap.revision) {
        fc_ = fresh;
        fc_revision_ = snap.revision;
        fc_valid_ = true;
    }
    return fresh;
}

bool Session::fc_cached(std::uint64_t revision) const {
    std::lock_guard lock(fc_mutex_);
    return fc_valid_ && fc_revision_ == revision;
}

} // namespace parcelsteer

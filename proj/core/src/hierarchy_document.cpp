#include "parcelsteer/hierarchy_document.hpp"

#include <string>
#include <unordered_map>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedDocument, std::string("bad or missing field '") + key + "'", e.what());
    }
}

const json& array_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw Error(ErrorKind::MalformedDocument, std::string("bad or missing array '") + key + "'");
    return j.at(key);
}

} // namespace

json node_to_json(const ParcelNode& n) {
    json j;
    j["id"] = n.id;
    j["kind"] = std::string(to_string(n.kind));
    j["parent"] = n.parent < 0 ? json(nullptr) : json(n.parent);
    j["children"] = n.children;
    j["members"] = n.members;
    j["hemisphere"] = n.hemisphere ? json(std::string(to_string(*n.hemisphere))) : json(nullptr);
    j["network_id"] = n.network_id ? json(*n.network_id) : json(nullptr);
    j["homogeneity"] = n.homogeneity;
    j["degenerate"] = n.degenerate;
    j["formation_threshold"] = n.formation_threshold;
    j["member_count"] = n.member_count;
    return j;
}

ParcelNode node_from_json(const json& j) {
    ParcelNode n;
    n.id = field<int>(j, "id");
    n.kind = parse_node_kind(field<std::string>(j, "kind"));
    n.parent = j.contains("parent") && !j["parent"].is_null() ? field<int>(j, "parent") : -1;
    n.children = field<std::vector<int>>(j, "children");
    n.members = field<std::vector<int>>(j, "members");
    if (j.contains("hemisphere") && !j["hemisphere"].is_null()) {
        try {
            n.hemisphere = parse_hemisphere(field<std::string>(j, "hemisphere"));
        } catch (const Error& e) {
            throw Error(ErrorKind::MalformedDocument, "bad hemisphere", e.detail());
        }
    }
    if (j.contains("network_id") && !j["network_id"].is_null()) n.network_id = field<int>(j, "network_id");
    n.homogeneity = j.contains("homogeneity") ? field<double>(j, "homogeneity") : 1.0;
    n.degenerate = j.contains("degenerate") ? field<bool>(j, "degenerate") : false;
    n.formation_threshold = field<double>(j, "formation_threshold");
    n.member_count = j.contains("member_count") ? field<std::size_t>(j, "member_count") : 0;
    return n;
}

json op_to_json(const OpRecord& op) {
    json j;
    j["seq"] = op.seq;
    j["kind"] = std::string(to_string(op.kind));
    j["node_id"] = op.node_id;
    if (op.kind == OpKind::Merge) j["source_id"] = op.source_id;
    if (op.kind == OpKind::Expand) j["threshold"] = op.threshold;
    j["leaf_count"] = op.leaf_count;
    j["changed"] = op.changed;
    return j;
}

OpRecord op_from_json(const json& j) {
    OpRecord op;
    op.seq = field<std::uint64_t>(j, "seq");
    op.kind = parse_op_kind(field<std::string>(j, "kind"));
    op.node_id = field<int>(j, "node_id");
    if (op.kind == OpKind::Merge) op.source_id = field<int>(j, "source_id");
    if (op.kind == OpKind::Expand) op.threshold = field<double>(j, "threshold");
    op.leaf_count = field<std::size_t>(j, "leaf_count");
    op.changed = field<bool>(j, "changed");
    return op;
}

json to_document(const Hierarchy& h) {
    json doc;
    doc["schema_version"] = kHierarchySchemaVersion;
    doc["init_threshold"] = h.init_threshold();
    doc["root_id"] = h.root_id();
    doc["next_id"] = h.next_id();
    doc["leaf_count"] = h.leaf_count();
    doc["n_supervoxels"] = h.supervoxels().size();
    json nodes = json::array();
    for (const auto& [id, n] : h.nodes()) nodes.push_back(node_to_json(n));
    doc["nodes"] = std::move(nodes);
    json log = json::array();
    for (const auto& op : h.op_log()) log.push_back(op_to_json(op));
    doc["op_log"] = std::move(log);
    return doc;
}

namespace {

void check_schema(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::MalformedDocument, "hierarchy document must be an object");
    const int version = field<int>(doc, "schema_version");
    if (version != kHierarchySchemaVersion)
        throw Error(ErrorKind::MalformedDocument, "unsupported schema_version", std::to_string(version));
}

std::vector<OpRecord> read_log(const json& doc) {
    std::vector<OpRecord> log;
    if (doc.contains("op_log"))
        for (const auto& e : array_field(doc, "op_log")) log.push_back(op_from_json(e));
    return log;
}

} // namespace

Hierarchy from_document(std::shared_ptr<const SupervoxelSet> svs, const json& doc) {
    check_schema(doc);
    std::map<int, ParcelNode> nodes;
    for (const auto& jn : array_field(doc, "nodes")) {
        ParcelNode n = node_from_json(jn);
        const int id = n.id;
        if (!nodes.emplace(id, std::move(n)).second)
            throw Error(ErrorKind::MalformedDocument, "duplicate node id", std::to_string(id));
    }
    return Hierarchy::restore(std::move(svs), field<double>(doc, "init_threshold"), field<int>(doc, "root_id"),
                              field<int>(doc, "next_id"), std::move(nodes), read_log(doc));
}

Hierarchy replay(std::shared_ptr<const SupervoxelSet> svs, const json& doc) {
    check_schema(doc);
    Hierarchy h = Hierarchy::build(std::move(svs), field<double>(doc, "init_threshold"));
    for (const auto& op : read_log(doc)) h.apply(op);
    return h;
}

AtlasVolume export_labels(const Hierarchy& h, const AtlasVolume& atlas) {
    std::unordered_map<std::int32_t, std::int32_t> leaf_of;
    for (const auto& p : h.current_parcellation())
        for (int sv : p.sv_members) leaf_of[sv] = p.leaf_id;
    AtlasVolume out;
    out.dims = atlas.dims;
    out.geometry = atlas.geometry;
    out.labels.resize(atlas.labels.size());
    for (std::size_t v = 0; v < atlas.labels.size(); ++v) {
        const std::int32_t label = atlas.labels[v];
        if (label == 0) {
            out.labels[v] = 0;
            continue;
        }
        auto it = leaf_of.find(label);
        if (it == leaf_of.end())
            throw Error(ErrorKind::UnknownLabel, "atlas label not covered by the hierarchy", std::to_string(label));
        out.labels[v] = it->second;
    }
    return out;
}

} // namespace parcelsteer

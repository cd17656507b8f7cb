#pragma once

#include <memory>

#include <json.hpp>

#include "parcelsteer/hierarchy.hpp"
#include "parcelsteer/volume_io.hpp"

namespace parcelsteer {

inline constexpr int kHierarchySchemaVersion = 1;

nlohmann::json node_to_json(const ParcelNode& node);
ParcelNode node_from_json(const nlohmann::json& j);
nlohmann::json op_to_json(const OpRecord& op);
OpRecord op_from_json(const nlohmann::json& j);

/// Structured tree document: schema_version, init_threshold, root_id,
/// next_id, nodes (sorted by id), op_log.
nlohmann::json to_document(const Hierarchy& h);

/// Rebuilds exactly the hierarchy a document describes.
Hierarchy from_document(std::shared_ptr<const SupervoxelSet> svs, const nlohmann::json& doc);

/// Re-initializes at the document's init_threshold and re-applies its op_log.
Hierarchy replay(std::shared_ptr<const SupervoxelSet> svs, const nlohmann::json& doc);

/// Label volume carrying each voxel's current leaf id (0 stays background).
AtlasVolume export_labels(const Hierarchy& h, const AtlasVolume& atlas);

} // namespace parcelsteer

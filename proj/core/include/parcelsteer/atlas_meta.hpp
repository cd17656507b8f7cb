#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace parcelsteer {

enum class Hemisphere : std::uint8_t { Left = 0, Right = 1 };

std::string_view to_string(Hemisphere h) noexcept;        // "L" / "R"
Hemisphere parse_hemisphere(std::string_view token);      // throws MalformedMeta

struct AtlasEntry {
    int label_id = 0;
    std::string name;
    int network_id = 0;
    Hemisphere hemisphere = Hemisphere::Left;

    bool operator==(const AtlasEntry&) const = default;
};

/// Per-label lookup table that accompanies a label volume. Label ids are
/// unique; construction rejects duplicates.
class AtlasMeta {
public:
    AtlasMeta() = default;
    explicit AtlasMeta(std::vector<AtlasEntry> entries);

    const std::vector<AtlasEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const AtlasEntry* find(int label_id) const noexcept;

private:
    std::vector<AtlasEntry> entries_;
    std::unordered_map<int, std::size_t> index_;
};

// Tab-separated text, header row "label_id\tname\tnetwork_id\themisphere"
// (columns located by name), hemisphere spelled L or R.
AtlasMeta parse_atlas_meta(std::string_view text);
std::string format_atlas_meta(const AtlasMeta& meta);

AtlasMeta load_atlas_meta(const std::filesystem::path& path);
void save_atlas_meta(const AtlasMeta& meta, const std::filesystem::path& path);

} // namespace parcelsteer

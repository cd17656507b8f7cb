#include "parcelsteer/atlas_meta.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

std::string_view to_string(Hemisphere h) noexcept {
    return h == Hemisphere::Left ? "L" : "R";
}

Hemisphere parse_hemisphere(std::string_view token) {
    if (token == "L") return Hemisphere::Left;
    if (token == "R") return Hemisphere::Right;
    throw Error(ErrorKind::MalformedMeta, "hemisphere must be L or R", std::string(token));
}

AtlasMeta::AtlasMeta(std::vector<AtlasEntry> entries) : entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (e.label_id <= 0)
            throw Error(ErrorKind::MalformedMeta, "label_id must be positive", std::to_string(e.label_id));
        if (!index_.emplace(e.label_id, i).second)
            throw Error(ErrorKind::DuplicateLabel, "duplicate label_id in atlas table", std::to_string(e.label_id));
    }
}

const AtlasEntry* AtlasMeta::find(int label_id) const noexcept {
    auto it = index_.find(label_id);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

int parse_int(std::string_view s, std::size_t line_no, const char* column) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(ErrorKind::MalformedMeta, std::string("bad integer in column ") + column,
                    "line " + std::to_string(line_no) + ": '" + std::string(s) + "'");
    return value;
}

} // namespace

AtlasMeta parse_atlas_meta(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
        text.remove_prefix(3);

    std::vector<AtlasEntry> entries;
    int col_label = -1, col_name = -1, col_network = -1, col_hemi = -1;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        auto cells = split_tabs(line);
        if (!have_header) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const int c = static_cast<int>(i);
                if (cells[i] == "label_id") col_label = c;
                else if (cells[i] == "name") col_name = c;
                else if (cells[i] == "network_id") col_network = c;
                else if (cells[i] == "hemisphere") col_hemi = c;
            }
            if (col_label < 0 || col_name < 0 || col_network < 0 || col_hemi < 0)
                throw Error(ErrorKind::MalformedMeta,
                            "atlas table header must name label_id, name, network_id, hemisphere",
                            std::string(line));
            have_header = true;
            continue;
        }
        const auto needed = static_cast<std::size_t>(std::max({col_label, col_name, col_network, col_hemi}));
        if (cells.size() <= needed)
            throw Error(ErrorKind::MalformedMeta, "too few columns", "line " + std::to_string(line_no));
        AtlasEntry e;
        e.label_id = parse_int(cells[col_label], line_no, "label_id");
        e.name = std::string(cells[col_name]);
        e.network_id = parse_int(cells[col_network], line_no, "network_id");
        e.hemisphere = parse_hemisphere(cells[col_hemi]);
        entries.push_back(std::move(e));
    }
    if (!have_header) throw Error(ErrorKind::MalformedMeta, "atlas table is empty (header row required)");
    return AtlasMeta(std::move(entries));
}

std::string format_atlas_meta(const AtlasMeta& meta) {
    std::ostringstream os;
    os << "label_id\tname\tnetwork_id\themisphere\n";
    for (const auto& e : meta.entries())
        os << e.label_id << '\t' << e.name << '\t' << e.network_id << '\t' << to_string(e.hemisphere) << '\n';
    return os.str();
}

AtlasMeta load_atlas_meta(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::NotFound, "cannot open atlas table", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_atlas_meta(ss.str());
}

void save_atlas_meta(const AtlasMeta& meta, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write atlas table", path.string());
    out << format_atlas_meta(meta);
    if (!out) throw Error(ErrorKind::IoFailure, "write failed", path.string());
}

} // namespace parcelsteer

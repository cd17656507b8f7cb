#include "parcelsteer/volume_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "byte_order.hpp"
#include "parcelsteer/errors.hpp"

namespace parcelsteer {

using detail::read_le;
using detail::write_le;

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

// NIfTI-1 header field offsets.
constexpr std::size_t kOffDimInfo = 39;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffToffset = 136;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffQuatern = 256;
constexpr std::size_t kOffQoffset = 268;
constexpr std::size_t kOffSrow = 280;
constexpr std::size_t kOffMagic = 344;

struct RawHeader {
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    float vox_offset = 0.f;
    float scl_slope = 0.f;
    float scl_inter = 0.f;
    NiftiGeometry geometry;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::NotFound, "cannot open file", path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::IoFailure, "read failed", path.string());
    return ss.str();
}

void write_file(const std::string& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot open file for writing", path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoFailure, "write failed", path.string());
}

RawHeader parse_header(std::string_view bytes) {
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f && static_cast<unsigned char>(bytes[1]) == 0x8b)
        throw Error(ErrorKind::UnsupportedFormat, "gzip-compressed NIfTI is not supported; decompress first");
    if (bytes.size() < 4) throw Error(ErrorKind::MalformedHeader, "file too short for a NIfTI-1 header");

    const auto sizeof_hdr = read_le<std::uint32_t>(bytes, 0);
    if (sizeof_hdr == 540 || detail::byteswap32(sizeof_hdr) == 540)
        throw Error(ErrorKind::UnsupportedFormat, "NIfTI-2 is not supported");
    if (detail::byteswap32(sizeof_hdr) == kHeaderSize)
        throw Error(ErrorKind::UnsupportedFormat, "big-endian NIfTI is not supported");
    if (sizeof_hdr != kHeaderSize)
        throw Error(ErrorKind::MalformedHeader, "sizeof_hdr is not 348", std::to_string(sizeof_hdr));
    if (bytes.size() < kHeaderSize) throw Error(ErrorKind::MalformedHeader, "truncated header");

    const std::string_view magic = bytes.substr(kOffMagic, 4);
    if (magic == std::string_view("ni1\0", 4))
        throw Error(ErrorKind::UnsupportedFormat, "two-file (.hdr/.img) NIfTI is not supported");
    if (magic != std::string_view("n+1\0", 4)) throw Error(ErrorKind::MalformedHeader, "bad magic");

    RawHeader h;
    for (std::size_t i = 0; i < 8; ++i) h.dim[i] = read_le<std::int16_t>(bytes, kOffDim + 2 * i);
    h.datatype = read_le<std::int16_t>(bytes, kOffDatatype);
    h.bitpix = read_le<std::int16_t>(bytes, kOffBitpix);
    h.vox_offset = read_le<float>(bytes, kOffVoxOffset);
    h.scl_slope = read_le<float>(bytes, kOffSclSlope);
    h.scl_inter = read_le<float>(bytes, kOffSclInter);

    auto& g = h.geometry;
    g.dim_info = static_cast<std::uint8_t>(bytes[kOffDimInfo]);
    for (std::size_t i = 0; i < 8; ++i) g.pixdim[i] = read_le<float>(bytes, kOffPixdim + 4 * i);
    g.xyzt_units = static_cast<std::uint8_t>(bytes[kOffXyztUnits]);
    g.toffset = read_le<float>(bytes, kOffToffset);
    {
        std::string_view d = bytes.substr(kOffDescrip, 80);
        g.descrip = std::string(d.substr(0, d.find('\0')));
    }
    g.qform_code = read_le<std::int16_t>(bytes, kOffQformCode);
    g.sform_code = read_le<std::int16_t>(bytes, kOffSformCode);
    for (std::size_t i = 0; i < 3; ++i) {
        g.quatern[i] = read_le<float>(bytes, kOffQuatern + 4 * i);
        g.qoffset[i] = read_le<float>(bytes, kOffQoffset + 4 * i);
        for (std::size_t j = 0; j < 4; ++j) g.srow[i][j] = read_le<float>(bytes, kOffSrow + 16 * i + 4 * j);
    }

    if (!(h.vox_offset >= static_cast<float>(kDataOffset)) || h.vox_offset != std::floor(h.vox_offset))
        throw Error(ErrorKind::MalformedHeader, "vox_offset must be an integer >= 352", std::to_string(h.vox_offset));
    return h;
}

std::size_t datatype_size(std::int16_t datatype) {
    switch (datatype) {
    case 4: return 2;
    case 8: return 4;
    case 16: return 4;
    default: return 0;
    }
}

// Checks positivity of dims 1..n and that the payload is present.
std::size_t checked_payload(const RawHeader& h, int ndim, std::string_view bytes) {
    std::size_t count = 1;
    for (int i = 1; i <= ndim; ++i) {
        if (h.dim[static_cast<std::size_t>(i)] <= 0)
            throw Error(ErrorKind::MalformedHeader, "non-positive dimension", "dim[" + std::to_string(i) + "]");
        count *= static_cast<std::size_t>(h.dim[static_cast<std::size_t>(i)]);
    }
    const std::size_t elem = datatype_size(h.datatype);
    if (h.bitpix != static_cast<std::int16_t>(8 * elem))
        throw Error(ErrorKind::MalformedHeader, "bitpix does not match datatype", std::to_string(h.bitpix));
    const auto offset = static_cast<std::size_t>(h.vox_offset);
    if (bytes.size() < offset + count * elem)
        throw Error(ErrorKind::MalformedHeader, "file shorter than header-declared data size",
                    std::to_string(bytes.size()) + " < " + std::to_string(offset + count * elem));
    return count;
}

std::string make_header(const std::array<std::int16_t, 8>& dim, NiftiDatatype datatype, float slope, float inter,
                        const NiftiGeometry& g) {
    std::string out(kDataOffset, '\0');
    write_le<std::int32_t>(out, 0, static_cast<std::int32_t>(kHeaderSize));
    out[38] = 'r';
    out[kOffDimInfo] = static_cast<char>(g.dim_info);
    for (std::size_t i = 0; i < 8; ++i) write_le<std::int16_t>(out, kOffDim + 2 * i, dim[i]);
    write_le<std::int16_t>(out, kOffDatatype, static_cast<std::int16_t>(datatype));
    write_le<std::int16_t>(out, kOffBitpix, static_cast<std::int16_t>(8 * datatype_size(static_cast<std::int16_t>(datatype))));
    for (std::size_t i = 0; i < 8; ++i) write_le<float>(out, kOffPixdim + 4 * i, g.pixdim[i]);
    write_le<float>(out, kOffVoxOffset, static_cast<float>(kDataOffset));
    write_le<float>(out, kOffSclSlope, slope);
    write_le<float>(out, kOffSclInter, inter);
    out[kOffXyztUnits] = static_cast<char>(g.xyzt_units);
    write_le<float>(out, kOffToffset, g.toffset);
    out.replace(kOffDescrip, std::min<std::size_t>(g.descrip.size(), 79), g.descrip, 0, 79);
    write_le<std::int16_t>(out, kOffQformCode, g.qform_code);
    write_le<std::int16_t>(out, kOffSformCode, g.sform_code);
    for (std::size_t i = 0; i < 3; ++i) {
        write_le<float>(out, kOffQuatern + 4 * i, g.quatern[i]);
        write_le<float>(out, kOffQoffset + 4 * i, g.qoffset[i]);
        for (std::size_t j = 0; j < 4; ++j) write_le<float>(out, kOffSrow + 16 * i + 4 * j, g.srow[i][j]);
    }
    out.replace(kOffMagic, 4, std::string_view("n+1\0", 4));
    // bytes 348..351: empty extension flag
    return out;
}

void check_dim_range(const Dims3& d, int extra = 1) {
    constexpr int kMax = std::numeric_limits<std::int16_t>::max();
    if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0 || extra <= 0 || d.nx > kMax || d.ny > kMax || d.nz > kMax || extra > kMax)
        throw Error(ErrorKind::MalformedHeader, "dimensions must be in 1..32767");
}

} // namespace

TimeSeriesVolume decode_timeseries(std::string_view bytes) {
    const RawHeader h = parse_header(bytes);
    if (h.dim[0] != 4)
        throw Error(ErrorKind::MalformedHeader, "scan must declare 4 dimensions", "dim[0]=" + std::to_string(h.dim[0]));
    if (h.datatype != 16 && h.datatype != 4)
        throw Error(ErrorKind::UnsupportedDatatype, "scan datatype must be float32 (16) or int16 (4)",
                    std::to_string(h.datatype));
    const std::size_t count = checked_payload(h, 4, bytes);

    TimeSeriesVolume vol;
    vol.spatial = {h.dim[1], h.dim[2], h.dim[3]};
    vol.nt = h.dim[4];
    vol.geometry = h.geometry;
    if (vol.nt < 2) throw Error(ErrorKind::MalformedHeader, "a time series needs at least 2 timepoints");

    const auto offset = static_cast<std::size_t>(h.vox_offset);
    const bool scaled = h.scl_slope != 0.f && !(h.scl_slope == 1.f && h.scl_inter == 0.f);
    vol.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        double v = h.datatype == 16 ? static_cast<double>(read_le<float>(bytes, offset + 4 * i))
                                    : static_cast<double>(read_le<std::int16_t>(bytes, offset + 2 * i));
        if (scaled) v = static_cast<double>(h.scl_slope) * v + static_cast<double>(h.scl_inter);
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) {
            const std::size_t nv = vol.voxels();
            const std::size_t t = i / nv;
            std::size_t r = i % nv;
            const std::size_t x = r % static_cast<std::size_t>(vol.spatial.nx);
            r /= static_cast<std::size_t>(vol.spatial.nx);
            const std::size_t y = r % static_cast<std::size_t>(vol.spatial.ny);
            const std::size_t z = r / static_cast<std::size_t>(vol.spatial.ny);
            throw Error(ErrorKind::NonFiniteSample, "non-finite sample in scan",
                        "(x,y,z,t)=(" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) + "," +
                            std::to_string(t) + ")");
        }
        vol.data[i] = f;
    }
    return vol;
}

TimeSeriesVolume load_timeseries(const std::filesystem::path& path) {
    try {
        return decode_timeseries(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + ": " + path.string(), e.detail());
    }
}

std::string encode_timeseries(const TimeSeriesVolume& vol) {
    check_dim_range(vol.spatial, vol.nt);
    if (vol.data.size() != vol.voxels() * static_cast<std::size_t>(vol.nt))
        throw Error(ErrorKind::MalformedHeader, "sample count does not match dims");
    std::array<std::int16_t, 8> dim{4, static_cast<std::int16_t>(vol.spatial.nx), static_cast<std::int16_t>(vol.spatial.ny),
                                    static_cast<std::int16_t>(vol.spatial.nz), static_cast<std::int16_t>(vol.nt), 1, 1, 1};
    std::string out = make_header(dim, NiftiDatatype::Float32, 1.f, 0.f, vol.geometry);
    out.resize(kDataOffset + 4 * vol.data.size());
    for (std::size_t i = 0; i < vol.data.size(); ++i) write_le<float>(out, kDataOffset + 4 * i, vol.data[i]);
    return out;
}

void save_timeseries(const TimeSeriesVolume& vol, const std::filesystem::path& path) {
    write_file(encode_timeseries(vol), path);
}

AtlasVolume decode_label_volume(std::string_view bytes) {
    const RawHeader h = parse_header(bytes);
    const bool three_d = h.dim[0] == 3 || (h.dim[0] == 4 && h.dim[4] == 1);
    if (!three_d)
        throw Error(ErrorKind::MalformedHeader, "label volume must be 3D", "dim[0]=" + std::to_string(h.dim[0]));
    if (h.datatype != 4 && h.datatype != 8)
        throw Error(ErrorKind::UnsupportedDatatype, "label volume datatype must be int16 (4) or int32 (8)",
                    std::to_string(h.datatype));
    if (h.scl_slope != 0.f && !(h.scl_slope == 1.f && h.scl_inter == 0.f))
        throw Error(ErrorKind::UnsupportedDatatype, "scaled label volumes are not supported");
    const std::size_t count = checked_payload(h, 3, bytes);

    AtlasVolume vol;
    vol.dims = {h.dim[1], h.dim[2], h.dim[3]};
    vol.geometry = h.geometry;
    vol.labels.resize(count);
    const auto offset = static_cast<std::size_t>(h.vox_offset);
    for (std::size_t i = 0; i < count; ++i) {
        const std::int32_t v = h.datatype == 4 ? read_le<std::int16_t>(bytes, offset + 2 * i)
                                               : read_le<std::int32_t>(bytes, offset + 4 * i);
        if (v < 0) throw Error(ErrorKind::NegativeLabel, "negative label", std::to_string(v));
        vol.labels[i] = v;
    }
    return vol;
}

AtlasVolume load_label_volume(const std::filesystem::path& path) {
    try {
        return decode_label_volume(read_file(path));
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + ": " + path.string(), e.detail());
    }
}

std::string encode_label_volume(const AtlasVolume& vol) {
    check_dim_range(vol.dims);
    if (vol.labels.size() != vol.dims.voxels()) throw Error(ErrorKind::MalformedHeader, "label count does not match dims");
    std::int32_t max_label = 0;
    for (auto v : vol.labels) {
        if (v < 0) throw Error(ErrorKind::NegativeLabel, "negative label", std::to_string(v));
        max_label = std::max(max_label, v);
    }
    const bool narrow = max_label <= std::numeric_limits<std::int16_t>::max();
    std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(vol.dims.nx), static_cast<std::int16_t>(vol.dims.ny),
                                    static_cast<std::int16_t>(vol.dims.nz), 1, 1, 1, 1};
    std::string out = make_header(dim, narrow ? NiftiDatatype::Int16 : NiftiDatatype::Int32, 0.f, 0.f, vol.geometry);
    const std::size_t elem = narrow ? 2 : 4;
    out.resize(kDataOffset + elem * vol.labels.size());
    for (std::size_t i = 0; i < vol.labels.size(); ++i) {
        if (narrow) write_le<std::int16_t>(out, kDataOffset + 2 * i, static_cast<std::int16_t>(vol.labels[i]));
        else write_le<std::int32_t>(out, kDataOffset + 4 * i, vol.labels[i]);
    }
    return out;
}

void save_label_volume(const AtlasVolume& vol, const std::filesystem::path& path) {
    write_file(encode_label_volume(vol), path);
}

void validate_atlas(const AtlasVolume& atlas, const AtlasMeta& meta) {
    std::int32_t last_checked = 0;
    for (auto v : atlas.labels) {
        if (v == 0 || v == last_checked) continue;
        if (!meta.find(v)) throw Error(ErrorKind::UnknownLabel, "label present in grid but absent from table", std::to_string(v));
        last_checked = v;
    }
}

std::pair<AtlasVolume, AtlasMeta> load_atlas(const std::filesystem::path& vol_path,
                                             const std::filesystem::path& meta_path) {
    AtlasVolume vol = load_label_volume(vol_path);
    AtlasMeta meta = load_atlas_meta(meta_path);
    validate_atlas(vol, meta);
    return {std::move(vol), std::move(meta)};
}

void check_compatible(const TimeSeriesVolume& scan, const AtlasVolume& atlas) {
    if (!(scan.spatial == atlas.dims)) {
        auto fmt = [](const Dims3& d) {
            return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
        };
        throw Error(ErrorKind::DimsMismatch, "scan and atlas spatial dims differ", fmt(scan.spatial) + " vs " + fmt(atlas.dims));
    }
}

std::vector<float> temporal_mean(const TimeSeriesVolume& scan) {
    const std::size_t nv = scan.voxels();
    std::vector<double> acc(nv, 0.0);
    for (int t = 0; t < scan.nt; ++t) {
        const float* frame = scan.data.data() + nv * static_cast<std::size_t>(t);
        for (std::size_t v = 0; v < nv; ++v) acc[v] += frame[v];
    }
    std::vector<float> out(nv);
    for (std::size_t v = 0; v < nv; ++v) out[v] = static_cast<float>(acc[v] / scan.nt);
    return out;
}

} // namespace parcelsteer

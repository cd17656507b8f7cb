#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "parcelsteer/atlas_meta.hpp"
#include "parcelsteer/supervoxel.hpp"
#include "parcelsteer/synth.hpp"
#include "parcelsteer/volume_io.hpp"
#include "test_support.hpp"

using namespace parcelsteer;
using testsupport::RawNifti;
using testsupport::TempDir;

namespace {

TimeSeriesVolume small_scan(int nx, int ny, int nz, int nt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(100.f, 7.f);
    TimeSeriesVolume v;
    v.spatial = {nx, ny, nz};
    v.nt = nt;
    v.data.resize(v.voxels() * static_cast<std::size_t>(nt));
    for (auto& s : v.data) s = normal(rng);
    return v;
}

AtlasMeta two_label_meta() {
    return AtlasMeta({{1, "A", 1, Hemisphere::Left}, {2, "B", 1, Hemisphere::Right}});
}

} // namespace

TEST_CASE("scan round trip is bit-exact for a 2x2x2x4 volume") {
    TempDir dir("vio");
    auto vol = small_scan(2, 2, 2, 4, 7);
    vol.data[3] = -0.0f;
    vol.data[5] = std::numeric_limits<float>::denorm_min();
    save_timeseries(vol, dir / "s.nii");
    const auto back = load_timeseries(dir / "s.nii");
    CHECK(back.spatial == vol.spatial);
    CHECK(back.nt == 4);
    REQUIRE(back.data.size() == vol.data.size());
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        CHECK(std::bit_cast<std::uint32_t>(back.data[i]) == std::bit_cast<std::uint32_t>(vol.data[i]));
}

TEST_CASE("scan header declaring 3 dims is MalformedHeader") {
    RawNifti raw;
    raw.dim[0] = 3;
    raw.dim[4] = 1;
    raw.set_payload(std::vector<float>(8, 1.f));
    CHECK_THROWS_KIND(decode_timeseries(raw.bytes()), ErrorKind::MalformedHeader);
}

TEST_CASE("generator output loads with the header-declared dims") {
    TempDir dir("vio");
    SynthSpec spec;  // 20x20x20, 120 timepoints
    const auto paths = write_synth(generate_synth(spec), dir.path());
    const auto dump = testsupport::dump_header(paths.scan);
    CHECK(dump.sizeof_hdr == 348);
    CHECK(std::string(dump.magic, 4) == std::string("n+1\0", 4));
    CHECK(dump.dim[0] == 4);
    CHECK(dump.datatype == 16);
    CHECK(dump.bitpix == 32);
    CHECK(dump.vox_offset >= 352.f);

    const auto vol = load_timeseries(paths.scan);
    CHECK(vol.spatial.nx == dump.dim[1]);
    CHECK(vol.spatial.ny == dump.dim[2]);
    CHECK(vol.spatial.nz == dump.dim[3]);
    CHECK(vol.nt == dump.dim[4]);
    CHECK(vol.spatial == Dims3{20, 20, 20});
    CHECK(vol.nt == 120);
}

TEST_CASE("int16 scans are promoted through slope and intercept") {
    RawNifti raw;
    raw.datatype = 4;
    raw.bitpix = 16;
    raw.scl_slope = 0.5f;
    raw.scl_inter = 10.f;
    std::vector<std::int16_t> ints(32);
    for (std::size_t i = 0; i < ints.size(); ++i) ints[i] = static_cast<std::int16_t>(static_cast<int>(i) * 3 - 40);
    raw.set_payload(ints);
    const auto vol = decode_timeseries(raw.bytes());
    REQUIRE(vol.data.size() == 32);
    for (std::size_t i = 0; i < ints.size(); ++i) CHECK(vol.data[i] == doctest::Approx(0.5 * ints[i] + 10.0));

    SUBCASE("slope zero means unscaled") {
        raw.scl_slope = 0.f;
        const auto plain = decode_timeseries(raw.bytes());
        for (std::size_t i = 0; i < ints.size(); ++i) CHECK(plain.data[i] == static_cast<float>(ints[i]));
    }
}

TEST_CASE("non-finite samples are rejected with their position") {
    RawNifti raw;  // 2x2x2x4 float32
    std::vector<float> samples(32, 1.f);
    // (x,y,z,t) = (1,0,1,2) -> 1 + 2*(0 + 2*(1 + 2*2)) = 21
    samples[21] = std::numeric_limits<float>::quiet_NaN();
    raw.set_payload(samples);
    try {
        (void)decode_timeseries(raw.bytes());
        FAIL("expected NonFiniteSample");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteSample);
        CHECK(e.detail() == "(x,y,z,t)=(1,0,1,2)");
    }
}

TEST_CASE("unsupported containers and malformed headers are rejected") {
    RawNifti raw;
    raw.set_payload(std::vector<float>(32, 1.f));
    const std::string good = raw.bytes();
    REQUIRE_NOTHROW((void)decode_timeseries(good));

    SUBCASE("gzip") {
        std::string gz = good;
        gz[0] = '\x1f';
        gz[1] = '\x8b';
        CHECK_THROWS_KIND(decode_timeseries(gz), ErrorKind::UnsupportedFormat);
    }
    SUBCASE("NIfTI-2") {
        RawNifti two = raw;
        two.sizeof_hdr = 540;
        CHECK_THROWS_KIND(decode_timeseries(two.bytes()), ErrorKind::UnsupportedFormat);
    }
    SUBCASE("big-endian") {
        std::string be = good;
        std::swap(be[0], be[3]);
        std::swap(be[1], be[2]);
        CHECK_THROWS_KIND(decode_timeseries(be), ErrorKind::UnsupportedFormat);
    }
    SUBCASE("two-file magic") {
        RawNifti pair = raw;
        pair.magic = std::string("ni1\0", 4);
        CHECK_THROWS_KIND(decode_timeseries(pair.bytes()), ErrorKind::UnsupportedFormat);
    }
    SUBCASE("bad magic") {
        RawNifti bad = raw;
        bad.magic = std::string("xyz\0", 4);
        CHECK_THROWS_KIND(decode_timeseries(bad.bytes()), ErrorKind::MalformedHeader);
    }
    SUBCASE("truncated data") {
        CHECK_THROWS_KIND(decode_timeseries(good.substr(0, good.size() - 4)), ErrorKind::MalformedHeader);
    }
    SUBCASE("truncated header") {
        CHECK_THROWS_KIND(decode_timeseries(good.substr(0, 200)), ErrorKind::MalformedHeader);
    }
    SUBCASE("vox_offset below 352") {
        RawNifti low = raw;
        low.vox_offset = 348;
        CHECK_THROWS_KIND(decode_timeseries(low.bytes()), ErrorKind::MalformedHeader);
    }
    SUBCASE("float64 datatype") {
        RawNifti f64 = raw;
        f64.datatype = 64;
        f64.bitpix = 64;
        f64.set_payload(std::vector<double>(32, 1.0));
        CHECK_THROWS_KIND(decode_timeseries(f64.bytes()), ErrorKind::UnsupportedDatatype);
    }
    SUBCASE("single timepoint") {
        RawNifti one = raw;
        one.dim[4] = 1;
        one.set_payload(std::vector<float>(8, 1.f));
        CHECK_THROWS_KIND(decode_timeseries(one.bytes()), ErrorKind::MalformedHeader);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_KIND(load_timeseries("/nonexistent/scan.nii"), ErrorKind::NotFound);
    }
}

TEST_CASE("atlas table and grid are cross-validated") {
    TempDir dir("vio");
    AtlasVolume atlas;
    atlas.dims = {2, 2, 1};
    atlas.labels = {0, 1, 2, 2};
    save_label_volume(atlas, dir / "a.nii");

    SUBCASE("labels {1,2} with table {1,2} load") {
        save_atlas_meta(two_label_meta(), dir / "a.tsv");
        const auto [vol, meta] = load_atlas(dir / "a.nii", dir / "a.tsv");
        CHECK(vol.labels == atlas.labels);
        CHECK(meta.size() == 2);
    }
    SUBCASE("label 3 absent from the table is UnknownLabel(3)") {
        atlas.labels[0] = 3;
        save_label_volume(atlas, dir / "a.nii");
        save_atlas_meta(two_label_meta(), dir / "a.tsv");
        try {
            (void)load_atlas(dir / "a.nii", dir / "a.tsv");
            FAIL("expected UnknownLabel");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::UnknownLabel);
            CHECK(e.detail() == "3");
        }
    }
    SUBCASE("duplicate table rows") {
        testsupport::spit(dir / "a.tsv", "label_id\tname\tnetwork_id\themisphere\n1\tA\t1\tL\n1\tB\t1\tR\n");
        CHECK_THROWS_KIND(load_atlas(dir / "a.nii", dir / "a.tsv"), ErrorKind::DuplicateLabel);
    }
    SUBCASE("bad hemisphere token") {
        testsupport::spit(dir / "a.tsv", "label_id\tname\tnetwork_id\themisphere\n1\tA\t1\tX\n2\tB\t1\tR\n");
        CHECK_THROWS_KIND(load_atlas(dir / "a.nii", dir / "a.tsv"), ErrorKind::MalformedMeta);
    }
    SUBCASE("missing header") {
        testsupport::spit(dir / "a.tsv", "");
        CHECK_THROWS_KIND(load_atlas(dir / "a.nii", dir / "a.tsv"), ErrorKind::MalformedMeta);
    }
    SUBCASE("columns are located by name, CRLF tolerated") {
        testsupport::spit(dir / "a.tsv", "hemisphere\tnetwork_id\tname\tlabel_id\r\nR\t3\tB\t2\r\nL\t4\tA\t1\r\n");
        const auto [vol, meta] = load_atlas(dir / "a.nii", dir / "a.tsv");
        REQUIRE(meta.find(2) != nullptr);
        CHECK(meta.find(2)->network_id == 3);
        CHECK(meta.find(2)->hemisphere == Hemisphere::Right);
        CHECK(meta.find(1)->name == "A");
    }
}

TEST_CASE("meta table text round trips") {
    const AtlasMeta meta({{5, "x y", 2, Hemisphere::Right}, {1, "A", 1, Hemisphere::Left}});
    const auto back = parse_atlas_meta(format_atlas_meta(meta));
    CHECK(back.entries() == meta.entries());
}

TEST_CASE("a 400-label atlas yields 400 super-voxels") {
    // 20 x 20 x 2 grid with one distinct label per voxel in z = 0 and z = 1 pairs.
    AtlasVolume atlas;
    atlas.dims = {20, 20, 2};
    atlas.labels.resize(atlas.dims.voxels());
    std::vector<AtlasEntry> entries;
    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x) atlas.labels[atlas.dims.index(x, y, z)] = 1 + x + 20 * y;
    for (int id = 1; id <= 400; ++id)
        entries.push_back({id, "R" + std::to_string(id), 1 + id % 7, id % 2 ? Hemisphere::Left : Hemisphere::Right});
    const AtlasMeta meta(entries);
    REQUIRE_NOTHROW(validate_atlas(atlas, meta));
    const auto scan = small_scan(20, 20, 2, 10, 3);
    const auto svs = extract_supervoxels(scan, atlas, meta);
    REQUIRE(svs.size() == 400);
    std::set<int> ids;
    for (const auto& sv : svs) {
        ids.insert(sv.sv_id);
        CHECK(sv.voxel_indices.size() == 2);
        CHECK(sv.mean_tc.source_count == 2);
    }
    CHECK(ids.size() == 400);
}

TEST_CASE("label volume round trips") {
    TempDir dir("vio");
    SUBCASE("8x8x8 grid") {
        AtlasVolume vol;
        vol.dims = {8, 8, 8};
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> label(0, 30);
        for (std::size_t i = 0; i < vol.dims.voxels(); ++i) vol.labels.push_back(label(rng));
        save_label_volume(vol, dir / "l.nii");
        const auto back = load_label_volume(dir / "l.nii");
        CHECK(back.dims == vol.dims);
        CHECK(back.labels == vol.labels);
        CHECK(testsupport::dump_header(dir / "l.nii").datatype == 4);
    }
    SUBCASE("all-zero grid") {
        AtlasVolume vol;
        vol.dims = {3, 4, 5};
        vol.labels.assign(vol.dims.voxels(), 0);
        save_label_volume(vol, dir / "z.nii");
        const auto back = load_label_volume(dir / "z.nii");
        CHECK(back.labels == vol.labels);
    }
    SUBCASE("labels beyond int16 use int32 storage") {
        AtlasVolume vol;
        vol.dims = {2, 1, 1};
        vol.labels = {0, 100000};
        save_label_volume(vol, dir / "w.nii");
        CHECK(testsupport::dump_header(dir / "w.nii").datatype == 8);
        CHECK(load_label_volume(dir / "w.nii").labels == vol.labels);
    }
    SUBCASE("geometry fields survive untouched") {
        AtlasVolume vol;
        vol.dims = {2, 2, 2};
        vol.labels.assign(8, 1);
        vol.geometry.pixdim = {1.f, 2.f, 2.5f, 3.f, 0.72f, 1.f, 1.f, 1.f};
        vol.geometry.qform_code = 1;
        vol.geometry.sform_code = 4;
        vol.geometry.quatern = {0.f, 1.f, 0.f};
        vol.geometry.qoffset = {-90.f, 126.f, -72.f};
        vol.geometry.srow = {{{-2.f, 0.f, 0.f, 90.f}, {0.f, 2.f, 0.f, -126.f}, {0.f, 0.f, 2.f, -72.f}}};
        vol.geometry.descrip = "template";
        const auto back = decode_label_volume(encode_label_volume(vol));
        CHECK(back.geometry == vol.geometry);
    }
    SUBCASE("negative labels are rejected on write") {
        AtlasVolume vol;
        vol.dims = {1, 1, 1};
        vol.labels = {-1};
        CHECK_THROWS_KIND(encode_label_volume(vol), ErrorKind::NegativeLabel);
    }
}

TEST_CASE("scan geometry survives a round trip") {
    auto vol = small_scan(2, 3, 2, 3, 5);
    vol.geometry.pixdim = {1.f, 2.f, 2.f, 2.f, 0.72f, 1.f, 1.f, 1.f};
    vol.geometry.xyzt_units = 10;
    vol.geometry.toffset = 1.5f;
    vol.geometry.descrip = "bold";
    const auto back = decode_timeseries(encode_timeseries(vol));
    CHECK(back.geometry == vol.geometry);
    CHECK(back.voxel_size_mm() == std::array<float, 3>{2.f, 2.f, 2.f});
}

TEST_CASE("flat index order is x fastest then y, z, t") {
    RawNifti raw;
    raw.dim[1] = 3;
    raw.dim[2] = 2;
    raw.dim[3] = 2;
    raw.dim[4] = 2;
    std::vector<float> samples(24);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = static_cast<float>(i);
    raw.set_payload(samples);
    const auto vol = decode_timeseries(raw.bytes());
    for (int t = 0; t < 2; ++t)
        for (int z = 0; z < 2; ++z)
            for (int y = 0; y < 2; ++y)
                for (int x = 0; x < 3; ++x) CHECK(vol.at(x, y, z, t) == static_cast<float>(x + 3 * (y + 2 * (z + 2 * t))));
}

TEST_CASE("scan and atlas dims must agree") {
    AtlasVolume atlas;
    atlas.dims = {2, 2, 3};
    atlas.labels.assign(12, 1);
    CHECK_THROWS_KIND(check_compatible(small_scan(2, 2, 2, 3, 1), atlas), ErrorKind::DimsMismatch);
    atlas.dims = {2, 2, 2};
    atlas.labels.assign(8, 1);
    CHECK_NOTHROW(check_compatible(small_scan(2, 2, 2, 3, 1), atlas));
}

TEST_CASE("temporal mean averages each voxel over time") {
    auto vol = small_scan(2, 1, 1, 3, 1);
    vol.data = {1.f, 10.f, 2.f, 20.f, 6.f, 60.f};
    const auto mean = temporal_mean(vol);
    REQUIRE(mean.size() == 2);
    CHECK(mean[0] == doctest::Approx(3.0));
    CHECK(mean[1] == doctest::Approx(30.0));
}

#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "geocell/dataset.hpp"
#include "geocell/errors.hpp"
#include "geocell/rng.hpp"

using namespace geocell;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() / ("geocell_test_" + std::to_string(::getpid()) +
                                              "_" + std::to_string(counter++));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Dataset random_dataset(int n, int dim, std::uint64_t seed, bool with_albums, bool with_sigs) {
    Rng rng(seed);
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        PhotoRecord r;
        r.id = "p" + std::to_string(i);
        r.geo = GeoPoint{rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)};
        for (int d = 0; d < dim; ++d) r.features.push_back(rng.normal());
        if (with_albums) {
            r.album_id = "a" + std::to_string(i / 5);
            r.timestamp = i % 5;
        }
        if (with_sigs) {
            r.signature.resize(8);
            for (auto& b : r.signature) b = static_cast<std::uint8_t>(rng.below(256));
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace

TEST_CASE("load_jsonl: empty file gives an empty dataset") {
    fs::path dir = temp_dir();
    { std::ofstream f(dir / "empty.jsonl"); }
    CHECK(load_jsonl((dir / "empty.jsonl").string()).empty());
}

TEST_CASE("jsonl round trip: single record is field-exact") {
    fs::path dir = temp_dir();
    Dataset ds;
    PhotoRecord r;
    r.id = "x1";
    r.geo = {48.8566, 2.3522};
    r.features = {0.25, -1.5, 3.0};
    r.timestamp = 1234567;
    r.album_id = "alb";
    r.signature = {0xde, 0xad, 0xbe, 0xef};
    ds.records.push_back(r);
    write_jsonl(ds, (dir / "one.jsonl").string());
    Dataset back = load_jsonl((dir / "one.jsonl").string());
    REQUIRE(back.size() == 1);
    CHECK(back.records[0] == r);
}

TEST_CASE("jsonl round trip: write-load-write is byte-identical") {
    fs::path dir = temp_dir();
    Dataset ds = random_dataset(1000, 6, 99, true, true);
    write_jsonl(ds, (dir / "a.jsonl").string());
    Dataset back = load_jsonl((dir / "a.jsonl").string());
    write_jsonl(back, (dir / "b.jsonl").string());
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
}

TEST_CASE("load_jsonl reports malformed lines with their number") {
    fs::path dir = temp_dir();
    {
        std::ofstream f(dir / "bad.jsonl");
        f << R"({"id":"a","lat":1.0,"lon":2.0,"features":[1.0]})" << "\n";
        f << "{not json}\n";
    }
    try {
        load_jsonl((dir / "bad.jsonl").string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("load_jsonl validates the schema") {
    fs::path dir = temp_dir();
    auto write_line = [&](const std::string& line) {
        std::ofstream f(dir / "x.jsonl");
        f << line << "\n";
    };
    write_line(R"({"id":"a","lat":1.0,"lon":2.0})");
    CHECK_THROWS_AS(load_jsonl((dir / "x.jsonl").string()), ParseError);
    write_line(R"({"id":"a","lat":"far","lon":2.0,"features":[1]})");
    CHECK_THROWS_AS(load_jsonl((dir / "x.jsonl").string()), ParseError);
    // album member without timestamp
    write_line(R"({"id":"a","lat":1.0,"lon":2.0,"features":[1.0],"album":"g"})");
    CHECK_THROWS_AS(load_jsonl((dir / "x.jsonl").string()), ParseError);
    // ragged feature dims across lines
    {
        std::ofstream f(dir / "x.jsonl");
        f << R"({"id":"a","lat":1.0,"lon":2.0,"features":[1.0]})" << "\n";
        f << R"({"id":"b","lat":1.0,"lon":2.0,"features":[1.0,2.0]})" << "\n";
    }
    CHECK_THROWS_AS(load_jsonl((dir / "x.jsonl").string()), ParseError);
}

TEST_CASE("split: two albums, half and half") {
    Dataset ds = random_dataset(10, 2, 1, true, false);  // albums of 5
    auto [train, val] = split(ds, 0.5, 42);
    CHECK(train.size() == 5);
    CHECK(val.size() == 5);
    // no album straddles
    std::set<std::string> train_albums, val_albums;
    for (const auto& r : train.records) train_albums.insert(*r.album_id);
    for (const auto& r : val.records) val_albums.insert(*r.album_id);
    for (const auto& a : train_albums) CHECK(val_albums.count(a) == 0);
}

TEST_CASE("split: deterministic per seed, disjoint by id") {
    Dataset ds = random_dataset(200, 3, 2, true, false);
    auto [t1, v1] = split(ds, 0.7, 9);
    auto [t2, v2] = split(ds, 0.7, 9);
    CHECK(t1.records == t2.records);
    CHECK(v1.records == v2.records);
    auto [t3, v3] = split(ds, 0.7, 10);
    CHECK(t1.size() + v1.size() == ds.size());
    std::set<std::string> ids;
    for (const auto& r : t1.records) ids.insert(r.id);
    for (const auto& r : v1.records) CHECK(ids.count(r.id) == 0);
    // a different seed usually shuffles differently; sizes stay near target
    CHECK(t3.size() + v3.size() == ds.size());
}

TEST_CASE("split: sizes within album granularity of the target") {
    Dataset ds = random_dataset(1000, 2, 3, true, false);  // albums of 5
    double fraction = 0.728;
    auto [train, val] = split(ds, fraction, 4);
    double target = fraction * 1000;
    CHECK(std::fabs(static_cast<double>(train.size()) - target) <= 5.0);
    CHECK(train.size() + val.size() == 1000);
}

TEST_CASE("split rejects degenerate fractions") {
    Dataset ds = random_dataset(10, 2, 1, false, false);
    CHECK_THROWS_AS(split(ds, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(split(ds, 1.0, 1), InvalidArgument);
}

TEST_CASE("group_albums sorts chronologically with id tiebreak") {
    Dataset ds;
    auto add = [&](const char* id, std::int64_t ts) {
        PhotoRecord r;
        r.id = id;
        r.geo = {0, 0};
        r.features = {0.0};
        r.album_id = "a";
        r.timestamp = ts;
        ds.records.push_back(r);
    };
    add("z", 5);
    add("b", 3);
    add("a", 3);
    auto albums = group_albums(ds);
    REQUIRE(albums.size() == 1);
    REQUIRE(albums[0].photos.size() == 3);
    CHECK(ds.records[albums[0].photos[0]].id == "a");
    CHECK(ds.records[albums[0].photos[1]].id == "b");
    CHECK(ds.records[albums[0].photos[2]].id == "z");
}

TEST_CASE("dedup: threshold 0 removes nothing") {
    Dataset test = random_dataset(50, 2, 5, false, true);
    Dataset train = random_dataset(50, 2, 6, false, true);
    Dataset kept = dedup_filter(test, train, 0);
    CHECK(kept.records == test.records);
}

TEST_CASE("dedup: exact duplicates are removed at any threshold >= 1") {
    Dataset train = random_dataset(10, 2, 7, false, true);
    Dataset test = random_dataset(10, 2, 8, false, true);
    test.records[3].signature = train.records[5].signature;
    Dataset kept = dedup_filter(test, train, 1);
    for (const auto& r : kept.records) CHECK(r.id != "p3");
    CHECK(kept.size() == test.size() - 1);
}

TEST_CASE("dedup matches the quadratic brute-force filter") {
    Dataset test = random_dataset(200, 1, 11, false, true);
    Dataset train = random_dataset(200, 1, 12, false, true);
    int threshold = 8;
    Dataset kept = dedup_filter(test, train, threshold);

    std::vector<std::string> expected;
    for (const auto& t : test.records) {
        int min_d = 1 << 30;
        for (const auto& tr : train.records) {
            min_d = std::min(min_d, hamming_distance(t.signature, tr.signature));
        }
        if (min_d >= threshold) expected.push_back(t.id);
    }
    std::vector<std::string> got;
    for (const auto& r : kept.records) got.push_back(r.id);
    CHECK(got == expected);
}

TEST_CASE("dedup is idempotent") {
    Dataset test = random_dataset(100, 1, 13, false, true);
    Dataset train = random_dataset(100, 1, 14, false, true);
    Dataset once = dedup_filter(test, train, 6);
    Dataset twice = dedup_filter(once, train, 6);
    CHECK(once.records == twice.records);
}

TEST_CASE("dedup signature errors") {
    Dataset test = random_dataset(5, 1, 15, false, true);
    Dataset train = random_dataset(5, 1, 16, false, true);
    Dataset no_sig = random_dataset(5, 1, 17, false, false);
    CHECK_THROWS_AS(dedup_filter(no_sig, train, 4), SignatureError);
    Dataset short_sig = test;
    short_sig.records[2].signature.resize(4);
    CHECK_THROWS_AS(dedup_filter(short_sig, train, 4), SignatureError);
}

TEST_CASE("synthetic: zero noise and zero ambiguity reproduce hotspot means") {
    SyntheticSpec spec;
    spec.n_hotspots = 4;
    spec.photos_per_hotspot = 25;
    spec.feature_dim = 8;
    spec.noise_sigma = 0.0;
    spec.ambiguous_fraction = 0.0;
    spec.label_noise_fraction = 0.0;
    spec.seed = 3;
    SyntheticData data = generate_synthetic(spec);
    REQUIRE(data.dataset.size() == 100);
    for (std::size_t i = 0; i < data.dataset.size(); ++i) {
        const auto& mean = data.hotspots[static_cast<std::size_t>(data.hotspot_of[i])].feature_mean;
        CHECK(data.dataset.records[i].features == mean);
    }
}

TEST_CASE("synthetic: same seed gives a byte-identical dataset") {
    SyntheticSpec spec;
    spec.n_hotspots = 5;
    spec.photos_per_hotspot = 30;
    spec.ambiguous_fraction = 0.4;
    spec.label_noise_fraction = 0.1;
    spec.seed = 12;
    SyntheticData a = generate_synthetic(spec);
    SyntheticData b = generate_synthetic(spec);
    REQUIRE(a.dataset.size() == b.dataset.size());
    for (std::size_t i = 0; i < a.dataset.size(); ++i) {
        CHECK(record_to_json_line(a.dataset.records[i]) ==
              record_to_json_line(b.dataset.records[i]));
    }
}

TEST_CASE("synthetic: hotspot means are at least 6 sigma apart") {
    SyntheticSpec spec;
    spec.n_hotspots = 10;
    spec.photos_per_hotspot = 5;
    spec.noise_sigma = 2.0;
    spec.seed = 4;
    SyntheticData data = generate_synthetic(spec);
    for (std::size_t a = 0; a < data.hotspots.size(); ++a) {
        for (std::size_t b = a + 1; b < data.hotspots.size(); ++b) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < data.hotspots[a].feature_mean.size(); ++j) {
                double d = data.hotspots[a].feature_mean[j] - data.hotspots[b].feature_mean[j];
                d2 += d * d;
            }
            CHECK(std::sqrt(d2) >= 6.0 * spec.noise_sigma);
        }
    }
}

TEST_CASE("synthetic: per-hotspot empirical feature means converge") {
    SyntheticSpec spec;
    spec.n_hotspots = 3;
    spec.photos_per_hotspot = 400;
    spec.feature_dim = 4;
    spec.noise_sigma = 1.0;
    spec.seed = 6;
    SyntheticData data = generate_synthetic(spec);
    std::vector<std::vector<double>> sums(3, std::vector<double>(4, 0.0));
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < data.dataset.size(); ++i) {
        int h = data.hotspot_of[i];
        ++counts[static_cast<std::size_t>(h)];
        for (int j = 0; j < 4; ++j) {
            sums[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)] +=
                data.dataset.records[i].features[static_cast<std::size_t>(j)];
        }
    }
    for (int h = 0; h < 3; ++h) {
        double bound = 3.0 * spec.noise_sigma / std::sqrt(static_cast<double>(counts[h]));
        for (int j = 0; j < 4; ++j) {
            double emp = sums[h][j] / counts[h];
            CHECK(std::fabs(emp - data.hotspots[static_cast<std::size_t>(h)]
                                      .feature_mean[static_cast<std::size_t>(j)]) <=
                  3.5 * bound);  // slack over 3 sigma/sqrt(n) for the multiple comparisons
        }
    }
}

TEST_CASE("synthetic: albums are chronological and well-formed") {
    SyntheticSpec spec;
    spec.n_hotspots = 6;
    spec.photos_per_hotspot = 40;
    spec.ambiguous_fraction = 0.5;
    spec.seed = 8;
    SyntheticData data = generate_synthetic(spec);
    auto albums = group_albums(data.dataset);
    CHECK(albums.size() >= 240 / spec.album_len_max);
    std::size_t total = 0;
    for (const Album& a : albums) {
        total += a.photos.size();
        for (std::size_t i = 1; i < a.photos.size(); ++i) {
            CHECK(*data.dataset.records[a.photos[i]].timestamp >
                  *data.dataset.records[a.photos[i - 1]].timestamp);
        }
    }
    CHECK(total == data.dataset.size());
}

TEST_CASE("split and dedup commute when no duplicates cross albums") {
    Dataset ds = random_dataset(120, 1, 20, true, true);
    Dataset probe = random_dataset(40, 1, 21, false, true);
    auto [train_a, val_a] = split(ds, 0.6, 5);
    Dataset filtered_then_split = dedup_filter(probe, ds, 6);
    // dedup against the union equals dedup against both halves in sequence
    Dataset sequential = dedup_filter(dedup_filter(probe, train_a, 6), val_a, 6);
    CHECK(filtered_then_split.records == sequential.records);
}

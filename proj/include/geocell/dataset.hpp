#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geocell/geo.hpp"
#include "geocell/partition.hpp"

namespace geocell {

// One geotagged photo: a feature vector standing in for the image content,
// plus optional album/sequence and near-duplicate-signature columns.
//
// JSONL schema (one object per line, optional keys omitted):
//   {"id": s, "lat": f, "lon": f, "features": [f...],
//    "ts": i?, "album": s?, "sig": hex-string?}
struct PhotoRecord {
    std::string id;
    GeoPoint geo;
    std::vector<double> features;
    std::optional<std::int64_t> timestamp;
    std::optional<std::string> album_id;
    std::vector<std::uint8_t> signature;  // empty = none

    bool operator==(const PhotoRecord&) const = default;
};

struct Dataset {
    std::vector<PhotoRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    // 0 for an empty dataset
    std::size_t feature_dim() const { return records.empty() ? 0 : records[0].features.size(); }
};

// Album: indices into a dataset, in chronological order (ties broken by id).
struct Album {
    std::string album_id;
    std::vector<std::size_t> photos;
};

// Groups records that carry an album id; albums ordered by first appearance.
std::vector<Album> group_albums(const Dataset& ds);

Dataset load_jsonl(const std::string& path);
void write_jsonl(const Dataset& ds, const std::string& path);
std::string record_to_json_line(const PhotoRecord& r);

// Album-granular split: no album straddles the two sides, records without an
// album id move individually. Deterministic per seed.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

// Keeps the test records whose minimum Hamming distance to every train
// signature is >= threshold. Signatures must be present and equal-width on
// both sides.
Dataset dedup_filter(const Dataset& test, const Dataset& train, int hamming_threshold);

int hamming_distance(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

// ---------------------------------------------------------------------------
// synthetic data

// Location-correlated synthetic corpus: hotspots on the sphere with
// well-separated feature means, photos jittered around them, and albums
// formed by short random walks between nearby hotspots. Ambiguous photos get
// location-independent features; label-noised photos get another hotspot's
// features.
struct SyntheticSpec {
    int n_hotspots = 12;
    int photos_per_hotspot = 150;
    int feature_dim = 16;
    double noise_sigma = 1.0;
    double label_noise_fraction = 0.0;
    double ambiguous_fraction = 0.0;
    std::uint64_t seed = 1;

    // plumbing knobs
    double geo_sigma_deg = 0.0005;  // ~55 m of geotag jitter
    int album_len_min = 6;
    int album_len_max = 12;
    double move_prob = 0.2;  // per-step chance the album walks to a nearby hotspot
    int walk_neighbors = 3;

    void validate() const;
};

struct Hotspot {
    GeoPoint location;
    std::vector<double> feature_mean;
};

struct SyntheticData {
    Dataset dataset;
    std::vector<Hotspot> hotspots;
    std::vector<int> hotspot_of;   // per record: generating hotspot
    std::vector<bool> ambiguous;   // per record: features carry no location signal
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// labeling against a partition

struct LabeledDataset {
    Dataset data;
    std::vector<int> labels;  // class index per record
};

// Keeps exactly the records whose geotag falls in a kept cell, annotated with
// the class index; input order preserved.
LabeledDataset filter_covered(const Dataset& ds, const Partition& part);

}  // namespace geocell

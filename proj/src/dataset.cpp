#include "geocell/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "geocell/errors.hpp"
#include "geocell/rng.hpp"

namespace geocell {

namespace {

char hex_digit(unsigned v) { return static_cast<char>(v < 10 ? '0' + v : 'a' + (v - 10)); }

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string sig_to_hex(const std::vector<std::uint8_t>& sig) {
    std::string s;
    s.reserve(sig.size() * 2);
    for (std::uint8_t b : sig) {
        s.push_back(hex_digit(b >> 4));
        s.push_back(hex_digit(b & 0xf));
    }
    return s;
}

std::vector<std::uint8_t> hex_to_sig(const std::string& s) {
    if (s.size() % 2 != 0) throw ParseError("sig: odd hex length");
    std::vector<std::uint8_t> sig(s.size() / 2);
    for (std::size_t i = 0; i < sig.size(); ++i) {
        int hi = hex_value(s[2 * i]);
        int lo = hex_value(s[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("sig: non-hex character");
        sig[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return sig;
}

PhotoRecord record_from_json(const nlohmann::json& j) {
    PhotoRecord r;
    r.id = j.at("id").get<std::string>();
    r.geo.lat_deg = j.at("lat").get<double>();
    r.geo.lon_deg = j.at("lon").get<double>();
    if (!std::isfinite(r.geo.lat_deg) || !std::isfinite(r.geo.lon_deg)) {
        throw ParseError("non-finite coordinate");
    }
    r.geo = r.geo.normalized();
    r.features = j.at("features").get<std::vector<double>>();
    for (double v : r.features) {
        if (!std::isfinite(v)) throw ParseError("non-finite feature");
    }
    if (j.contains("ts")) r.timestamp = j.at("ts").get<std::int64_t>();
    if (j.contains("album")) r.album_id = j.at("album").get<std::string>();
    if (j.contains("sig")) r.signature = hex_to_sig(j.at("sig").get<std::string>());
    return r;
}

}  // namespace

std::string record_to_json_line(const PhotoRecord& r) {
    nlohmann::json j;
    j["id"] = r.id;
    j["lat"] = r.geo.lat_deg;
    j["lon"] = r.geo.lon_deg;
    j["features"] = r.features;
    if (r.timestamp) j["ts"] = *r.timestamp;
    if (r.album_id) j["album"] = *r.album_id;
    if (!r.signature.empty()) j["sig"] = sig_to_hex(r.signature);
    return j.dump();
}

Dataset load_jsonl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            ds.records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const PhotoRecord& r = ds.records.back();
        if (r.features.size() != ds.records.front().features.size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": feature dim " +
                             std::to_string(r.features.size()) + " != " +
                             std::to_string(ds.records.front().features.size()));
        }
        if (r.album_id && !r.timestamp) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": album member without timestamp");
        }
    }
    return ds;
}

void write_jsonl(const Dataset& ds, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    for (const PhotoRecord& r : ds.records) f << record_to_json_line(r) << '\n';
    if (!f) throw DataError("write failed: " + path);
}

std::vector<Album> group_albums(const Dataset& ds) {
    std::vector<Album> albums;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        if (!r.album_id) continue;
        auto [it, inserted] = by_id.emplace(*r.album_id, albums.size());
        if (inserted) albums.push_back(Album{*r.album_id, {}});
        albums[it->second].photos.push_back(i);
    }
    for (Album& a : albums) {
        std::sort(a.photos.begin(), a.photos.end(), [&](std::size_t x, std::size_t y) {
            const auto& rx = ds.records[x];
            const auto& ry = ds.records[y];
            if (*rx.timestamp != *ry.timestamp) return *rx.timestamp < *ry.timestamp;
            return rx.id < ry.id;
        });
    }
    return albums;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidArgument("split: fraction must be in (0, 1)");
    }
    // groups = albums plus one singleton per album-less record, in first-
    // appearance order
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> album_group;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        if (r.album_id) {
            auto [it, inserted] = album_group.emplace(*r.album_id, groups.size());
            if (inserted) groups.emplace_back();
            groups[it->second].push_back(i);
        } else {
            groups.push_back({i});
        }
    }
    Rng rng(seed);
    rng.shuffle(groups);
    double target = train_fraction * static_cast<double>(ds.records.size());
    Dataset train, val;
    std::size_t n_train = 0;
    for (const auto& g : groups) {
        Dataset& side = (static_cast<double>(n_train) < target) ? train : val;
        if (&side == &train) n_train += g.size();
        for (std::size_t i : g) side.records.push_back(ds.records[i]);
    }
    return {std::move(train), std::move(val)};
}

int hamming_distance(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    }
    return d;
}

Dataset dedup_filter(const Dataset& test, const Dataset& train, int hamming_threshold) {
    if (hamming_threshold < 0) throw InvalidArgument("dedup: negative threshold");
    std::size_t width = 0;
    auto check_sig = [&](const PhotoRecord& r, const char* side) {
        if (r.signature.empty()) {
            throw SignatureError(std::string("dedup: missing signature in ") + side +
                                 " record " + r.id);
        }
        if (width == 0) width = r.signature.size();
        if (r.signature.size() != width) {
            throw SignatureError(std::string("dedup: signature width mismatch in ") + side +
                                 " record " + r.id);
        }
    };
    for (const auto& r : train.records) check_sig(r, "train");
    for (const auto& r : test.records) check_sig(r, "test");

    Dataset kept;
    for (const auto& t : test.records) {
        bool near_dup = false;
        for (const auto& tr : train.records) {
            if (hamming_distance(t.signature, tr.signature) < hamming_threshold) {
                near_dup = true;
                break;
            }
        }
        if (!near_dup) kept.records.push_back(t);
    }
    return kept;
}

// ---------------------------------------------------------------------------
// synthetic data

void SyntheticSpec::validate() const {
    if (n_hotspots < 1 || photos_per_hotspot < 1 || feature_dim < 1) {
        throw InvalidArgument("synthetic: counts and dim must be positive");
    }
    if (noise_sigma < 0.0 || geo_sigma_deg < 0.0) {
        throw InvalidArgument("synthetic: sigmas must be non-negative");
    }
    if (label_noise_fraction < 0.0 || label_noise_fraction > 1.0 ||
        ambiguous_fraction < 0.0 || ambiguous_fraction > 1.0) {
        throw InvalidArgument("synthetic: fractions must be in [0, 1]");
    }
    if (album_len_min < 1 || album_len_max < album_len_min) {
        throw InvalidArgument("synthetic: bad album length range");
    }
    if (move_prob < 0.0 || move_prob > 1.0 || walk_neighbors < 1) {
        throw InvalidArgument("synthetic: bad walk parameters");
    }
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticData out;

    // Hotspot feature means, redrawn until every pair is >= 6 sigma apart so
    // classes stay separable by construction. The scale makes a redraw rare.
    double sigma = spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0;
    double mean_scale = 3.0 * sigma;
    double min_sep = 6.0 * sigma;
    std::vector<std::vector<double>> means;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        means.clear();
        for (int k = 0; k < spec.n_hotspots; ++k) {
            std::vector<double> m(static_cast<std::size_t>(spec.feature_dim));
            for (double& v : m) v = rng.normal(0.0, mean_scale);
            means.push_back(std::move(m));
        }
        bool ok = true;
        for (std::size_t a = 0; a < means.size() && ok; ++a) {
            for (std::size_t b = a + 1; b < means.size() && ok; ++b) {
                if (sq_dist(means[a], means[b]) < min_sep * min_sep) ok = false;
            }
        }
        if (ok) break;
        if (attempt == 999) throw NumericError("synthetic: could not separate hotspot means");
    }

    for (int k = 0; k < spec.n_hotspots; ++k) {
        GeoPoint loc{rad2deg(std::asin(rng.uniform(-1.0, 1.0))), rng.uniform(-180.0, 180.0)};
        out.hotspots.push_back(Hotspot{loc.normalized(), means[static_cast<std::size_t>(k)]});
    }

    // nearest-hotspot table for the album walk
    std::vector<std::vector<int>> nearest(static_cast<std::size_t>(spec.n_hotspots));
    for (int a = 0; a < spec.n_hotspots; ++a) {
        std::vector<std::pair<double, int>> d;
        for (int b = 0; b < spec.n_hotspots; ++b) {
            if (b == a) continue;
            d.emplace_back(great_circle_km(out.hotspots[static_cast<std::size_t>(a)].location,
                                           out.hotspots[static_cast<std::size_t>(b)].location),
                           b);
        }
        std::sort(d.begin(), d.end());
        int n_keep = std::min<int>(spec.walk_neighbors, static_cast<int>(d.size()));
        for (int i = 0; i < n_keep; ++i) {
            nearest[static_cast<std::size_t>(a)].push_back(d[static_cast<std::size_t>(i)].second);
        }
    }

    std::vector<long long> quota(static_cast<std::size_t>(spec.n_hotspots),
                                 spec.photos_per_hotspot);
    long long remaining =
        static_cast<long long>(spec.n_hotspots) * spec.photos_per_hotspot;
    auto has_quota = [&](int h) { return quota[static_cast<std::size_t>(h)] > 0; };
    auto any_with_quota = [&]() {
        // deterministic scan from a random start
        int start = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_hotspots)));
        for (int i = 0; i < spec.n_hotspots; ++i) {
            int h = (start + i) % spec.n_hotspots;
            if (has_quota(h)) return h;
        }
        return -1;
    };

    long long photo_counter = 0;
    int album_counter = 0;
    while (remaining > 0) {
        int len = rng.uniform_int(spec.album_len_min, spec.album_len_max);
        if (len > remaining) len = static_cast<int>(remaining);
        int current = any_with_quota();
        char album_name[24];
        std::snprintf(album_name, sizeof(album_name), "a%05d", album_counter++);
        for (int step = 0; step < len; ++step) {
            if (!has_quota(current) || (step > 0 && rng.uniform() < spec.move_prob)) {
                std::vector<int> cands;
                for (int cand : nearest[static_cast<std::size_t>(current)]) {
                    if (has_quota(cand)) cands.push_back(cand);
                }
                current = cands.empty()
                              ? any_with_quota()
                              : cands[rng.below(cands.size())];
            }
            const Hotspot& hs = out.hotspots[static_cast<std::size_t>(current)];
            PhotoRecord r;
            char id[24];
            std::snprintf(id, sizeof(id), "p%07lld", photo_counter++);
            r.id = id;
            r.geo = GeoPoint{hs.location.lat_deg + rng.normal(0.0, spec.geo_sigma_deg),
                             hs.location.lon_deg + rng.normal(0.0, spec.geo_sigma_deg)}
                        .normalized();
            r.timestamp = step;
            r.album_id = album_name;
            bool is_ambiguous = rng.uniform() < spec.ambiguous_fraction;
            r.features.resize(static_cast<std::size_t>(spec.feature_dim));
            if (is_ambiguous) {
                // no location signal: a cloud around the origin, far from
                // every hotspot mean
                for (double& v : r.features) v = rng.normal(0.0, sigma);
            } else {
                const std::vector<double>* mean = &hs.feature_mean;
                if (spec.n_hotspots > 1 && rng.uniform() < spec.label_noise_fraction) {
                    int other = (current + 1 +
                                 static_cast<int>(rng.below(
                                     static_cast<std::uint64_t>(spec.n_hotspots - 1)))) %
                                spec.n_hotspots;
                    mean = &out.hotspots[static_cast<std::size_t>(other)].feature_mean;
                }
                for (std::size_t i = 0; i < r.features.size(); ++i) {
                    r.features[i] = (*mean)[i] + rng.normal(0.0, spec.noise_sigma);
                }
            }
            out.dataset.records.push_back(std::move(r));
            out.hotspot_of.push_back(current);
            out.ambiguous.push_back(is_ambiguous);
            --quota[static_cast<std::size_t>(current)];
            --remaining;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// labeling

LabeledDataset filter_covered(const Dataset& ds, const Partition& part) {
    LabeledDataset out;
    for (const PhotoRecord& r : ds.records) {
        if (auto cls = part.class_of(r.geo)) {
            out.data.records.push_back(r);
            out.labels.push_back(*cls);
        }
    }
    return out;
}

}  // namespace geocell

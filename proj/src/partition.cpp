#include "geocell/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "geocell/errors.hpp"
#include "geocell/rng.hpp"

namespace geocell {

void PartitionParams::validate() const {
    if (t2 <= 0 || t1 <= 0 || t2 > t1) {
        throw InvalidArgument("partition params require 0 < t2 <= t1");
    }
    if (max_level < 0 || max_level > CellId::kMaxLevel) {
        throw InvalidArgument("partition max_level out of [0, 30]");
    }
}

// ---------------------------------------------------------------------------
// builder

namespace {

// A point with its quad-tree indices precomputed down to max_level, so the
// descent needs no re-projection.
struct BuildPoint {
    std::uint64_t i = 0;
    std::uint64_t j = 0;

    // child digit for the step from `level` to level+1
    int digit(int level, int max_level) const {
        int bit = max_level - 1 - level;
        return static_cast<int>((((j >> bit) & 1u) << 1) | ((i >> bit) & 1u));
    }
};

}  // namespace

struct PartitionBuilder::Node {
    long long count = 0;
    bool split = false;
    std::vector<BuildPoint> buffer;  // only while unsplit
    std::unique_ptr<Node> kids[4];
};

PartitionBuilder::PartitionBuilder(PartitionParams params) : params_(params) {
    params_.validate();
    for (auto& r : roots_) r = std::make_unique<Node>();
}

PartitionBuilder::~PartitionBuilder() = default;
PartitionBuilder::PartitionBuilder(PartitionBuilder&&) noexcept = default;
PartitionBuilder& PartitionBuilder::operator=(PartitionBuilder&&) noexcept = default;

namespace {

// Inserts p into the subtree rooted at node (sitting at `level`). When a
// node's count passes t1 it splits and its buffered points are re-inserted
// one level down, cascading as far as needed.
void insert_point(PartitionBuilder::Node* node, int level, const BuildPoint& p,
                  const PartitionParams& params) {
    ++node->count;
    if (node->split) {
        int d = p.digit(level, params.max_level);
        if (!node->kids[d]) node->kids[d] = std::make_unique<PartitionBuilder::Node>();
        insert_point(node->kids[d].get(), level + 1, p, params);
        return;
    }
    if (level >= params.max_level) return;  // capped leaf, count only
    node->buffer.push_back(p);
    if (node->count > params.t1) {
        node->split = true;
        std::vector<BuildPoint> pts;
        pts.swap(node->buffer);
        for (const BuildPoint& q : pts) {
            int d = q.digit(level, params.max_level);
            if (!node->kids[d]) node->kids[d] = std::make_unique<PartitionBuilder::Node>();
            insert_point(node->kids[d].get(), level + 1, q, params);
        }
    }
}

void collect_leaves(const PartitionBuilder::Node* node, CellId cell, long long t2,
                    std::vector<std::pair<CellId, long long>>& out) {
    if (!node) return;
    if (node->split) {
        for (int d = 0; d < 4; ++d) {
            if (node->kids[d]) collect_leaves(node->kids[d].get(), cell.child(d), t2, out);
        }
        return;
    }
    if (node->count >= t2) out.emplace_back(cell, node->count);
}

}  // namespace

void PartitionBuilder::add(const GeoPoint& p) {
    GeoPoint q = p.normalized();
    if (!std::isfinite(q.lat_deg) || !std::isfinite(q.lon_deg)) {
        throw InvalidCoordinate("partition: non-finite point");
    }
    ++n_points_;
    CellId deep = CellId::from_point(q, params_.max_level);
    BuildPoint bp;
    for (int l = 0; l < params_.max_level; ++l) {
        int d = deep.digit(l);
        bp.i = (bp.i << 1) | static_cast<std::uint64_t>(d & 1);
        bp.j = (bp.j << 1) | static_cast<std::uint64_t>((d >> 1) & 1);
    }
    insert_point(roots_[deep.face()].get(), 0, bp, params_);
}

Partition PartitionBuilder::finish() {
    if (n_points_ == 0) throw EmptyDataset("partition: empty dataset");
    std::vector<std::pair<CellId, long long>> leaves;
    for (int f = 0; f < 6; ++f) {
        collect_leaves(roots_[f].get(), CellId::face_root(f), params_.t2, leaves);
    }
    if (leaves.empty()) {
        throw DegeneratePartition("partition: every cell fell below t2");
    }
    std::sort(leaves.begin(), leaves.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<CellId> cells;
    std::vector<long long> counts;
    cells.reserve(leaves.size());
    counts.reserve(leaves.size());
    for (auto& [c, n] : leaves) {
        cells.push_back(c);
        counts.push_back(n);
    }
    return Partition(params_, std::move(cells), std::move(counts));
}

Partition build_partition(const std::vector<GeoPoint>& points, const PartitionParams& params) {
    PartitionBuilder b(params);
    for (const GeoPoint& p : points) b.add(p);
    return b.finish();
}

// ---------------------------------------------------------------------------
// frozen partition

Partition::Partition(PartitionParams params, std::vector<CellId> cells,
                     std::vector<long long> counts)
    : params_(params), cells_(std::move(cells)), counts_(std::move(counts)) {
    params_.validate();
    if (cells_.empty()) throw DegeneratePartition("partition: no cells");
    if (cells_.size() != counts_.size()) {
        throw InvalidArgument("partition: cells/counts size mismatch");
    }
    if (!std::is_sorted(cells_.begin(), cells_.end())) {
        throw InvalidArgument("partition: cells not sorted by token");
    }
    index_.reserve(cells_.size());
    std::vector<bool> level_seen(CellId::kMaxLevel + 1, false);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const CellId& c = cells_[i];
        if (c.level() > params_.max_level) {
            throw InvalidArgument("partition: cell deeper than max_level");
        }
        if (counts_[i] < params_.t2) {
            throw InvalidArgument("partition: kept cell under t2 (" + c.token() + ")");
        }
        if (counts_[i] > params_.t1 && c.level() != params_.max_level) {
            throw InvalidArgument("partition: non-max-level cell over t1 (" + c.token() + ")");
        }
        if (i + 1 < cells_.size() && cells_[i].is_ancestor_of(cells_[i + 1])) {
            // sorted order puts a descendant right after its ancestor
            throw InvalidArgument("partition: cell list is not an anti-chain");
        }
        if (!index_.emplace(c.packed(), static_cast<int>(i)).second) {
            throw InvalidArgument("partition: duplicate cell " + c.token());
        }
        level_seen[static_cast<std::size_t>(c.level())] = true;
    }
    for (int l = 0; l <= CellId::kMaxLevel; ++l) {
        if (level_seen[static_cast<std::size_t>(l)]) levels_present_.push_back(l);
    }
    std::string blob = std::to_string(params_.t1) + "|" + std::to_string(params_.t2) + "|" +
                       std::to_string(params_.max_level);
    for (const CellId& c : cells_) {
        blob += '|';
        blob += c.token();
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(blob)));
    version_tag_ = buf;
}

std::optional<int> Partition::class_of(const GeoPoint& p) const {
    for (int level : levels_present_) {
        auto it = index_.find(CellId::from_point(p, level).packed());
        if (it != index_.end()) return it->second;
    }
    return std::nullopt;
}

std::string Partition::to_json_string() const {
    nlohmann::json j;
    j["version"] = 1;
    j["params"] = {{"t1", params_.t1}, {"t2", params_.t2}, {"max_level", params_.max_level}};
    auto cells = nlohmann::json::array();
    for (const CellId& c : cells_) cells.push_back(c.token());
    j["cells"] = std::move(cells);
    j["counts"] = counts_;
    return j.dump(2) + "\n";
}

Partition Partition::from_json_string(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != 1) {
            throw ParseError("partition file: unsupported version");
        }
        PartitionParams params;
        params.t1 = j.at("params").at("t1").get<long long>();
        params.t2 = j.at("params").at("t2").get<long long>();
        params.max_level = j.at("params").at("max_level").get<int>();
        std::vector<CellId> cells;
        for (const auto& t : j.at("cells")) {
            cells.push_back(CellId::from_token(t.get<std::string>()));
        }
        std::vector<long long> counts = j.at("counts").get<std::vector<long long>>();
        return Partition(params, std::move(cells), std::move(counts));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("partition file: ") + e.what());
    }
}

void Partition::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << to_json_string();
    if (!f) throw DataError("write failed: " + path);
}

Partition Partition::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_json_string(ss.str());
}

}  // namespace geocell

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geocell/cell.hpp"
#include "geocell/geo.hpp"

namespace geocell {

struct PartitionParams {
    long long t1 = 10000;  // max photos per cell before it is subdivided
    long long t2 = 50;     // min photos for a cell to be kept
    int max_level = CellId::kMaxLevel;

    void validate() const;  // throws InvalidArgument
};

// The frozen class space: an anti-chain of leaf cells, sorted by token, with
// the photo counts observed while building. Class index = position in the
// cell list.
class Partition {
  public:
    Partition(PartitionParams params, std::vector<CellId> cells, std::vector<long long> counts);

    std::size_t size() const { return cells_.size(); }
    const std::vector<CellId>& cells() const { return cells_; }
    const CellId& cell(std::size_t index) const { return cells_[index]; }
    const std::vector<long long>& counts() const { return counts_; }
    const PartitionParams& params() const { return params_; }

    // Class index of the unique kept cell containing p, or nullopt when p
    // falls only in discarded territory.
    std::optional<int> class_of(const GeoPoint& p) const;

    // Content fingerprint over params + cell list. Model checkpoints carry it
    // and refuse to run against a partition with a different tag.
    const std::string& version_tag() const { return version_tag_; }

    std::string to_json_string() const;
    static Partition from_json_string(const std::string& text);  // validates, throws ParseError
    void save(const std::string& path) const;
    static Partition load(const std::string& path);

  private:
    PartitionParams params_;
    std::vector<CellId> cells_;
    std::vector<long long> counts_;
    std::unordered_map<std::uint64_t, int> index_;  // packed cell id -> class
    std::vector<int> levels_present_;
    std::string version_tag_;
};

// Streaming builder: count points into a dynamic quad-tree (cells split as
// soon as their count exceeds t1, points buffered until then), then discard
// leaves under t2 in a single pass. Memory is O(points buffered + cells).
class PartitionBuilder {
  public:
    struct Node;

    explicit PartitionBuilder(PartitionParams params);
    ~PartitionBuilder();
    PartitionBuilder(PartitionBuilder&&) noexcept;
    PartitionBuilder& operator=(PartitionBuilder&&) noexcept;

    void add(const GeoPoint& p);

    // Throws EmptyDataset when no point was added, DegeneratePartition when
    // every leaf fell under t2.
    Partition finish();

  private:
    PartitionParams params_;
    std::unique_ptr<Node> roots_[6];
    long long n_points_ = 0;
};

// Convenience one-shot build.
Partition build_partition(const std::vector<GeoPoint>& points, const PartitionParams& params);

}  // namespace geocell

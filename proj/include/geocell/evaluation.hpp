#pragma once

#include <map>
#include <string>
#include <vector>

#include "geocell/classifier.hpp"
#include "geocell/dataset.hpp"
#include "geocell/partition.hpp"

namespace geocell {

// The five standard radii. "Within" is inclusive, so an error of exactly
// 25 km counts as city-level.
struct ThresholdSet {
    std::vector<std::pair<std::string, double>> radii_km = {
        {"street", 1.0}, {"city", 25.0}, {"region", 200.0},
        {"country", 750.0}, {"continent", 2500.0}};

    void validate() const;  // names unique, radii strictly increasing
};

// Distance from the predicted cell's center to the true location. By
// construction this is pessimistic: even when the truth lies inside the
// predicted cell the error can be large for a big cell.
double localization_error_km(int predicted_class, const GeoPoint& truth,
                             const Partition& partition);

// Fraction of errors within each radius (inclusive).
std::vector<double> threshold_accuracy(const std::vector<double>& errors_km,
                                       const ThresholdSet& thresholds);

// curve[k_index][radius_index]: accuracy when the per-photo error is the best
// (minimum) over the k most confident cells.
struct TopkCurve {
    std::vector<int> ks;
    ThresholdSet thresholds;
    std::vector<std::vector<double>> fractions;
    std::size_t n_images = 0;
};

TopkCurve topk_accuracy(const GeoClassifier& model, const Dataset& ds,
                        const Partition& partition, const std::vector<int>& ks,
                        const ThresholdSet& thresholds);

// Same protocol over precomputed distributions paired with ground truths
// (used for sequence models and baselines).
TopkCurve topk_accuracy_from_dists(const std::vector<CellDistribution>& dists,
                                   const std::vector<GeoPoint>& truths,
                                   const Partition& partition, const std::vector<int>& ks,
                                   const ThresholdSet& thresholds);

// Median error per group label; even-sized groups average the two middle
// values. Throws InvalidArgument unless labels cover all items 1:1.
std::map<std::string, double> median_error_by_group(const std::vector<double>& errors_km,
                                                    const std::vector<std::string>& groups);

// Mean average precision of distance-ranked retrieval: corpus sorted by
// ascending Euclidean distance to the query embedding, ties broken by
// ascending corpus id. relevant[q] holds corpus indices; every query needs at
// least one (ConfigError otherwise).
double retrieval_map(const std::vector<Eigen::VectorXd>& query_embeddings,
                     const std::vector<Eigen::VectorXd>& corpus_embeddings,
                     const std::vector<std::vector<int>>& relevant,
                     const std::vector<std::string>* corpus_ids = nullptr);

struct EvalReport {
    TopkCurve curve;
    std::map<std::string, double> group_medians;
    std::string config_echo;  // JSON blob describing the run

    // monotone in k and in radius; fractions in [0, 1]
    void validate() const;
    std::string to_json_string() const;
    std::string to_csv_string() const;  // columns: k,radius_km,name,fraction
};

}  // namespace geocell

#include "geocell/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "geocell/errors.hpp"

namespace geocell {

void ThresholdSet::validate() const {
    if (radii_km.empty()) throw InvalidArgument("thresholds: empty");
    std::set<std::string> names;
    for (std::size_t i = 0; i < radii_km.size(); ++i) {
        if (!names.insert(radii_km[i].first).second) {
            throw InvalidArgument("thresholds: duplicate name " + radii_km[i].first);
        }
        if (radii_km[i].second <= 0.0 ||
            (i > 0 && radii_km[i].second <= radii_km[i - 1].second)) {
            throw InvalidArgument("thresholds: radii must be positive and strictly increasing");
        }
    }
}

double localization_error_km(int predicted_class, const GeoPoint& truth,
                             const Partition& partition) {
    if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= partition.size()) {
        throw InvalidArgument("localization_error: class out of range");
    }
    return great_circle_km(partition.cell(static_cast<std::size_t>(predicted_class)).center(),
                           truth);
}

std::vector<double> threshold_accuracy(const std::vector<double>& errors_km,
                                       const ThresholdSet& thresholds) {
    thresholds.validate();
    std::vector<double> fractions(thresholds.radii_km.size(), 0.0);
    if (errors_km.empty()) return fractions;
    for (std::size_t t = 0; t < thresholds.radii_km.size(); ++t) {
        std::size_t hits = 0;
        for (double e : errors_km) {
            if (e <= thresholds.radii_km[t].second) ++hits;
        }
        fractions[t] = static_cast<double>(hits) / static_cast<double>(errors_km.size());
    }
    return fractions;
}

namespace {

TopkCurve curve_from_errors(const std::vector<std::vector<double>>& errors_per_k,
                            const std::vector<int>& ks, const ThresholdSet& thresholds,
                            std::size_t n_images) {
    TopkCurve curve;
    curve.ks = ks;
    curve.thresholds = thresholds;
    curve.n_images = n_images;
    for (const auto& errs : errors_per_k) {
        curve.fractions.push_back(threshold_accuracy(errs, thresholds));
    }
    return curve;
}

}  // namespace

TopkCurve topk_accuracy_from_dists(const std::vector<CellDistribution>& dists,
                                   const std::vector<GeoPoint>& truths,
                                   const Partition& partition, const std::vector<int>& ks,
                                   const ThresholdSet& thresholds) {
    if (dists.size() != truths.size()) {
        throw InvalidArgument("topk: one truth per distribution required");
    }
    if (ks.empty()) throw InvalidArgument("topk: no k values");
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (ks[i] <= ks[i - 1]) throw InvalidArgument("topk: ks must be strictly increasing");
    }
    int max_k = ks.back();
    if (max_k < 1 || max_k > static_cast<int>(partition.size())) {
        throw InvalidArgument("topk: k out of range");
    }
    // per image: best error over the j most confident cells, for j = 1..max_k
    std::vector<std::vector<double>> errors_per_k(ks.size());
    for (std::size_t i = 0; i < dists.size(); ++i) {
        auto ranked = top_k(dists[i], max_k);
        double best = std::numeric_limits<double>::infinity();
        std::size_t ki = 0;
        for (int j = 0; j < max_k; ++j) {
            best = std::min(best, localization_error_km(ranked[static_cast<std::size_t>(j)].first,
                                                        truths[i], partition));
            while (ki < ks.size() && ks[ki] == j + 1) {
                errors_per_k[ki].push_back(best);
                ++ki;
            }
        }
    }
    return curve_from_errors(errors_per_k, ks, thresholds, dists.size());
}

TopkCurve topk_accuracy(const GeoClassifier& model, const Dataset& ds,
                        const Partition& partition, const std::vector<int>& ks,
                        const ThresholdSet& thresholds) {
    std::vector<CellDistribution> dists;
    std::vector<GeoPoint> truths;
    dists.reserve(ds.size());
    for (const PhotoRecord& r : ds.records) {
        dists.push_back(model.predict(feature_vector(r)));
        truths.push_back(r.geo);
    }
    return topk_accuracy_from_dists(dists, truths, partition, ks, thresholds);
}

std::map<std::string, double> median_error_by_group(const std::vector<double>& errors_km,
                                                    const std::vector<std::string>& groups) {
    if (errors_km.size() != groups.size()) {
        throw InvalidArgument("median_by_group: labels must cover all items");
    }
    std::map<std::string, std::vector<double>> buckets;
    for (std::size_t i = 0; i < errors_km.size(); ++i) {
        buckets[groups[i]].push_back(errors_km[i]);
    }
    std::map<std::string, double> medians;
    for (auto& [name, v] : buckets) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        medians[name] = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return medians;
}

double retrieval_map(const std::vector<Eigen::VectorXd>& query_embeddings,
                     const std::vector<Eigen::VectorXd>& corpus_embeddings,
                     const std::vector<std::vector<int>>& relevant,
                     const std::vector<std::string>* corpus_ids) {
    if (query_embeddings.empty() || corpus_embeddings.empty()) {
        throw InvalidArgument("retrieval_map: empty query or corpus");
    }
    if (relevant.size() != query_embeddings.size()) {
        throw InvalidArgument("retrieval_map: one relevance set per query required");
    }
    if (corpus_ids && corpus_ids->size() != corpus_embeddings.size()) {
        throw InvalidArgument("retrieval_map: one id per corpus item required");
    }
    Eigen::Index dim = query_embeddings[0].size();
    for (const auto& e : corpus_embeddings) {
        if (e.size() != dim) throw InvalidArgument("retrieval_map: embedding dim mismatch");
    }
    int n = static_cast<int>(corpus_embeddings.size());
    double sum_ap = 0.0;
    for (std::size_t q = 0; q < query_embeddings.size(); ++q) {
        if (query_embeddings[q].size() != dim) {
            throw InvalidArgument("retrieval_map: embedding dim mismatch");
        }
        if (relevant[q].empty()) {
            throw ConfigError("retrieval_map: query " + std::to_string(q) +
                              " has an empty relevance set");
        }
        std::vector<std::pair<double, int>> ranked;
        ranked.reserve(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) {
            double d = (corpus_embeddings[static_cast<std::size_t>(c)] - query_embeddings[q]).norm();
            ranked.emplace_back(d, c);
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            if (corpus_ids) {
                return (*corpus_ids)[static_cast<std::size_t>(a.second)] <
                       (*corpus_ids)[static_cast<std::size_t>(b.second)];
            }
            return a.second < b.second;
        });
        std::set<int> rel(relevant[q].begin(), relevant[q].end());
        double ap = 0.0;
        int found = 0;
        for (int rank = 0; rank < n; ++rank) {
            if (rel.count(ranked[static_cast<std::size_t>(rank)].second)) {
                ++found;
                ap += static_cast<double>(found) / static_cast<double>(rank + 1);
            }
        }
        sum_ap += ap / static_cast<double>(rel.size());
    }
    return sum_ap / static_cast<double>(query_embeddings.size());
}

// ---------------------------------------------------------------------------
// reports

void EvalReport::validate() const {
    for (std::size_t k = 0; k < curve.fractions.size(); ++k) {
        const auto& row = curve.fractions[k];
        for (std::size_t t = 0; t < row.size(); ++t) {
            if (row[t] < 0.0 || row[t] > 1.0) throw NumericError("report: fraction out of [0,1]");
            if (t > 0 && row[t] < row[t - 1] - 1e-12) {
                throw NumericError("report: accuracy not monotone in radius");
            }
            if (k > 0 && row[t] < curve.fractions[k - 1][t] - 1e-12) {
                throw NumericError("report: accuracy not monotone in k");
            }
        }
    }
}

std::string EvalReport::to_json_string() const {
    nlohmann::json j;
    j["n_images"] = curve.n_images;
    if (!config_echo.empty()) j["config"] = nlohmann::json::parse(config_echo);
    auto radii = nlohmann::json::array();
    for (const auto& [name, km] : curve.thresholds.radii_km) {
        radii.push_back({{"name", name}, {"km", km}});
    }
    j["thresholds"] = std::move(radii);
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < curve.ks.size(); ++k) {
        nlohmann::json row;
        row["k"] = curve.ks[k];
        for (std::size_t t = 0; t < curve.thresholds.radii_km.size(); ++t) {
            row[curve.thresholds.radii_km[t].first] = curve.fractions[k][t];
        }
        rows.push_back(std::move(row));
    }
    j["topk_accuracy"] = std::move(rows);
    if (!group_medians.empty()) {
        nlohmann::json gm;
        for (const auto& [name, med] : group_medians) gm[name] = med;
        j["median_error_km_by_group"] = std::move(gm);
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::to_csv_string() const {
    std::ostringstream out;
    out << "k,radius_km,name,fraction\n";
    char buf[64];
    for (std::size_t k = 0; k < curve.ks.size(); ++k) {
        for (std::size_t t = 0; t < curve.thresholds.radii_km.size(); ++t) {
            std::snprintf(buf, sizeof(buf), "%d,%g,%s,%.6f", curve.ks[k],
                          curve.thresholds.radii_km[t].second,
                          curve.thresholds.radii_km[t].first.c_str(), curve.fractions[k][t]);
            out << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace geocell

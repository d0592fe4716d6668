#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "geocell/cell.hpp"

namespace geocell::oracles {

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    const double R = 6371.0;
    const double pi = 3.14159265358979323846;
    double lat1 = a.lat_deg * pi / 180.0;
    double lat2 = b.lat_deg * pi / 180.0;
    double dlat = (b.lat_deg - a.lat_deg) * pi / 180.0;
    double dlon = (b.lon_deg - a.lon_deg) * pi / 180.0;
    double s1 = std::sin(dlat / 2.0);
    double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    if (h > 1.0) h = 1.0;
    if (h < 0.0) h = 0.0;
    return 2.0 * R * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

void latlon_to_xyz(double lat_deg, double lon_deg, double& x, double& y, double& z) {
    const double pi = 3.14159265358979323846;
    double phi = lat_deg * pi / 180.0;    // polar angle from the equator
    double lambda = lon_deg * pi / 180.0;
    x = std::cos(phi) * std::cos(lambda);
    y = std::cos(phi) * std::sin(lambda);
    z = std::sin(phi);
}

std::vector<std::string> brute_partition_tokens(const std::vector<GeoPoint>& points,
                                                const PartitionParams& params) {
    std::vector<std::string> tokens;
    std::function<void(CellId, const std::vector<GeoPoint>&)> recurse =
        [&](CellId cell, const std::vector<GeoPoint>& pts) {
            if (static_cast<long long>(pts.size()) > params.t1 &&
                cell.level() < params.max_level) {
                for (int d = 0; d < 4; ++d) {
                    CellId child = cell.child(d);
                    std::vector<GeoPoint> sub;
                    for (const GeoPoint& p : pts) {
                        if (child.contains(p)) sub.push_back(p);
                    }
                    if (!sub.empty()) recurse(child, sub);
                }
                return;
            }
            if (static_cast<long long>(pts.size()) >= params.t2) tokens.push_back(cell.token());
        };
    for (int f = 0; f < 6; ++f) {
        CellId root = CellId::face_root(f);
        std::vector<GeoPoint> pts;
        for (const GeoPoint& p : points) {
            if (root.contains(p.normalized())) pts.push_back(p.normalized());
        }
        if (!pts.empty()) recurse(root, pts);
    }
    std::sort(tokens.begin(), tokens.end());
    return tokens;
}

double average_precision(const std::vector<bool>& ranked_relevance) {
    int found = 0;
    double ap = 0.0;
    int total = 0;
    for (bool r : ranked_relevance) total += r;
    for (std::size_t i = 0; i < ranked_relevance.size(); ++i) {
        if (ranked_relevance[i]) {
            ++found;
            ap += static_cast<double>(found) / static_cast<double>(i + 1);
        }
    }
    return total ? ap / total : 0.0;
}

double logistic_regression_accuracy(const std::vector<std::vector<double>>& train_x,
                                    const std::vector<int>& train_y,
                                    const std::vector<std::vector<double>>& eval_x,
                                    const std::vector<int>& eval_y, int epochs,
                                    double learning_rate) {
    std::size_t dim = train_x[0].size();
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    for (int e = 0; e < epochs; ++e) {
        std::vector<double> gw(dim, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < train_x.size(); ++i) {
            double z = b;
            for (std::size_t j = 0; j < dim; ++j) z += w[j] * train_x[i][j];
            double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            double err = p - train_y[i];
            for (std::size_t j = 0; j < dim; ++j) gw[j] += err * train_x[i][j];
            gb += err;
        }
        for (std::size_t j = 0; j < dim; ++j) w[j] -= learning_rate * gw[j] / train_x.size();
        b -= learning_rate * gb / train_x.size();
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < eval_x.size(); ++i) {
        double z = b;
        for (std::size_t j = 0; j < dim; ++j) z += w[j] * eval_x[i][j];
        hits += ((z >= 0.0) ? 1 : 0) == eval_y[i];
    }
    return static_cast<double>(hits) / static_cast<double>(eval_x.size());
}

}  // namespace geocell::oracles

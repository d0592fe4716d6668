// Acceptance suite: one line per criterion, nonzero exit if any enabled
// criterion fails.
//
// Usage: geocell_acceptance <path-to-geocell-cli> [criterion-number]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "geocell/cell.hpp"
#include "geocell/classifier.hpp"
#include "geocell/dataset.hpp"
#include "geocell/evaluation.hpp"
#include "geocell/geo.hpp"
#include "geocell/partition.hpp"
#include "geocell/pipeline.hpp"
#include "geocell/rng.hpp"
#include "geocell/sequence.hpp"
#include "../oracles.hpp"

using namespace geocell;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

GeoPoint random_point(Rng& rng) {
    return {rad2deg(std::asin(rng.uniform(-1.0, 1.0))), rng.uniform(-180.0, 180.0)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void walk_level(int level, const std::function<void(const CellId&)>& fn) {
    std::function<void(CellId, int)> rec = [&](CellId c, int depth) {
        if (depth == level) {
            fn(c);
            return;
        }
        for (int d = 0; d < 4; ++d) rec(c.child(d), depth + 1);
    };
    for (int f = 0; f < 6; ++f) rec(CellId::face_root(f), 0);
}

// ---------------------------------------------------------------------------
// 1. level-6 area-ratio constant

bool criterion_area_ratio(std::string& detail) {
    double mn = 1e300, mx = 0.0;
    std::size_t count = 0;
    walk_level(6, [&](const CellId& c) {
        double a = c.area_steradians();
        mn = std::min(mn, a);
        mx = std::max(mx, a);
        ++count;
    });
    double ratio = mx / mn;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max/min over %zu level-6 cells = %.4f, expected 2.08±0.02",
                  count, ratio);
    detail = buf;
    return count == 24576 && std::fabs(ratio - 2.08) <= 0.02;
}

// ---------------------------------------------------------------------------
// 2. partition equals the brute-force reference on three corpora

std::vector<GeoPoint> corpus_hotspots(int n, int n_hotspots, double spread_deg,
                                      double background, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GeoPoint> centers;
    for (int h = 0; h < n_hotspots; ++h) centers.push_back(random_point(rng));
    std::vector<GeoPoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (rng.uniform() < background) {
            pts.push_back(random_point(rng));
        } else {
            const GeoPoint& c = centers[rng.below(centers.size())];
            pts.push_back(GeoPoint{c.lat_deg + rng.normal(0.0, spread_deg),
                                   c.lon_deg + rng.normal(0.0, spread_deg)}
                              .normalized());
        }
    }
    return pts;
}

std::vector<GeoPoint> corpus_edges(int n, std::uint64_t seed) {
    // stresses face edges, corners, the dateline and both poles
    Rng rng(seed);
    std::vector<GeoPoint> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        switch (rng.below(5)) {
            case 0: pts.push_back({rng.normal(89.9, 0.2), rng.uniform(-180.0, 180.0)}); break;
            case 1: pts.push_back({rng.normal(-89.9, 0.2), rng.uniform(-180.0, 180.0)}); break;
            case 2: pts.push_back({rng.uniform(-60.0, 60.0), rng.normal(180.0, 0.3)}); break;
            case 3: pts.push_back({rng.normal(45.0, 0.3), rng.normal(45.0, 0.3)}); break;
            default: pts.push_back({rng.uniform(-45.0, 45.0), rng.normal(0.0, 0.3)}); break;
        }
        pts.back() = pts.back().normalized();
    }
    return pts;
}

bool criterion_partition_oracle(std::string& detail) {
    struct Case {
        std::vector<GeoPoint> points;
        PartitionParams params;
    };
    std::vector<Case> cases;
    cases.push_back({corpus_hotspots(100000, 3, 0.3, 0.0, 9001), {500, 20, 14}});
    cases.push_back({corpus_hotspots(100000, 10, 1.0, 0.1, 9002), {800, 30, 12}});
    cases.push_back({corpus_edges(100000, 9003), {300, 10, 10}});
    std::size_t total_cells = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        Partition part = build_partition(cases[i].points, cases[i].params);
        std::vector<std::string> got;
        for (const CellId& c : part.cells()) got.push_back(c.token());
        std::vector<std::string> expected =
            oracles::brute_partition_tokens(cases[i].points, cases[i].params);
        if (got != expected) {
            detail = "corpus " + std::to_string(i + 1) + ": token lists differ (" +
                     std::to_string(got.size()) + " vs " + std::to_string(expected.size()) + ")";
            return false;
        }
        total_cells += got.size();
    }
    detail = "3 corpora x 100k points, token sets byte-identical (" +
             std::to_string(total_cells) + " cells total)";
    return true;
}

// ---------------------------------------------------------------------------
// 3. geometry property suite

bool criterion_geometry_properties(std::string& detail) {
    // coverage: areas at levels 0..4 sum to the sphere
    for (int level = 0; level <= 4; ++level) {
        double sum = 0.0;
        walk_level(level, [&](const CellId& c) { sum += c.area_steradians(); });
        if (std::fabs(sum - 4.0 * kPi) / (4.0 * kPi) > 1e-6) {
            detail = "tiling: level " + std::to_string(level) + " areas do not sum to 4*pi";
            return false;
        }
    }
    Rng rng(424242);
    // disjointness: every point falls in exactly one sibling at every split
    for (int i = 0; i < 20000; ++i) {
        GeoPoint p = random_point(rng);
        CellId cell = CellId::from_point(p, 8);
        if (!cell.contains(p)) {
            detail = "containment: from_point cell does not contain its point";
            return false;
        }
        CellId parent = cell.parent();
        int containing = 0;
        for (int d = 0; d < 4; ++d) containing += parent.child(d).contains(p);
        if (containing != 1) {
            detail = "disjointness: point contained by " + std::to_string(containing) +
                     " siblings";
            return false;
        }
    }
    // ancestor consistency along the whole level chain
    for (int i = 0; i < 5000; ++i) {
        GeoPoint p = random_point(rng);
        CellId prev = CellId::from_point(p, 0);
        for (int level = 1; level <= 12; ++level) {
            CellId cur = CellId::from_point(p, level);
            if (cur.parent() != prev) {
                detail = "hierarchy: level " + std::to_string(level) +
                         " cell is not a child of the coarser cell";
                return false;
            }
            prev = cur;
        }
    }
    // token round-trip on 100k random cells
    for (int i = 0; i < 100000; ++i) {
        int level = static_cast<int>(rng.below(CellId::kMaxLevel + 1));
        CellId c = CellId::face_root(static_cast<int>(rng.below(6)));
        for (int l = 0; l < level; ++l) c = c.child(static_cast<int>(rng.below(4)));
        if (CellId::from_token(c.token()) != c) {
            detail = "token round-trip failed for " + c.token();
            return false;
        }
    }
    // great-circle distance against the haversine oracle
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        GeoPoint a = random_point(rng), b = random_point(rng);
        double lib = great_circle_km(a, b);
        double ref = oracles::haversine_km(a, b);
        if (ref > 1.0) worst = std::max(worst, std::fabs(lib - ref) / ref);
    }
    if (worst >= 1e-4) {
        detail = "distance: worst relative error vs haversine oracle " + std::to_string(worst);
        return false;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "tiling/disjointness/hierarchy ok, 100k token round-trips, distance vs "
                  "oracle worst rel err %.2e",
                  worst);
    detail = buf;
    return true;
}

// ---------------------------------------------------------------------------
// 4. gradient checks

template <typename LossFn>
double max_fd_error(const std::vector<Eigen::MatrixXd*>& params,
                    const std::vector<Eigen::MatrixXd>& analytic, LossFn loss) {
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (Eigen::Index r = 0; r < params[p]->rows(); ++r) {
            for (Eigen::Index c = 0; c < params[p]->cols(); ++c) {
                double saved = (*params[p])(r, c);
                (*params[p])(r, c) = saved + h;
                double lp = loss();
                (*params[p])(r, c) = saved - h;
                double lm = loss();
                (*params[p])(r, c) = saved;
                double numeric = (lp - lm) / (2.0 * h);
                double a = analytic[p](r, c);
                worst = std::max(worst, std::fabs(numeric - a) /
                                            std::max(1e-6, std::fabs(numeric) + std::fabs(a)));
            }
        }
    }
    return worst;
}

bool criterion_gradients(std::string& detail) {
    // MLP head: D=5, hidden [7], 4 classes, batch 3
    ModelConfig mcfg;
    mcfg.input_dim = 5;
    mcfg.hidden_dims = {7};
    mcfg.n_classes = 4;
    mcfg.seed = 31337;
    GeoClassifier model(mcfg);
    Rng rng(515);
    Eigen::MatrixXd X(3, 5);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 5; ++j) X(i, j) = rng.normal();
    }
    std::vector<int> y = {0, 2, 3};
    std::vector<Eigen::MatrixXd> grads;
    model.loss_and_gradients(X, y, grads);
    std::vector<Eigen::MatrixXd> scratch;
    double mlp_err = max_fd_error(model.parameters(), grads, [&] {
        return model.loss_and_gradients(X, y, scratch);
    });

    // LSTM unrolled over 3 steps
    SequenceModelConfig scfg;
    scfg.hidden_dim = 3;
    scfg.seed = 929;
    SequenceModel seq(scfg, 2, 3);
    Eigen::MatrixXd emb(3, 2);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) emb(i, j) = rng.normal();
    }
    std::vector<int> labels = {2, 0, 1};
    std::vector<Eigen::MatrixXd> seq_grads;
    chunk_loss_and_gradients(seq, emb, labels, seq_grads);
    double lstm_err = max_fd_error(seq.parameters(), seq_grads, [&] {
        return chunk_loss_and_gradients(seq, emb, labels, scratch);
    });

    char buf[160];
    std::snprintf(buf, sizeof(buf), "max rel err vs central differences: mlp %.2e, lstm %.2e "
                  "(tolerance 1e-4)",
                  mlp_err, lstm_err);
    detail = buf;
    return mlp_err < 1e-4 && lstm_err < 1e-4;
}

// ---------------------------------------------------------------------------
// 5. single-image learning sanity

bool criterion_learning_sanity(std::string& detail) {
    SyntheticSpec spec;
    spec.n_hotspots = 2;
    spec.photos_per_hotspot = 500;
    spec.feature_dim = 16;
    spec.noise_sigma = 1.0;  // means are at least 6 sigma apart by construction
    spec.ambiguous_fraction = 0.0;
    spec.label_noise_fraction = 0.0;
    spec.seed = 606;
    SyntheticData synth = generate_synthetic(spec);
    auto [train_set, val_set] = split(synth.dataset, 0.7, 607);

    std::vector<GeoPoint> pts;
    for (const auto& r : train_set.records) pts.push_back(r.geo);
    Partition part = build_partition(pts, {600, 10, 20});
    LabeledDataset fit = filter_covered(train_set, part);
    LabeledDataset val = filter_covered(val_set, part);
    if (part.size() != 2 || val.data.empty()) {
        detail = "fixture degenerate: " + std::to_string(part.size()) + " classes";
        return false;
    }

    // the fixture is attainable: plain logistic regression reaches 99%
    std::vector<std::vector<double>> tx, vx;
    std::vector<int> ty, vy;
    for (std::size_t i = 0; i < fit.data.size(); ++i) {
        tx.push_back(fit.data.records[i].features);
        ty.push_back(fit.labels[i]);
    }
    for (std::size_t i = 0; i < val.data.size(); ++i) {
        vx.push_back(val.data.records[i].features);
        vy.push_back(val.labels[i]);
    }
    double oracle_acc = oracles::logistic_regression_accuracy(tx, ty, vx, vy, 200, 0.5);

    ModelConfig mcfg;
    mcfg.input_dim = spec.feature_dim;
    mcfg.hidden_dims = {16};
    mcfg.n_classes = static_cast<int>(part.size());
    mcfg.seed = 608;
    TrainConfig tcfg;
    tcfg.epochs = 50;
    tcfg.seed = 609;
    std::vector<EpochStats> log;
    GeoClassifier model = train(fit, val, part, mcfg, tcfg, &log);
    double val_acc = accuracy(model, val);

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "val accuracy %.4f after %zu epochs (logistic oracle %.4f, floor 0.99)",
                  val_acc, log.size(), oracle_acc);
    detail = buf;
    return oracle_acc >= 0.99 && val_acc >= 0.99 && log.size() <= 50;
}

// ---------------------------------------------------------------------------
// 6. album-trend reproduction

bool criterion_trend(std::string& detail) {
    BenchmarkConfig cfg = BenchmarkConfig::defaults();
    std::map<std::string, std::vector<double>> acc;
    for (std::uint64_t seed : {101, 102, 103, 104, 105}) {
        TrendResult r = run_trend_benchmark(
            cfg, seed, {"basic", "offset1", "offset2", "repeated", "blstm"});
        for (const auto& [name, v] : r.street_accuracy) acc[name].push_back(v);
    }
    double single = median(acc.at("single"));
    double average = median(acc.at("average"));
    double basic = median(acc.at("basic"));
    double repeated = median(acc.at("repeated"));
    double blstm = median(acc.at("blstm"));
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "street medians over 5 seeds: single=%.3f avg=%.3f basic=%.3f off1=%.3f "
                  "off2=%.3f rep=%.3f blstm=%.3f",
                  single, average, basic, median(acc.at("offset1")), median(acc.at("offset2")),
                  repeated, blstm);
    detail = buf;
    bool ordering = (average - single >= 0.02) && (basic - average >= 0.02) &&
                    (blstm - repeated >= 0.01);
    return ordering;
}

// ---------------------------------------------------------------------------
// 7. evaluation oracles

bool criterion_evaluation_oracles(std::string& detail) {
    Rng rng(321);
    // small random partition
    std::vector<GeoPoint> pts;
    for (int c = 0; c < 6; ++c) {
        GeoPoint center = random_point(rng);
        for (int i = 0; i < 40; ++i) {
            pts.push_back(GeoPoint{center.lat_deg + rng.normal(0.0, 0.01),
                                   center.lon_deg + rng.normal(0.0, 0.01)}
                              .normalized());
        }
    }
    Partition part = build_partition(pts, {30, 5, 12});
    int n_classes = static_cast<int>(part.size());

    std::vector<CellDistribution> dists;
    std::vector<GeoPoint> truths;
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd logits(n_classes);
        for (int c = 0; c < n_classes; ++c) logits[c] = rng.normal(0.0, 2.0);
        dists.push_back({softmax(logits)});
        truths.push_back(random_point(rng));
    }
    ThresholdSet thresholds;
    std::vector<int> ks = {1, 2, 3, 4, 5};
    TopkCurve curve = topk_accuracy_from_dists(dists, truths, part, ks, thresholds);

    // brute-force recomputation of the whole curve
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        std::vector<double> best_errors;
        for (std::size_t i = 0; i < dists.size(); ++i) {
            std::vector<std::pair<double, int>> order;
            for (int c = 0; c < n_classes; ++c) order.emplace_back(-dists[i].probs[c], c);
            std::sort(order.begin(), order.end());
            double best = 1e300;
            for (int j = 0; j < ks[ki]; ++j) {
                best = std::min(best,
                                oracles::haversine_km(
                                    part.cell(static_cast<std::size_t>(order[static_cast<std::size_t>(j)].second))
                                        .center(),
                                    truths[i]));
            }
            best_errors.push_back(best);
        }
        for (std::size_t t = 0; t < thresholds.radii_km.size(); ++t) {
            int hits = 0;
            for (double e : best_errors) hits += (e <= thresholds.radii_km[t].second);
            double expected = hits / static_cast<double>(dists.size());
            // haversine oracle vs vector distance agree far beyond threshold
            // granularity, so the counted fractions must match exactly
            if (curve.fractions[ki][t] != expected) {
                detail = "top-k accuracy differs from brute force at k=" +
                         std::to_string(ks[ki]);
                return false;
            }
        }
    }
    // nesting property on the generated report
    EvalReport report;
    report.curve = curve;
    report.validate();
    for (std::size_t k = 1; k < curve.fractions.size(); ++k) {
        for (std::size_t t = 0; t < curve.fractions[k].size(); ++t) {
            if (curve.fractions[k][t] < curve.fractions[k - 1][t]) {
                detail = "top-k curves do not nest";
                return false;
            }
        }
    }

    // threshold accuracy vs a counting loop
    std::vector<double> errors;
    for (int i = 0; i < 17; ++i) errors.push_back(rng.uniform(0.0, 4000.0));
    auto fr = threshold_accuracy(errors, thresholds);
    for (std::size_t t = 0; t < thresholds.radii_km.size(); ++t) {
        int hits = 0;
        for (double e : errors) hits += (e <= thresholds.radii_km[t].second);
        if (fr[t] != hits / static_cast<double>(errors.size())) {
            detail = "threshold accuracy differs from the counting loop";
            return false;
        }
    }

    // group medians vs a sort-based oracle
    std::vector<double> errs;
    std::vector<std::string> groups;
    for (int i = 0; i < 19; ++i) {
        errs.push_back(rng.uniform(0.0, 100.0));
        groups.push_back(i % 3 == 0 ? "a" : (i % 3 == 1 ? "b" : "c"));
    }
    auto med = median_error_by_group(errs, groups);
    for (const char* g : {"a", "b", "c"}) {
        std::vector<double> v;
        for (std::size_t i = 0; i < errs.size(); ++i) {
            if (groups[i] == g) v.push_back(errs[i]);
        }
        std::sort(v.begin(), v.end());
        double expected = v.size() % 2 ? v[v.size() / 2]
                                       : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
        if (med.at(g) != expected) {
            detail = "group median differs from the sort oracle";
            return false;
        }
    }

    // retrieval mAP vs the explicit AP oracle
    std::vector<Eigen::VectorXd> corpus;
    std::vector<std::string> ids;
    for (int i = 0; i < 8; ++i) {
        Eigen::VectorXd v(4);
        for (int j = 0; j < 4; ++j) v[j] = rng.normal();
        corpus.push_back(v);
        ids.push_back("c" + std::to_string(i));
    }
    std::vector<Eigen::VectorXd> queries;
    std::vector<std::vector<int>> relevant = {{0, 2}, {5}, {1, 3, 6}};
    for (int q = 0; q < 3; ++q) {
        Eigen::VectorXd v(4);
        for (int j = 0; j < 4; ++j) v[j] = rng.normal();
        queries.push_back(v);
    }
    double got = retrieval_map(queries, corpus, relevant, &ids);
    double sum = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::vector<std::pair<double, int>> ranked;
        for (int c = 0; c < 8; ++c) {
            ranked.emplace_back((corpus[static_cast<std::size_t>(c)] - queries[q]).norm(), c);
        }
        std::sort(ranked.begin(), ranked.end());
        std::vector<bool> rel;
        for (auto& [d, c] : ranked) {
            rel.push_back(std::find(relevant[q].begin(), relevant[q].end(), c) !=
                          relevant[q].end());
        }
        sum += oracles::average_precision(rel);
    }
    if (std::fabs(got - sum / 3.0) > 1e-12) {
        detail = "mAP differs from the brute-force AP oracle";
        return false;
    }

    detail = "top-k, thresholds, medians and mAP all equal brute force; curves nest";
    return true;
}

// ---------------------------------------------------------------------------
// 8. end-to-end determinism

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool criterion_determinism(std::string& detail) {
    if (g_cli_path.empty()) {
        detail = "no CLI path given";
        return false;
    }
    fs::path dir = fs::temp_directory_path() /
                   ("geocell_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto run = [&](const std::string& out) {
        std::string cmd = g_cli_path + " end-to-end --seed 424242 --out " +
                          (dir / out).string() + " >" + (dir / (out + ".log")).string() +
                          " 2>&1";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };
    if (!run("run1") || !run("run2")) {
        detail = "end-to-end run failed";
        return false;
    }
    std::string m1 = slurp(dir / "run1" / "MANIFEST");
    std::string m2 = slurp(dir / "run2" / "MANIFEST");
    std::size_t artifacts = static_cast<std::size_t>(
        std::count(m1.begin(), m1.end(), '\n'));
    fs::remove_all(dir);
    if (m1.empty() || m1 != m2) {
        detail = "manifests differ between identical-seed runs";
        return false;
    }
    detail = "two end-to-end runs at seed 424242: " + std::to_string(artifacts) +
             " artifact hashes identical";
    return true;
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    bool (*run)(std::string&);
};

}  // namespace

int main(int argc, char** argv) {
    if (argc >= 2) g_cli_path = argv[1];
    int only = argc >= 3 ? std::atoi(argv[2]) : 0;

    const Criterion criteria[] = {
        {1, "level-6 area ratio", 10.0, criterion_area_ratio},
        {2, "partition vs brute force", 30.0, criterion_partition_oracle},
        {3, "geometry properties", 30.0, criterion_geometry_properties},
        {4, "gradient checks", 10.0, criterion_gradients},
        {5, "learning sanity", 60.0, criterion_learning_sanity},
        {6, "album trend ordering", 600.0, criterion_trend},
        {7, "evaluation oracles", 600.0, criterion_evaluation_oracles},
        {8, "end-to-end determinism", 600.0, criterion_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::string detail;
        auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.limit_seconds) {
            ok = false;
            detail += " [over " + std::to_string(c.limit_seconds) + "s budget]";
        }
        std::printf("[%s] %d. %-26s %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    detail.c_str(), seconds);
        std::fflush(stdout);
        failures += !ok;
    }
    return failures == 0 ? 0 : 1;
}

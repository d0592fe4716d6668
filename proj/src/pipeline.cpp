#include "geocell/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "geocell/errors.hpp"
#include "geocell/rng.hpp"

namespace geocell {

namespace {

double street_accuracy(const std::vector<CellDistribution>& dists,
                       const std::vector<GeoPoint>& truths, const Partition& part) {
    if (dists.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        int cls = top_k(dists[i], 1)[0].first;
        if (localization_error_km(cls, truths[i], part) <= 1.0) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dists.size());
}

struct BenchmarkRun {
    SyntheticData synth;
    Dataset train_set, test_set;
    std::optional<Partition> partition;
    std::optional<GeoClassifier> classifier;
    std::vector<EpochStats> classifier_log;
    std::map<std::string, SequenceModel> seq_models;
    TrendResult trend;
};

BenchmarkRun execute_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed,
                               const std::vector<std::string>& variants) {
    BenchmarkRun run;
    SyntheticSpec spec = cfg.synthetic;
    spec.seed = sub_seed(seed, "synthetic");
    run.synth = generate_synthetic(spec);

    auto [train_set, test_set] = split(run.synth.dataset, cfg.train_fraction,
                                       sub_seed(seed, "split"));
    run.train_set = std::move(train_set);
    run.test_set = std::move(test_set);

    std::vector<GeoPoint> train_points;
    train_points.reserve(run.train_set.size());
    for (const auto& r : run.train_set.records) train_points.push_back(r.geo);
    run.partition.emplace(build_partition(train_points, cfg.partition));
    const Partition& part = *run.partition;

    // hold out a slice of training albums for early stopping
    auto [fit_set, val_set] = split(run.train_set, 0.85, sub_seed(seed, "val"));
    LabeledDataset fit = filter_covered(fit_set, part);
    LabeledDataset val = filter_covered(val_set, part);
    if (val.data.empty()) val = fit;

    ModelConfig mcfg;
    mcfg.input_dim = static_cast<int>(run.synth.dataset.feature_dim());
    mcfg.hidden_dims = cfg.hidden_dims;
    mcfg.n_classes = static_cast<int>(part.size());
    mcfg.seed = sub_seed(seed, "model-init");
    TrainConfig tcfg;
    tcfg.learning_rate = cfg.learning_rate;
    tcfg.batch_size = cfg.classifier_batch;
    tcfg.epochs = cfg.classifier_epochs;
    tcfg.seed = sub_seed(seed, "train");
    run.classifier.emplace(train(fit, val, part, mcfg, tcfg, &run.classifier_log));
    const GeoClassifier& model = *run.classifier;

    std::vector<Album> train_albums = group_albums(run.train_set);
    std::vector<Album> test_albums = group_albums(run.test_set);

    // single-image and album-average baselines over the same held-out photos
    std::vector<CellDistribution> single_dists, avg_dists;
    std::vector<GeoPoint> truths;
    for (const Album& album : test_albums) {
        auto avg = average_baseline(model, run.test_set, album);
        for (std::size_t i = 0; i < album.photos.size(); ++i) {
            const PhotoRecord& r = run.test_set.records[album.photos[i]];
            single_dists.push_back(model.predict(feature_vector(r)));
            avg_dists.push_back(avg[i]);
            truths.push_back(r.geo);
        }
    }
    run.trend.n_test_photos = truths.size();
    run.trend.n_classes = part.size();
    run.trend.street_accuracy["single"] = street_accuracy(single_dists, truths, part);
    run.trend.street_accuracy["average"] = street_accuracy(avg_dists, truths, part);

    for (const std::string& name : variants) {
        SequenceModelConfig scfg;
        scfg.variant = parse_variant(name, &scfg.offset);
        scfg.max_len = cfg.max_len;
        scfg.hidden_dim = cfg.sequence_hidden;
        scfg.seed = sub_seed(seed, "seq-init-" + name);
        TrainConfig stcfg;
        stcfg.learning_rate = cfg.learning_rate;
        stcfg.batch_size = cfg.sequence_batch;
        stcfg.epochs = cfg.sequence_epochs;
        stcfg.seed = sub_seed(seed, "seq-train-" + name);
        SequenceModel seq =
            train_sequence(run.train_set, train_albums, model, part, scfg, stcfg);

        std::vector<CellDistribution> dists;
        std::vector<GeoPoint> seq_truths;
        for (const Album& album : test_albums) {
            int len = static_cast<int>(album.photos.size());
            if (len < min_chunk_len(scfg)) continue;
            Eigen::MatrixXd emb = album_embeddings(model, run.test_set, album);
            auto out = predict_sequence(seq, emb);
            auto idx = predict_sequence_photo_indices(scfg, len);
            for (std::size_t i = 0; i < out.size(); ++i) {
                dists.push_back(std::move(out[i]));
                seq_truths.push_back(
                    run.test_set.records[album.photos[static_cast<std::size_t>(idx[i])]].geo);
            }
        }
        run.trend.street_accuracy[name] = street_accuracy(dists, seq_truths, part);
        run.seq_models.emplace(name, std::move(seq));
    }
    return run;
}

}  // namespace

TrendResult run_trend_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed,
                                const std::vector<std::string>& variants) {
    return execute_benchmark(cfg, seed, variants).trend;
}

// ---------------------------------------------------------------------------
// end-to-end

std::string Manifest::to_string() const {
    std::string out;
    for (const auto& [name, hash] : hashes) {
        out += hash;
        out += "  ";
        out += name;
        out += "\n";
    }
    return out;
}

std::string hash_file_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(ss.str())));
    return buf;
}

Manifest run_end_to_end(const EndToEndConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

    BenchmarkRun run = execute_benchmark(cfg.benchmark, cfg.seed, {"basic"});

    write_jsonl(run.synth.dataset, path("dataset.jsonl"));
    run.partition->save(path("partition.json"));
    save_classifier(*run.classifier, path("model.json"));
    save_sequence_model(run.seq_models.at("basic"), path("seq_basic.json"));

    // single-image top-k evaluation on the held-out records
    ThresholdSet thresholds;
    std::vector<int> ks = {1, 2, 3, 4, 5};
    if (static_cast<int>(run.partition->size()) < 5) {
        ks.resize(static_cast<std::size_t>(run.partition->size()));
    }
    EvalReport report;
    report.curve = topk_accuracy(*run.classifier, run.test_set, *run.partition, ks, thresholds);
    nlohmann::json echo;
    echo["seed"] = cfg.seed;
    echo["mode"] = "single";
    echo["dataset"] = "dataset.jsonl";
    report.config_echo = echo.dump();
    report.validate();
    {
        std::ofstream f(path("report.json"), std::ios::binary);
        f << report.to_json_string();
        std::ofstream c(path("curves.csv"), std::ios::binary);
        c << report.to_csv_string();
    }

    nlohmann::json trend;
    trend["seed"] = cfg.seed;
    trend["n_test_photos"] = run.trend.n_test_photos;
    trend["n_classes"] = run.trend.n_classes;
    for (const auto& [name, acc] : run.trend.street_accuracy) {
        trend["street_accuracy"][name] = acc;
    }
    double single = run.trend.street_accuracy.at("single");
    double average = run.trend.street_accuracy.at("average");
    double basic = run.trend.street_accuracy.at("basic");
    trend["ordering_ok"] = (single < average && average < basic);
    {
        std::ofstream f(path("trend.json"), std::ios::binary);
        f << trend.dump(2) << "\n";
    }

    Manifest manifest;
    for (const char* name : {"dataset.jsonl", "partition.json", "model.json", "seq_basic.json",
                             "report.json", "curves.csv", "trend.json"}) {
        manifest.hashes[name] = hash_file_hex(path(name));
    }
    std::ofstream mf(path("MANIFEST"), std::ios::binary);
    mf << manifest.to_string();
    if (!mf) throw DataError("write failed: MANIFEST");
    return manifest;
}

}  // namespace geocell

// geocell command line: partition building, dataset tooling, training,
// sequence training, inference, evaluation, occlusion heatmaps and the
// end-to-end pipeline. Every subcommand is deterministic given --seed and its
// inputs, and writes only under its --out directory.
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 version/compat, 4 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geocell/classifier.hpp"
#include "geocell/dataset.hpp"
#include "geocell/errors.hpp"
#include "geocell/evaluation.hpp"
#include "geocell/partition.hpp"
#include "geocell/pipeline.hpp"
#include "geocell/rng.hpp"
#include "geocell/sequence.hpp"

namespace fs = std::filesystem;
using namespace geocell;

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << text;
    if (!f) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------

struct BuildPartitionArgs {
    std::string data_path, out_dir;
    PartitionParams params;
};

int cmd_build_partition(const BuildPartitionArgs& a) {
    Dataset ds = load_jsonl(a.data_path);
    if (ds.empty()) throw EmptyDataset("empty dataset: " + a.data_path);
    PartitionBuilder builder(a.params);
    for (const auto& r : ds.records) builder.add(r.geo);
    Partition part = builder.finish();
    fs::create_directories(a.out_dir);
    part.save(join_path(a.out_dir, "partition.json"));

    std::map<std::string, long long> level_hist;
    int min_level = CellId::kMaxLevel, max_level = 0;
    for (const CellId& c : part.cells()) {
        ++level_hist["level_" + std::to_string(c.level())];
        min_level = std::min(min_level, c.level());
        max_level = std::max(max_level, c.level());
    }
    long long cmin = part.counts()[0], cmax = part.counts()[0];
    for (long long n : part.counts()) {
        cmin = std::min(cmin, n);
        cmax = std::max(cmax, n);
    }
    // photo-count histogram over doubling buckets starting at t2
    std::map<std::string, long long> count_hist;
    for (long long n : part.counts()) {
        long long lo = a.params.t2;
        while (2 * lo <= n) lo *= 2;
        char bucket[48];
        std::snprintf(bucket, sizeof(bucket), "%lld-%lld", lo, 2 * lo - 1);
        ++count_hist[bucket];
    }
    nlohmann::json stats;
    stats["n_cells"] = part.size();
    stats["n_points"] = ds.size();
    stats["min_level"] = min_level;
    stats["max_level"] = max_level;
    stats["min_count"] = cmin;
    stats["max_count"] = cmax;
    stats["cells_per_level"] = level_hist;
    stats["count_histogram"] = count_hist;
    stats["version_tag"] = part.version_tag();
    write_text(join_path(a.out_dir, "partition_stats.json"), stats.dump(2) + "\n");
    std::cout << stats.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct GenSyntheticArgs {
    std::string out_dir;
    SyntheticSpec spec;
};

int cmd_gen_synthetic(const GenSyntheticArgs& a) {
    SyntheticData data = generate_synthetic(a.spec);
    fs::create_directories(a.out_dir);
    write_jsonl(data.dataset, join_path(a.out_dir, "dataset.jsonl"));
    nlohmann::json meta;
    auto hotspots = nlohmann::json::array();
    for (const Hotspot& h : data.hotspots) {
        hotspots.push_back({{"lat", h.location.lat_deg},
                            {"lon", h.location.lon_deg},
                            {"feature_mean", h.feature_mean}});
    }
    meta["hotspots"] = std::move(hotspots);
    auto assignment = nlohmann::json::array();
    for (std::size_t i = 0; i < data.dataset.size(); ++i) {
        assignment.push_back({{"id", data.dataset.records[i].id},
                              {"hotspot", data.hotspot_of[i]},
                              {"ambiguous", static_cast<bool>(data.ambiguous[i])}});
    }
    meta["photos"] = std::move(assignment);
    write_text(join_path(a.out_dir, "synthetic_meta.json"), meta.dump(2) + "\n");
    std::cout << "{\"photos\": " << data.dataset.size() << ", \"albums\": "
              << group_albums(data.dataset).size() << "}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct DedupArgs {
    std::string test_path, train_path, out_dir;
    int threshold = 8;
};

int cmd_dedup(const DedupArgs& a) {
    Dataset test = load_jsonl(a.test_path);
    Dataset train = load_jsonl(a.train_path);
    Dataset kept = dedup_filter(test, train, a.threshold);
    fs::create_directories(a.out_dir);
    write_jsonl(kept, join_path(a.out_dir, "deduped.jsonl"));
    std::cout << "{\"kept\": " << kept.size() << ", \"removed\": " << (test.size() - kept.size())
              << "}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data_path, partition_path, out_dir;
    std::vector<int> hidden_dims = {32, 16};
    double learning_rate = 0.045;
    int batch_size = 32;
    int epochs = 50;
    double val_fraction = 0.2;
    std::uint64_t seed = 1;
};

int cmd_train(const TrainArgs& a) {
    Dataset ds = load_jsonl(a.data_path);
    if (ds.empty()) throw EmptyDataset("empty dataset: " + a.data_path);
    Partition part = Partition::load(a.partition_path);
    auto [fit_raw, val_raw] = split(ds, 1.0 - a.val_fraction, sub_seed(a.seed, "val"));
    LabeledDataset fit = filter_covered(fit_raw, part);
    LabeledDataset val = filter_covered(val_raw, part);
    if (fit.data.empty()) throw DegeneratePartition("train: no training records in kept cells");
    if (val.data.empty()) val = fit;

    ModelConfig mcfg;
    mcfg.input_dim = static_cast<int>(fit.data.feature_dim());
    mcfg.hidden_dims = a.hidden_dims;
    mcfg.n_classes = static_cast<int>(part.size());
    mcfg.seed = sub_seed(a.seed, "model-init");
    TrainConfig tcfg;
    tcfg.learning_rate = a.learning_rate;
    tcfg.batch_size = a.batch_size;
    tcfg.epochs = a.epochs;
    tcfg.seed = sub_seed(a.seed, "train");

    std::vector<EpochStats> log;
    GeoClassifier model = train(fit, val, part, mcfg, tcfg, &log);
    fs::create_directories(a.out_dir);
    save_classifier(model, join_path(a.out_dir, "model.json"));
    std::ostringstream csv;
    csv << "epoch,train_loss,val_accuracy\n";
    for (const auto& e : log) {
        char line[96];
        std::snprintf(line, sizeof(line), "%d,%.8f,%.6f", e.epoch, e.train_loss, e.val_accuracy);
        csv << line << "\n";
    }
    write_text(join_path(a.out_dir, "train_log.csv"), csv.str());
    std::cout << "{\"epochs\": " << log.size() << ", \"final_val_accuracy\": "
              << (log.empty() ? 0.0 : log.back().val_accuracy) << "}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainSeqArgs {
    std::string data_path, model_path, partition_path, out_dir;
    std::string variant = "basic";
    int hidden = 128;
    int max_len = 25;
    double learning_rate = 0.045;
    int batch_size = 8;
    int epochs = 30;
    std::uint64_t seed = 1;
};

int cmd_train_seq(const TrainSeqArgs& a) {
    Dataset ds = load_jsonl(a.data_path);
    Partition part = Partition::load(a.partition_path);
    GeoClassifier frozen = load_classifier(a.model_path, part.version_tag());
    std::vector<Album> albums = group_albums(ds);
    if (albums.empty()) throw EmptyDataset("train-seq: no albums in " + a.data_path);

    SequenceModelConfig scfg;
    scfg.variant = parse_variant(a.variant, &scfg.offset);
    scfg.hidden_dim = a.hidden;
    scfg.max_len = a.max_len;
    scfg.seed = sub_seed(a.seed, "seq-init");
    TrainConfig tcfg;
    tcfg.learning_rate = a.learning_rate;
    tcfg.batch_size = a.batch_size;
    tcfg.epochs = a.epochs;
    tcfg.seed = sub_seed(a.seed, "seq-train");

    SequenceTrainReport report;
    SequenceModel model = train_sequence(ds, albums, frozen, part, scfg, tcfg, &report);
    fs::create_directories(a.out_dir);
    save_sequence_model(model, join_path(a.out_dir, "seq_" + a.variant + ".json"));
    nlohmann::json j;
    j["variant"] = a.variant;
    j["albums"] = albums.size();
    j["skipped_albums"] = report.skipped_albums;
    j["dropped_photos"] = report.dropped_photos;
    j["epoch_loss"] = report.epoch_loss;
    write_text(join_path(a.out_dir, "train_seq_log.json"), j.dump(2) + "\n");
    std::cout << "{\"skipped_albums\": " << report.skipped_albums << ", \"final_loss\": "
              << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << "}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct InferArgs {
    std::string data_path, model_path, partition_path, out_dir;
    int k = 1;
};

int cmd_infer(const InferArgs& a) {
    Partition part = Partition::load(a.partition_path);
    GeoClassifier model = load_classifier(a.model_path, part.version_tag());
    Dataset ds = load_jsonl(a.data_path);
    if (a.k < 1 || a.k > static_cast<int>(part.size())) {
        throw InvalidArgument("infer: k out of [1, n_classes]");
    }
    fs::create_directories(a.out_dir);
    std::ofstream out(join_path(a.out_dir, "predictions.jsonl"), std::ios::binary);
    if (!out) throw DataError("cannot open predictions.jsonl for writing");
    for (const PhotoRecord& r : ds.records) {
        CellDistribution dist = model.predict(feature_vector(r));
        auto ranked = top_k(dist, a.k);
        for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
            const CellId& cell = part.cell(static_cast<std::size_t>(ranked[rank].first));
            GeoPoint center = cell.center();
            nlohmann::json row;
            row["id"] = r.id;
            row["rank"] = rank + 1;
            row["cell"] = cell.token();
            row["lat"] = center.lat_deg;
            row["lon"] = center.lon_deg;
            row["prob"] = ranked[rank].second;
            out << row.dump() << "\n";
        }
    }
    if (!out) throw DataError("write failed: predictions.jsonl");
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string data_path, model_path, partition_path, out_dir;
    std::string mode = "single";  // single | average | seq
    std::string seq_model_path;
    std::string groups_path;  // optional CSV: id,label
    std::vector<int> ks = {1, 2, 3, 4, 5};
    std::vector<double> radii;  // empty -> defaults
};

int cmd_eval(const EvalArgs& a) {
    Partition part = Partition::load(a.partition_path);
    GeoClassifier model = load_classifier(a.model_path, part.version_tag());
    Dataset ds = load_jsonl(a.data_path);
    if (ds.empty()) throw EmptyDataset("eval: empty dataset");

    ThresholdSet thresholds;
    if (!a.radii.empty()) {
        thresholds.radii_km.clear();
        for (std::size_t i = 0; i < a.radii.size(); ++i) {
            thresholds.radii_km.emplace_back("r" + std::to_string(i), a.radii[i]);
        }
    }
    std::vector<int> ks = a.ks;
    for (int& k : ks) k = std::min(k, static_cast<int>(part.size()));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    std::vector<CellDistribution> dists;
    std::vector<GeoPoint> truths;
    std::vector<std::string> ids;
    if (a.mode == "single") {
        for (const PhotoRecord& r : ds.records) {
            dists.push_back(model.predict(feature_vector(r)));
            truths.push_back(r.geo);
            ids.push_back(r.id);
        }
    } else if (a.mode == "average") {
        for (const Album& album : group_albums(ds)) {
            auto avg = average_baseline(model, ds, album);
            for (std::size_t i = 0; i < album.photos.size(); ++i) {
                dists.push_back(avg[i]);
                truths.push_back(ds.records[album.photos[i]].geo);
                ids.push_back(ds.records[album.photos[i]].id);
            }
        }
        if (dists.empty()) throw EmptyDataset("eval: no albums in dataset");
    } else if (a.mode == "seq") {
        if (a.seq_model_path.empty()) throw ConfigError("eval: --seq-model required for seq mode");
        SequenceModel seq = load_sequence_model(a.seq_model_path, part.version_tag());
        for (const Album& album : group_albums(ds)) {
            int len = static_cast<int>(album.photos.size());
            if (len < min_chunk_len(seq.config)) continue;
            Eigen::MatrixXd emb = album_embeddings(model, ds, album);
            auto out = predict_sequence(seq, emb);
            auto idx = predict_sequence_photo_indices(seq.config, len);
            for (std::size_t i = 0; i < out.size(); ++i) {
                const PhotoRecord& r =
                    ds.records[album.photos[static_cast<std::size_t>(idx[i])]];
                dists.push_back(std::move(out[i]));
                truths.push_back(r.geo);
                ids.push_back(r.id);
            }
        }
        if (dists.empty()) throw EmptyDataset("eval: no albums long enough for the variant");
    } else {
        throw ConfigError("eval: unknown mode " + a.mode);
    }

    EvalReport report;
    report.curve = topk_accuracy_from_dists(dists, truths, part, ks, thresholds);

    if (!a.groups_path.empty()) {
        std::ifstream gf(a.groups_path);
        if (!gf) throw DataError("cannot open: " + a.groups_path);
        std::map<std::string, std::string> group_of;
        std::string line;
        while (std::getline(gf, line)) {
            if (line.empty()) continue;
            auto comma = line.find(',');
            if (comma == std::string::npos) throw ParseError("groups: expected id,label lines");
            group_of[line.substr(0, comma)] = line.substr(comma + 1);
        }
        std::vector<double> errors;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < dists.size(); ++i) {
            auto it = group_of.find(ids[i]);
            if (it == group_of.end()) throw ParseError("groups: no label for id " + ids[i]);
            errors.push_back(
                localization_error_km(top_k(dists[i], 1)[0].first, truths[i], part));
            labels.push_back(it->second);
        }
        report.group_medians = median_error_by_group(errors, labels);
    }

    nlohmann::json echo;
    echo["mode"] = a.mode;
    echo["data"] = a.data_path;
    echo["model"] = a.model_path;
    report.config_echo = echo.dump();
    report.validate();
    fs::create_directories(a.out_dir);
    write_text(join_path(a.out_dir, "report.json"), report.to_json_string());
    write_text(join_path(a.out_dir, "curves.csv"), report.to_csv_string());
    std::cout << report.to_json_string();
    return 0;
}

// ---------------------------------------------------------------------------

struct HeatmapArgs {
    std::string data_path, model_path, partition_path, out_dir;
    std::string photo_id;  // empty -> first record
    int grid_h = 0, grid_w = 0, grid_c = 1;
    int window = 1, stride = 1;
};

int cmd_heatmap(const HeatmapArgs& a) {
    Partition part = Partition::load(a.partition_path);
    GeoClassifier model = load_classifier(a.model_path, part.version_tag());
    Dataset ds = load_jsonl(a.data_path);
    if (ds.empty()) throw EmptyDataset("heatmap: empty dataset");
    const PhotoRecord* rec = &ds.records[0];
    if (!a.photo_id.empty()) {
        rec = nullptr;
        for (const auto& r : ds.records) {
            if (r.id == a.photo_id) {
                rec = &r;
                break;
            }
        }
        if (!rec) throw DataError("heatmap: no record with id " + a.photo_id);
    }
    auto cls = part.class_of(rec->geo);
    if (!cls) throw DataError("heatmap: photo lies in discarded territory");

    GridShape grid{a.grid_h, a.grid_w, a.grid_c};
    if (grid.height == 0 && grid.width == 0) {
        // square single-channel default when the feature length allows it
        int side = static_cast<int>(std::lround(std::sqrt(double(rec->features.size()))));
        grid = {side, side, 1};
    }
    Eigen::MatrixXd heat =
        occlusion_map(model, rec->features, grid, *cls, a.window, a.stride);

    fs::create_directories(a.out_dir);
    std::ostringstream csv;
    for (Eigen::Index y = 0; y < heat.rows(); ++y) {
        for (Eigen::Index x = 0; x < heat.cols(); ++x) {
            char cell[32];
            std::snprintf(cell, sizeof(cell), "%.8f", heat(y, x));
            csv << (x ? "," : "") << cell;
        }
        csv << "\n";
    }
    write_text(join_path(a.out_dir, "heatmap.csv"), csv.str());

    // PGM, probability 0..1 mapped to 0..255
    std::ostringstream pgm;
    pgm << "P2\n" << heat.cols() << " " << heat.rows() << "\n255\n";
    for (Eigen::Index y = 0; y < heat.rows(); ++y) {
        for (Eigen::Index x = 0; x < heat.cols(); ++x) {
            int v = static_cast<int>(std::lround(255.0 * std::clamp(heat(y, x), 0.0, 1.0)));
            pgm << (x ? " " : "") << v;
        }
        pgm << "\n";
    }
    write_text(join_path(a.out_dir, "heatmap.pgm"), pgm.str());
    std::cout << "{\"id\": \"" << rec->id << "\", \"rows\": " << heat.rows()
              << ", \"cols\": " << heat.cols() << "}\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct EndToEndArgs {
    std::string out_dir;
    std::uint64_t seed = 7;
};

int cmd_end_to_end(const EndToEndArgs& a) {
    EndToEndConfig cfg;
    cfg.seed = a.seed;
    Manifest manifest = run_end_to_end(cfg, a.out_dir);
    std::cout << manifest.to_string();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geolocation-as-classification toolkit"};
    app.require_subcommand(1);
    // values resolve flags > config file > defaults
    app.set_config("--config");

    BuildPartitionArgs bp;
    auto* sub_bp = app.add_subcommand("build-partition", "build an adaptive geocell partition");
    sub_bp->add_option("--data", bp.data_path, "input JSONL")->required();
    sub_bp->add_option("--out", bp.out_dir, "output directory")->required();
    sub_bp->add_option("--t1", bp.params.t1, "max photos per cell before subdividing");
    sub_bp->add_option("--t2", bp.params.t2, "min photos for a cell to be kept");
    sub_bp->add_option("--max-level", bp.params.max_level, "deepest cell level");

    GenSyntheticArgs gs;
    auto* sub_gs = app.add_subcommand("gen-synthetic", "generate a synthetic album corpus");
    sub_gs->add_option("--out", gs.out_dir)->required();
    sub_gs->add_option("--hotspots", gs.spec.n_hotspots);
    sub_gs->add_option("--photos-per-hotspot", gs.spec.photos_per_hotspot);
    sub_gs->add_option("--dim", gs.spec.feature_dim);
    sub_gs->add_option("--sigma", gs.spec.noise_sigma);
    sub_gs->add_option("--ambiguous", gs.spec.ambiguous_fraction);
    sub_gs->add_option("--label-noise", gs.spec.label_noise_fraction);
    sub_gs->add_option("--geo-sigma", gs.spec.geo_sigma_deg);
    sub_gs->add_option("--move-prob", gs.spec.move_prob);
    sub_gs->add_option("--seed", gs.spec.seed);

    DedupArgs dd;
    auto* sub_dd = app.add_subcommand("dedup", "drop test records near-duplicated in train");
    sub_dd->add_option("--test", dd.test_path)->required();
    sub_dd->add_option("--train", dd.train_path)->required();
    sub_dd->add_option("--out", dd.out_dir)->required();
    sub_dd->add_option("--threshold", dd.threshold, "min Hamming distance to keep");

    TrainArgs tr;
    auto* sub_tr = app.add_subcommand("train", "train the single-image classifier");
    sub_tr->add_option("--data", tr.data_path)->required();
    sub_tr->add_option("--partition", tr.partition_path)->required();
    sub_tr->add_option("--out", tr.out_dir)->required();
    sub_tr->add_option("--hidden", tr.hidden_dims, "hidden layer sizes");
    sub_tr->add_option("--lr", tr.learning_rate);
    sub_tr->add_option("--batch", tr.batch_size);
    sub_tr->add_option("--epochs", tr.epochs);
    sub_tr->add_option("--val-fraction", tr.val_fraction);
    sub_tr->add_option("--seed", tr.seed);

    TrainSeqArgs ts;
    auto* sub_ts = app.add_subcommand("train-seq", "train an album sequence model");
    sub_ts->add_option("--data", ts.data_path)->required();
    sub_ts->add_option("--model", ts.model_path, "frozen single-image model")->required();
    sub_ts->add_option("--partition", ts.partition_path)->required();
    sub_ts->add_option("--out", ts.out_dir)->required();
    sub_ts->add_option("--variant", ts.variant, "basic|offset1|offset2|repeated|blstm");
    sub_ts->add_option("--hidden", ts.hidden);
    sub_ts->add_option("--max-len", ts.max_len);
    sub_ts->add_option("--lr", ts.learning_rate);
    sub_ts->add_option("--batch", ts.batch_size);
    sub_ts->add_option("--epochs", ts.epochs);
    sub_ts->add_option("--seed", ts.seed);

    InferArgs in;
    auto* sub_in = app.add_subcommand("infer", "per-photo top-k cell predictions");
    sub_in->add_option("--data", in.data_path)->required();
    sub_in->add_option("--model", in.model_path)->required();
    sub_in->add_option("--partition", in.partition_path)->required();
    sub_in->add_option("--out", in.out_dir)->required();
    sub_in->add_option("--k", in.k);

    EvalArgs ev;
    auto* sub_ev = app.add_subcommand("eval", "threshold/top-k accuracy report");
    sub_ev->add_option("--data", ev.data_path)->required();
    sub_ev->add_option("--model", ev.model_path)->required();
    sub_ev->add_option("--partition", ev.partition_path)->required();
    sub_ev->add_option("--out", ev.out_dir)->required();
    sub_ev->add_option("--mode", ev.mode, "single|average|seq");
    sub_ev->add_option("--seq-model", ev.seq_model_path);
    sub_ev->add_option("--groups", ev.groups_path, "CSV id,label for per-group medians");
    sub_ev->add_option("--ks", ev.ks);
    sub_ev->add_option("--radii", ev.radii, "override radii in km");

    HeatmapArgs hm;
    auto* sub_hm = app.add_subcommand("heatmap", "occlusion sensitivity map for one photo");
    sub_hm->add_option("--data", hm.data_path)->required();
    sub_hm->add_option("--model", hm.model_path)->required();
    sub_hm->add_option("--partition", hm.partition_path)->required();
    sub_hm->add_option("--out", hm.out_dir)->required();
    sub_hm->add_option("--id", hm.photo_id, "photo id (default: first record)");
    sub_hm->add_option("--grid-h", hm.grid_h);
    sub_hm->add_option("--grid-w", hm.grid_w);
    sub_hm->add_option("--grid-c", hm.grid_c);
    sub_hm->add_option("--window", hm.window);
    sub_hm->add_option("--stride", hm.stride);

    EndToEndArgs ee;
    auto* sub_ee = app.add_subcommand("end-to-end", "full synthetic experiment in one run");
    sub_ee->add_option("--out", ee.out_dir)->required();
    sub_ee->add_option("--seed", ee.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    std::cerr << "# resolved config\n" << app.config_to_str(true, false);

    try {
        if (sub_bp->parsed()) return cmd_build_partition(bp);
        if (sub_gs->parsed()) return cmd_gen_synthetic(gs);
        if (sub_dd->parsed()) return cmd_dedup(dd);
        if (sub_tr->parsed()) return cmd_train(tr);
        if (sub_ts->parsed()) return cmd_train_seq(ts);
        if (sub_in->parsed()) return cmd_infer(in);
        if (sub_ev->parsed()) return cmd_eval(ev);
        if (sub_hm->parsed()) return cmd_heatmap(hm);
        if (sub_ee->parsed()) return cmd_end_to_end(ee);
    } catch (const VersionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

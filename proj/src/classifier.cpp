#include "geocell/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "geocell/errors.hpp"
#include "geocell/optimizer.hpp"
#include "geocell/rng.hpp"

namespace geocell {

void ModelConfig::validate() const {
    if (input_dim < 1) throw InvalidArgument("model: input_dim must be positive");
    if (n_classes < 2) throw InvalidArgument("model: need at least 2 classes");
    for (int h : hidden_dims) {
        if (h < 1) throw InvalidArgument("model: hidden dims must be positive");
    }
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

std::vector<std::pair<int, double>> top_k(const CellDistribution& dist, int k) {
    int n = static_cast<int>(dist.probs.size());
    if (k < 1 || k > n) throw InvalidArgument("top_k: k out of [1, n_classes]");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (dist.probs[a] != dist.probs[b]) return dist.probs[a] > dist.probs[b];
        return a < b;
    });
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.emplace_back(order[static_cast<std::size_t>(i)],
                                                 dist.probs[order[static_cast<std::size_t>(i)]]);
    return out;
}

GeoClassifier::GeoClassifier(const ModelConfig& cfg) : config(cfg) {
    config.validate();
    Rng rng(config.seed);
    std::vector<int> dims;
    dims.push_back(config.input_dim);
    for (int h : config.hidden_dims) dims.push_back(h);
    dims.push_back(config.n_classes);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        int in = dims[l], out = dims[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        Eigen::MatrixXd w(out, in);
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
        }
        weights.push_back(std::move(w));
        biases.emplace_back(Eigen::MatrixXd::Zero(out, 1));
    }
    feature_means = Eigen::VectorXd::Zero(config.input_dim);
}

Eigen::VectorXd GeoClassifier::embed(const Eigen::VectorXd& features) const {
    if (features.size() != config.input_dim) {
        throw InvalidArgument("embed: feature dim mismatch");
    }
    Eigen::VectorXd a = features;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        a = ((weights[l] * a + biases[l].col(0)).array().tanh()).matrix();
    }
    // `weights.size() - 1` hidden layers were applied; the last hidden
    // activation (or the input) is the embedding
    return a;
}

Eigen::VectorXd GeoClassifier::logits(const Eigen::VectorXd& features) const {
    Eigen::VectorXd e = embed(features);
    return weights.back() * e + biases.back().col(0);
}

CellDistribution GeoClassifier::predict(const Eigen::VectorXd& features) const {
    return CellDistribution{softmax(logits(features))};
}

std::vector<Eigen::MatrixXd*> GeoClassifier::parameters() {
    std::vector<Eigen::MatrixXd*> ps;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        ps.push_back(&weights[l]);
        ps.push_back(&biases[l]);
    }
    return ps;
}

double GeoClassifier::loss_and_gradients(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                                         std::vector<Eigen::MatrixXd>& grads) const {
    const auto B = static_cast<int>(X.rows());
    if (B == 0) throw InvalidArgument("loss: empty batch");
    if (X.cols() != config.input_dim) throw InvalidArgument("loss: feature dim mismatch");
    if (static_cast<int>(labels.size()) != B) throw InvalidArgument("loss: label count mismatch");
    for (int y : labels) {
        if (y < 0 || y >= config.n_classes) throw InvalidArgument("loss: label out of range");
    }

    std::size_t n_layers = weights.size();
    std::vector<Eigen::MatrixXd> acts;  // acts[l]: input to layer l (B x in_l)
    acts.reserve(n_layers + 1);
    acts.push_back(X);
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        acts.push_back(((acts[l] * weights[l].transpose()).rowwise() +
                        biases[l].col(0).transpose())
                           .array()
                           .tanh()
                           .matrix());
    }
    Eigen::MatrixXd logit_rows = (acts.back() * weights.back().transpose()).rowwise() +
                                 biases.back().col(0).transpose();

    // row-wise log-sum-exp cross-entropy, and dlogits = (softmax - onehot)/B
    double loss = 0.0;
    Eigen::MatrixXd dlogits(B, config.n_classes);
    for (int i = 0; i < B; ++i) {
        double m = logit_rows.row(i).maxCoeff();
        Eigen::ArrayXd e = (logit_rows.row(i).array() - m).exp();
        double z = e.sum();
        loss += m + std::log(z) - logit_rows(i, labels[static_cast<std::size_t>(i)]);
        dlogits.row(i) = (e / z).matrix().transpose() / B;
        dlogits(i, labels[static_cast<std::size_t>(i)]) -= 1.0 / B;
    }
    loss /= B;

    grads.assign(2 * n_layers, Eigen::MatrixXd());
    Eigen::MatrixXd delta = dlogits;  // B x out of current layer
    for (std::size_t l = n_layers; l-- > 0;) {
        grads[2 * l] = delta.transpose() * acts[l];
        grads[2 * l + 1] = delta.colwise().sum().transpose();
        if (l > 0) {
            // back through tanh of the previous hidden layer
            Eigen::MatrixXd da = delta * weights[l];
            delta = (da.array() * (1.0 - acts[l].array().square())).matrix();
        }
    }
    return loss;
}

Eigen::MatrixXd features_matrix(const Dataset& ds) {
    Eigen::MatrixXd X(ds.records.size(), ds.feature_dim());
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        for (std::size_t j = 0; j < ds.feature_dim(); ++j) {
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                ds.records[i].features[j];
        }
    }
    return X;
}

Eigen::VectorXd feature_vector(const PhotoRecord& r) {
    return Eigen::Map<const Eigen::VectorXd>(r.features.data(),
                                             static_cast<Eigen::Index>(r.features.size()));
}

double accuracy(const GeoClassifier& model, const LabeledDataset& ds) {
    if (ds.data.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.data.records.size(); ++i) {
        Eigen::VectorXd l = model.logits(feature_vector(ds.data.records[i]));
        int best = 0;
        l.maxCoeff(&best);
        if (best == ds.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(ds.data.size());
}

GeoClassifier train(const LabeledDataset& train_set, const LabeledDataset& val_set,
                    const Partition& partition, const ModelConfig& mcfg,
                    const TrainConfig& tcfg, std::vector<EpochStats>* log) {
    if (train_set.data.empty()) throw EmptyDataset("train: empty training set");
    if (mcfg.n_classes != static_cast<int>(partition.size())) {
        throw InvalidArgument("train: n_classes != partition size");
    }
    if (static_cast<int>(train_set.data.feature_dim()) != mcfg.input_dim) {
        throw InvalidArgument("train: feature dim != input_dim");
    }
    for (int y : train_set.labels) {
        if (y < 0 || y >= mcfg.n_classes) throw InvalidArgument("train: label out of range");
    }
    if (tcfg.learning_rate < 0.0) throw InvalidArgument("train: negative learning rate");

    GeoClassifier model(mcfg);
    model.partition_tag = partition.version_tag();
    Eigen::MatrixXd X = features_matrix(train_set.data);
    model.feature_means = X.colwise().mean().transpose();

    AdaGrad opt{tcfg.learning_rate, tcfg.adagrad_eps, {}};
    Rng rng(tcfg.seed);
    std::vector<std::size_t> order(train_set.data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    int batch = std::max(1, tcfg.batch_size);

    double best_val = -1.0;
    int epochs_since_improvement = 0;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
            Eigen::MatrixXd bx(end - start, mcfg.input_dim);
            std::vector<int> by(end - start);
            for (std::size_t i = start; i < end; ++i) {
                bx.row(static_cast<Eigen::Index>(i - start)) = X.row(static_cast<Eigen::Index>(order[i]));
                by[i - start] = train_set.labels[order[i]];
            }
            std::vector<Eigen::MatrixXd> grads;
            double loss = model.loss_and_gradients(bx, by, grads);
            if (!std::isfinite(loss)) throw NumericError("train: non-finite loss");
            opt.step(model.parameters(), grads);
            epoch_loss += loss;
            ++n_batches;
        }
        double val_acc = accuracy(model, val_set);
        if (log) log->push_back({epoch, epoch_loss / static_cast<double>(n_batches), val_acc});
        if (val_acc >= best_val + tcfg.min_delta) {
            best_val = val_acc;
            epochs_since_improvement = 0;
        } else if (++epochs_since_improvement >= tcfg.patience) {
            break;
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// occlusion sensitivity

Eigen::MatrixXd occlusion_map(const GeoClassifier& model, const std::vector<double>& features,
                              const GridShape& grid, int true_class, int window, int stride,
                              const std::optional<std::vector<double>>& fill_per_channel) {
    if (grid.height < 1 || grid.width < 1 || grid.channels < 1) {
        throw InvalidArgument("occlusion: bad grid shape");
    }
    if (static_cast<std::size_t>(grid.height) * static_cast<std::size_t>(grid.width) *
            static_cast<std::size_t>(grid.channels) !=
        features.size()) {
        throw InvalidArgument("occlusion: grid shape does not match feature length");
    }
    if (features.size() != static_cast<std::size_t>(model.config.input_dim)) {
        throw InvalidArgument("occlusion: feature dim mismatch");
    }
    if (window < 1 || window > grid.height || window > grid.width) {
        throw InvalidArgument("occlusion: window must fit in the grid");
    }
    if (stride < 1) throw InvalidArgument("occlusion: stride must be positive");
    if (true_class < 0 || true_class >= model.config.n_classes) {
        throw InvalidArgument("occlusion: class out of range");
    }

    std::vector<double> fill;
    if (fill_per_channel) {
        if (static_cast<int>(fill_per_channel->size()) != grid.channels) {
            throw InvalidArgument("occlusion: fill size != channels");
        }
        fill = *fill_per_channel;
    } else {
        // per-channel training mean: average the stored per-dimension means
        // over positions
        fill.assign(static_cast<std::size_t>(grid.channels), 0.0);
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                for (int c = 0; c < grid.channels; ++c) {
                    fill[static_cast<std::size_t>(c)] +=
                        model.feature_means[(y * grid.width + x) * grid.channels + c];
                }
            }
        }
        for (double& v : fill) v /= static_cast<double>(grid.height) * grid.width;
    }

    int oh = (grid.height - window) / stride + 1;
    int ow = (grid.width - window) / stride + 1;
    Eigen::MatrixXd heat(oh, ow);
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            std::vector<double> patched = features;
            for (int y = oy * stride; y < oy * stride + window; ++y) {
                for (int x = ox * stride; x < ox * stride + window; ++x) {
                    for (int c = 0; c < grid.channels; ++c) {
                        patched[static_cast<std::size_t>((y * grid.width + x) * grid.channels +
                                                         c)] = fill[static_cast<std::size_t>(c)];
                    }
                }
            }
            Eigen::Map<const Eigen::VectorXd> pv(patched.data(),
                                                 static_cast<Eigen::Index>(patched.size()));
            heat(oy, ox) = model.predict(pv).probs[true_class];
        }
    }
    return heat;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    auto n_rows = static_cast<Eigen::Index>(j.size());
    if (n_rows == 0) throw ParseError("checkpoint: empty matrix");
    auto n_cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != n_cols) {
            throw ParseError("checkpoint: ragged matrix");
        }
        for (Eigen::Index c = 0; c < n_cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

}  // namespace

void save_classifier(const GeoClassifier& model, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "geoclassifier";
    j["partition_tag"] = model.partition_tag;
    j["config"] = {{"input_dim", model.config.input_dim},
                   {"hidden_dims", model.config.hidden_dims},
                   {"n_classes", model.config.n_classes},
                   {"seed", model.config.seed}};
    auto ws = nlohmann::json::array();
    auto bs = nlohmann::json::array();
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        ws.push_back(matrix_to_json(model.weights[l]));
        bs.push_back(matrix_to_json(model.biases[l]));
    }
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    auto fm = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.feature_means.size(); ++i) fm.push_back(model.feature_means[i]);
    j["feature_means"] = std::move(fm);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw DataError("write failed: " + path);
}

GeoClassifier load_classifier(const std::string& path, const std::string& expected_partition_tag) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    try {
        nlohmann::json j = nlohmann::json::parse(f);
        if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "geoclassifier") {
            throw ParseError("checkpoint: not a geoclassifier v1 file");
        }
        std::string tag = j.at("partition_tag").get<std::string>();
        if (!expected_partition_tag.empty() && tag != expected_partition_tag) {
            throw VersionMismatch("checkpoint partition tag " + tag + " != expected " +
                                  expected_partition_tag);
        }
        ModelConfig cfg;
        cfg.input_dim = j.at("config").at("input_dim").get<int>();
        cfg.hidden_dims = j.at("config").at("hidden_dims").get<std::vector<int>>();
        cfg.n_classes = j.at("config").at("n_classes").get<int>();
        cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
        GeoClassifier model(cfg);
        model.partition_tag = tag;
        const auto& ws = j.at("weights");
        const auto& bs = j.at("biases");
        if (ws.size() != model.weights.size() || bs.size() != model.biases.size()) {
            throw ParseError("checkpoint: layer count mismatch");
        }
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            Eigen::MatrixXd w = matrix_from_json(ws.at(l));
            Eigen::MatrixXd b = matrix_from_json(bs.at(l));
            if (w.rows() != model.weights[l].rows() || w.cols() != model.weights[l].cols() ||
                b.rows() != model.biases[l].rows() || b.cols() != 1) {
                throw ParseError("checkpoint: weight shape mismatch");
            }
            model.weights[l] = std::move(w);
            model.biases[l] = std::move(b);
        }
        auto fm = j.at("feature_means").get<std::vector<double>>();
        if (static_cast<int>(fm.size()) != cfg.input_dim) {
            throw ParseError("checkpoint: feature_means size mismatch");
        }
        model.feature_means =
            Eigen::Map<const Eigen::VectorXd>(fm.data(), static_cast<Eigen::Index>(fm.size()));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace geocell

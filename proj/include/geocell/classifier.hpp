#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "geocell/dataset.hpp"
#include "geocell/partition.hpp"

namespace geocell {

struct ModelConfig {
    int input_dim = 0;
    std::vector<int> hidden_dims;  // empty -> linear model
    int n_classes = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.045;
    double adagrad_eps = 1e-8;
    int batch_size = 32;
    int epochs = 50;
    std::uint64_t seed = 1;
    // early stopping: stop when val accuracy fails to improve by min_delta
    // for `patience` consecutive epochs
    double min_delta = 0.001;
    int patience = 5;
};

// Probability vector over partition classes; entries >= 0, sum 1 (to 1e-9).
struct CellDistribution {
    Eigen::VectorXd probs;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// k most probable classes, descending probability, ties by ascending index.
std::vector<std::pair<int, double>> top_k(const CellDistribution& dist, int k);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

// Feed-forward head over photo features: tanh hidden layers, linear output
// into the class softmax. The layer feeding the softmax is the embedding; for
// a model without hidden layers the embedding is the input itself.
class GeoClassifier {
  public:
    explicit GeoClassifier(const ModelConfig& cfg);  // seed-deterministic init

    ModelConfig config;
    std::vector<Eigen::MatrixXd> weights;  // layer l: (out x in)
    std::vector<Eigen::MatrixXd> biases;   // layer l: (out x 1)
    Eigen::VectorXd feature_means;         // per input dim, from the training set
    std::string partition_tag;

    int embedding_dim() const {
        return config.hidden_dims.empty() ? config.input_dim : config.hidden_dims.back();
    }

    CellDistribution predict(const Eigen::VectorXd& features) const;
    Eigen::VectorXd embed(const Eigen::VectorXd& features) const;
    Eigen::VectorXd logits(const Eigen::VectorXd& features) const;

    // Mean cross-entropy over the batch (X: B x D, one label per row) and
    // gradients aligned with parameters().
    double loss_and_gradients(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                              std::vector<Eigen::MatrixXd>& grads) const;

    std::vector<Eigen::MatrixXd*> parameters();
};

GeoClassifier train(const LabeledDataset& train_set, const LabeledDataset& val_set,
                    const Partition& partition, const ModelConfig& mcfg,
                    const TrainConfig& tcfg, std::vector<EpochStats>* log = nullptr);

double accuracy(const GeoClassifier& model, const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// occlusion sensitivity

struct GridShape {
    int height = 0;
    int width = 0;
    int channels = 0;
};

// Probability of true_class with a window x window patch replaced by a fill
// value, for every stride-spaced window position. Features are read as a
// row-major (y, x, channel) grid; the default fill is the per-channel
// training mean stored in the model. Output is floor((H-window)/stride)+1 by
// floor((W-window)/stride)+1.
Eigen::MatrixXd occlusion_map(const GeoClassifier& model, const std::vector<double>& features,
                              const GridShape& grid, int true_class, int window, int stride,
                              const std::optional<std::vector<double>>& fill_per_channel = {});

// ---------------------------------------------------------------------------
// checkpoints

void save_classifier(const GeoClassifier& model, const std::string& path);

// expected_partition_tag non-empty: refuse checkpoints trained against a
// different partition (throws VersionMismatch).
GeoClassifier load_classifier(const std::string& path,
                              const std::string& expected_partition_tag = "");

// dataset helpers shared with the sequence model
Eigen::MatrixXd features_matrix(const Dataset& ds);
Eigen::VectorXd feature_vector(const PhotoRecord& r);

}  // namespace geocell

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geocell/classifier.hpp"
#include "geocell/dataset.hpp"
#include "geocell/partition.hpp"

namespace geocell {

class Rng;

// Single-layer LSTM cell with forget gate, no peepholes. Gate order
// throughout: input (i), forget (f), output (o), candidate (g).
struct LstmParams {
    Eigen::MatrixXd wx_i, wh_i, b_i;
    Eigen::MatrixXd wx_f, wh_f, b_f;
    Eigen::MatrixXd wx_o, wh_o, b_o;
    Eigen::MatrixXd wx_g, wh_g, b_g;

    // uniform +-1/sqrt(fan_in) weights, forget bias +1 for gradient flow at
    // init, other biases zero
    static LstmParams init(int input_dim, int hidden_dim, Rng& rng);

    int hidden_dim() const { return static_cast<int>(wh_i.rows()); }
    int input_dim() const { return static_cast<int>(wx_i.cols()); }

    std::vector<Eigen::MatrixXd*> parameters();
};

struct LstmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LstmState zero(int hidden_dim) {
        return {Eigen::VectorXd::Zero(hidden_dim), Eigen::VectorXd::Zero(hidden_dim)};
    }
};

// One cell update:
//   i,f,o = sigmoid(Wx x + Wh h + b);  g = tanh(...)
//   c' = f.c + i.g;  h' = o.tanh(c')
// The output vector is h'.
LstmState lstm_step(const LstmParams& params, const Eigen::VectorXd& x, const LstmState& state);

enum class SequenceVariant { kBasic, kOffset, kRepeated, kBidirectional };

std::string variant_name(SequenceVariant v, int offset);
// accepts basic | offset1 | offset2 | repeated | blstm
SequenceVariant parse_variant(const std::string& name, int* offset);

struct SequenceModelConfig {
    SequenceVariant variant = SequenceVariant::kBasic;
    int offset = 0;     // k >= 1, kOffset only
    int max_len = 25;   // albums are split into chunks of at most this length
    int hidden_dim = 128;
    std::uint64_t seed = 1;

    void validate() const;
};

// Album-level head: an LSTM over per-photo embeddings of a frozen
// single-image model, followed by a class softmax. The bidirectional variant
// runs a second LSTM over the reversed sequence and feeds the concatenated
// states into the softmax.
class SequenceModel {
  public:
    SequenceModel(const SequenceModelConfig& cfg, int input_dim, int n_classes);

    SequenceModelConfig config;
    int input_dim = 0;
    int n_classes = 0;
    LstmParams forward_lstm;
    std::optional<LstmParams> backward_lstm;  // bidirectional only
    Eigen::MatrixXd softmax_w;                // C x (H or 2H)
    Eigen::MatrixXd softmax_b;                // C x 1
    std::string partition_tag;

    std::vector<Eigen::MatrixXd*> parameters();
};

// Shortest chunk the variant can emit a prediction for (offset k needs k+1).
int min_chunk_len(const SequenceModelConfig& cfg);

// Photo positions (within a length-n chunk) that receive predictions, in
// emission order: all of 0..n-1 except for offset k, which emits only
// 0..n-k-1 (prediction for photo i appears at step i+k).
std::vector<int> emitted_photo_indices(const SequenceModelConfig& cfg, int chunk_len);

// Distributions for one chunk (rows of emb = photo embeddings, chronological,
// length <= max_len enforced by the caller). Output aligns with
// emitted_photo_indices. The repeated variant runs the chunk twice and keeps
// the second pass; state always starts at zero, so repeated calls are
// identical.
std::vector<CellDistribution> predict_chunk(const SequenceModel& model,
                                            const Eigen::MatrixXd& emb);

// Splits an album into consecutive chunks of at most max_len and
// concatenates per-chunk predictions. Throws InvalidArgument when the album
// is shorter than the variant requires.
std::vector<CellDistribution> predict_sequence(const SequenceModel& model,
                                               const Eigen::MatrixXd& emb);
std::vector<int> predict_sequence_photo_indices(const SequenceModelConfig& cfg, int album_len);

// Chunk-mean cross-entropy over emitted steps plus gradients aligned with
// model.parameters(). labels has one class per photo row of emb.
double chunk_loss_and_gradients(const SequenceModel& model, const Eigen::MatrixXd& emb,
                                const std::vector<int>& labels,
                                std::vector<Eigen::MatrixXd>& grads);

struct SequenceTrainReport {
    std::vector<double> epoch_loss;
    int skipped_albums = 0;  // too short for the variant after coverage filtering
    int dropped_photos = 0;  // in discarded partition cells
};

// Trains LSTM + softmax on album sequences; the single-image model stays
// frozen and only supplies embeddings. Deterministic per seed.
SequenceModel train_sequence(const Dataset& ds, const std::vector<Album>& albums,
                             const GeoClassifier& frozen, const Partition& partition,
                             const SequenceModelConfig& cfg, const TrainConfig& tcfg,
                             SequenceTrainReport* report = nullptr);

// Mean of the per-photo single-image distributions, assigned to every photo
// of the album.
std::vector<CellDistribution> average_baseline(const GeoClassifier& model, const Dataset& ds,
                                               const Album& album);

// Embedding rows for an album's photos, chronological order.
Eigen::MatrixXd album_embeddings(const GeoClassifier& model, const Dataset& ds,
                                 const Album& album);

void save_sequence_model(const SequenceModel& model, const std::string& path);
SequenceModel load_sequence_model(const std::string& path,
                                  const std::string& expected_partition_tag = "");

}  // namespace geocell

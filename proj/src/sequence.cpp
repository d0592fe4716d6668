#include "geocell/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "geocell/errors.hpp"
#include "geocell/optimizer.hpp"
#include "geocell/rng.hpp"

namespace geocell {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
    // split by sign to avoid overflow in exp
    Eigen::ArrayXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = x[i];
        if (v >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            double e = std::exp(v);
            out[i] = e / (1.0 + e);
        }
    }
    return out;
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
}

}  // namespace

LstmParams LstmParams::init(int input_dim, int hidden_dim, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1) throw InvalidArgument("lstm: dims must be positive");
    double bx = 1.0 / std::sqrt(static_cast<double>(input_dim));
    double bh = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    LstmParams p;
    p.wx_i = uniform_matrix(hidden_dim, input_dim, bx, rng);
    p.wh_i = uniform_matrix(hidden_dim, hidden_dim, bh, rng);
    p.b_i = Eigen::MatrixXd::Zero(hidden_dim, 1);
    p.wx_f = uniform_matrix(hidden_dim, input_dim, bx, rng);
    p.wh_f = uniform_matrix(hidden_dim, hidden_dim, bh, rng);
    p.b_f = Eigen::MatrixXd::Constant(hidden_dim, 1, 1.0);
    p.wx_o = uniform_matrix(hidden_dim, input_dim, bx, rng);
    p.wh_o = uniform_matrix(hidden_dim, hidden_dim, bh, rng);
    p.b_o = Eigen::MatrixXd::Zero(hidden_dim, 1);
    p.wx_g = uniform_matrix(hidden_dim, input_dim, bx, rng);
    p.wh_g = uniform_matrix(hidden_dim, hidden_dim, bh, rng);
    p.b_g = Eigen::MatrixXd::Zero(hidden_dim, 1);
    return p;
}

std::vector<Eigen::MatrixXd*> LstmParams::parameters() {
    return {&wx_i, &wh_i, &b_i, &wx_f, &wh_f, &b_f, &wx_o, &wh_o, &b_o, &wx_g, &wh_g, &b_g};
}

LstmState lstm_step(const LstmParams& p, const Eigen::VectorXd& x, const LstmState& state) {
    if (x.size() != p.input_dim() || state.h.size() != p.hidden_dim() ||
        state.c.size() != p.hidden_dim()) {
        throw InvalidArgument("lstm_step: dimension mismatch");
    }
    Eigen::ArrayXd i = sigmoid((p.wx_i * x + p.wh_i * state.h + p.b_i.col(0)).array());
    Eigen::ArrayXd f = sigmoid((p.wx_f * x + p.wh_f * state.h + p.b_f.col(0)).array());
    Eigen::ArrayXd o = sigmoid((p.wx_o * x + p.wh_o * state.h + p.b_o.col(0)).array());
    Eigen::ArrayXd g = (p.wx_g * x + p.wh_g * state.h + p.b_g.col(0)).array().tanh();
    Eigen::VectorXd c = (f * state.c.array() + i * g).matrix();
    Eigen::VectorXd h = (o * c.array().tanh()).matrix();
    return {std::move(h), std::move(c)};
}

// ---------------------------------------------------------------------------
// config / model

std::string variant_name(SequenceVariant v, int offset) {
    switch (v) {
        case SequenceVariant::kBasic: return "basic";
        case SequenceVariant::kOffset: return "offset" + std::to_string(offset);
        case SequenceVariant::kRepeated: return "repeated";
        case SequenceVariant::kBidirectional: return "blstm";
    }
    throw InvalidArgument("variant_name: bad variant");
}

SequenceVariant parse_variant(const std::string& name, int* offset) {
    *offset = 0;
    if (name == "basic") return SequenceVariant::kBasic;
    if (name == "repeated") return SequenceVariant::kRepeated;
    if (name == "blstm") return SequenceVariant::kBidirectional;
    if (name.rfind("offset", 0) == 0 && name.size() > 6) {
        int k = std::stoi(name.substr(6));
        if (k >= 1) {
            *offset = k;
            return SequenceVariant::kOffset;
        }
    }
    throw InvalidArgument("unknown sequence variant: " + name);
}

void SequenceModelConfig::validate() const {
    if (variant == SequenceVariant::kOffset) {
        if (offset < 1) throw InvalidArgument("sequence: offset variant needs offset >= 1");
    } else if (offset != 0) {
        throw InvalidArgument("sequence: offset only valid for the offset variant");
    }
    if (max_len < 2) throw InvalidArgument("sequence: max_len must be >= 2");
    if (hidden_dim < 1) throw InvalidArgument("sequence: hidden_dim must be positive");
}

SequenceModel::SequenceModel(const SequenceModelConfig& cfg, int input_dim_, int n_classes_)
    : config(cfg), input_dim(input_dim_), n_classes(n_classes_) {
    config.validate();
    if (input_dim < 1 || n_classes < 2) throw InvalidArgument("sequence: bad model dims");
    Rng rng(config.seed);
    forward_lstm = LstmParams::init(input_dim, config.hidden_dim, rng);
    int softmax_in = config.hidden_dim;
    if (config.variant == SequenceVariant::kBidirectional) {
        backward_lstm = LstmParams::init(input_dim, config.hidden_dim, rng);
        softmax_in *= 2;
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(softmax_in));
    softmax_w = uniform_matrix(n_classes, softmax_in, bound, rng);
    softmax_b = Eigen::MatrixXd::Zero(n_classes, 1);
}

std::vector<Eigen::MatrixXd*> SequenceModel::parameters() {
    std::vector<Eigen::MatrixXd*> ps = forward_lstm.parameters();
    if (backward_lstm) {
        for (auto* p : backward_lstm->parameters()) ps.push_back(p);
    }
    ps.push_back(&softmax_w);
    ps.push_back(&softmax_b);
    return ps;
}

int min_chunk_len(const SequenceModelConfig& cfg) {
    return cfg.variant == SequenceVariant::kOffset ? cfg.offset + 1 : 1;
}

std::vector<int> emitted_photo_indices(const SequenceModelConfig& cfg, int chunk_len) {
    int n_out = cfg.variant == SequenceVariant::kOffset ? chunk_len - cfg.offset : chunk_len;
    std::vector<int> idx;
    for (int i = 0; i < n_out; ++i) idx.push_back(i);
    return idx;
}

// ---------------------------------------------------------------------------
// forward/backward core

namespace {

struct StepCache {
    Eigen::ArrayXd i, f, o, g, tc;  // gate activations, tanh(c)
    Eigen::VectorXd c, h;
};

// Runs the cell over the given input rows; caches everything for BPTT.
std::vector<StepCache> run_forward(const LstmParams& p, const Eigen::MatrixXd& emb,
                                   const std::vector<int>& input_rows) {
    std::vector<StepCache> caches;
    caches.reserve(input_rows.size());
    LstmState st = LstmState::zero(p.hidden_dim());
    for (int row : input_rows) {
        Eigen::VectorXd x = emb.row(row).transpose();
        StepCache sc;
        sc.i = sigmoid((p.wx_i * x + p.wh_i * st.h + p.b_i.col(0)).array());
        sc.f = sigmoid((p.wx_f * x + p.wh_f * st.h + p.b_f.col(0)).array());
        sc.o = sigmoid((p.wx_o * x + p.wh_o * st.h + p.b_o.col(0)).array());
        sc.g = (p.wx_g * x + p.wh_g * st.h + p.b_g.col(0)).array().tanh();
        sc.c = (sc.f * st.c.array() + sc.i * sc.g).matrix();
        sc.tc = sc.c.array().tanh();
        sc.h = (sc.o * sc.tc).matrix();
        st.h = sc.h;
        st.c = sc.c;
        caches.push_back(std::move(sc));
    }
    return caches;
}

struct LstmGrads {
    Eigen::MatrixXd wx_i, wh_i, b_i, wx_f, wh_f, b_f, wx_o, wh_o, b_o, wx_g, wh_g, b_g;

    explicit LstmGrads(const LstmParams& p)
        : wx_i(Eigen::MatrixXd::Zero(p.wx_i.rows(), p.wx_i.cols())),
          wh_i(Eigen::MatrixXd::Zero(p.wh_i.rows(), p.wh_i.cols())),
          b_i(Eigen::MatrixXd::Zero(p.b_i.rows(), 1)),
          wx_f(Eigen::MatrixXd::Zero(p.wx_f.rows(), p.wx_f.cols())),
          wh_f(Eigen::MatrixXd::Zero(p.wh_f.rows(), p.wh_f.cols())),
          b_f(Eigen::MatrixXd::Zero(p.b_f.rows(), 1)),
          wx_o(Eigen::MatrixXd::Zero(p.wx_o.rows(), p.wx_o.cols())),
          wh_o(Eigen::MatrixXd::Zero(p.wh_o.rows(), p.wh_o.cols())),
          b_o(Eigen::MatrixXd::Zero(p.b_o.rows(), 1)),
          wx_g(Eigen::MatrixXd::Zero(p.wx_g.rows(), p.wx_g.cols())),
          wh_g(Eigen::MatrixXd::Zero(p.wh_g.rows(), p.wh_g.cols())),
          b_g(Eigen::MatrixXd::Zero(p.b_g.rows(), 1)) {}

    std::vector<Eigen::MatrixXd> take() {
        return {std::move(wx_i), std::move(wh_i), std::move(b_i), std::move(wx_f),
                std::move(wh_f), std::move(b_f), std::move(wx_o), std::move(wh_o),
                std::move(b_o), std::move(wx_g), std::move(wh_g), std::move(b_g)};
    }
};

// BPTT over a cached forward run. dh_inject[t] is the loss gradient flowing
// directly into h_t (from the softmax); zero vectors elsewhere.
LstmGrads run_backward(const LstmParams& p, const Eigen::MatrixXd& emb,
                       const std::vector<int>& input_rows, const std::vector<StepCache>& caches,
                       const std::vector<Eigen::VectorXd>& dh_inject) {
    int hidden = p.hidden_dim();
    LstmGrads g(p);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
    for (int t = static_cast<int>(input_rows.size()) - 1; t >= 0; --t) {
        const StepCache& sc = caches[static_cast<std::size_t>(t)];
        Eigen::VectorXd x = emb.row(input_rows[static_cast<std::size_t>(t)]).transpose();
        const bool first = (t == 0);
        const Eigen::VectorXd h_prev =
            first ? Eigen::VectorXd::Zero(hidden) : caches[static_cast<std::size_t>(t - 1)].h;
        const Eigen::VectorXd c_prev =
            first ? Eigen::VectorXd::Zero(hidden) : caches[static_cast<std::size_t>(t - 1)].c;

        Eigen::ArrayXd dh = (dh_inject[static_cast<std::size_t>(t)] + dh_next).array();
        Eigen::ArrayXd dc = dc_next.array() + dh * sc.o * (1.0 - sc.tc.square());
        Eigen::ArrayXd do_ = dh * sc.tc;
        Eigen::ArrayXd di = dc * sc.g;
        Eigen::ArrayXd dg = dc * sc.i;
        Eigen::ArrayXd df = dc * c_prev.array();
        dc_next = (dc * sc.f).matrix();

        Eigen::VectorXd da_i = (di * sc.i * (1.0 - sc.i)).matrix();
        Eigen::VectorXd da_f = (df * sc.f * (1.0 - sc.f)).matrix();
        Eigen::VectorXd da_o = (do_ * sc.o * (1.0 - sc.o)).matrix();
        Eigen::VectorXd da_g = (dg * (1.0 - sc.g.square())).matrix();

        g.wx_i += da_i * x.transpose();
        g.wh_i += da_i * h_prev.transpose();
        g.b_i += da_i;
        g.wx_f += da_f * x.transpose();
        g.wh_f += da_f * h_prev.transpose();
        g.b_f += da_f;
        g.wx_o += da_o * x.transpose();
        g.wh_o += da_o * h_prev.transpose();
        g.b_o += da_o;
        g.wx_g += da_g * x.transpose();
        g.wh_g += da_g * h_prev.transpose();
        g.b_g += da_g;

        dh_next = p.wh_i.transpose() * da_i + p.wh_f.transpose() * da_f +
                  p.wh_o.transpose() * da_o + p.wh_g.transpose() * da_g;
    }
    return g;
}

// input step order for unidirectional variants; emit_photo[t] = photo index
// predicted at step t, or -1
void plan_unidirectional(const SequenceModelConfig& cfg, int chunk_len,
                         std::vector<int>& input_rows, std::vector<int>& emit_photo) {
    input_rows.clear();
    emit_photo.clear();
    switch (cfg.variant) {
        case SequenceVariant::kBasic:
            for (int t = 0; t < chunk_len; ++t) {
                input_rows.push_back(t);
                emit_photo.push_back(t);
            }
            break;
        case SequenceVariant::kOffset:
            for (int t = 0; t < chunk_len; ++t) {
                input_rows.push_back(t);
                emit_photo.push_back(t >= cfg.offset ? t - cfg.offset : -1);
            }
            break;
        case SequenceVariant::kRepeated:
            // first pass builds state, second pass predicts
            for (int pass = 0; pass < 2; ++pass) {
                for (int t = 0; t < chunk_len; ++t) {
                    input_rows.push_back(t);
                    emit_photo.push_back(pass == 1 ? t : -1);
                }
            }
            break;
        case SequenceVariant::kBidirectional:
            throw InvalidArgument("plan_unidirectional: bidirectional handled separately");
    }
}

Eigen::VectorXd softmax_logits(const SequenceModel& m, const Eigen::VectorXd& feat) {
    return m.softmax_w * feat + m.softmax_b.col(0);
}

}  // namespace

std::vector<CellDistribution> predict_chunk(const SequenceModel& model,
                                            const Eigen::MatrixXd& emb) {
    int len = static_cast<int>(emb.rows());
    if (len < min_chunk_len(model.config)) {
        throw InvalidArgument("predict: album chunk shorter than the variant requires");
    }
    if (static_cast<int>(emb.cols()) != model.input_dim) {
        throw InvalidArgument("predict: embedding dim mismatch");
    }
    std::vector<CellDistribution> out;
    if (model.config.variant == SequenceVariant::kBidirectional) {
        std::vector<int> fwd_rows(static_cast<std::size_t>(len));
        std::iota(fwd_rows.begin(), fwd_rows.end(), 0);
        std::vector<int> bwd_rows(fwd_rows.rbegin(), fwd_rows.rend());
        auto fc = run_forward(model.forward_lstm, emb, fwd_rows);
        auto bc = run_forward(*model.backward_lstm, emb, bwd_rows);
        for (int i = 0; i < len; ++i) {
            Eigen::VectorXd feat(2 * model.config.hidden_dim);
            feat << fc[static_cast<std::size_t>(i)].h, bc[static_cast<std::size_t>(len - 1 - i)].h;
            out.push_back({softmax(softmax_logits(model, feat))});
        }
        return out;
    }
    std::vector<int> input_rows, emit_photo;
    plan_unidirectional(model.config, len, input_rows, emit_photo);
    auto caches = run_forward(model.forward_lstm, emb, input_rows);
    for (std::size_t t = 0; t < input_rows.size(); ++t) {
        if (emit_photo[t] < 0) continue;
        out.push_back({softmax(softmax_logits(model, caches[t].h))});
    }
    return out;
}

std::vector<CellDistribution> predict_sequence(const SequenceModel& model,
                                               const Eigen::MatrixXd& emb) {
    int len = static_cast<int>(emb.rows());
    if (len < 1) throw InvalidArgument("predict: empty album");
    if (len < min_chunk_len(model.config)) {
        throw InvalidArgument("predict: album shorter than the variant requires");
    }
    std::vector<CellDistribution> out;
    for (int start = 0; start < len; start += model.config.max_len) {
        int n = std::min(model.config.max_len, len - start);
        if (n < min_chunk_len(model.config)) break;  // leftover tail too short
        auto part = predict_chunk(model, emb.middleRows(start, n));
        for (auto& d : part) out.push_back(std::move(d));
    }
    return out;
}

std::vector<int> predict_sequence_photo_indices(const SequenceModelConfig& cfg, int album_len) {
    std::vector<int> out;
    for (int start = 0; start < album_len; start += cfg.max_len) {
        int n = std::min(cfg.max_len, album_len - start);
        if (n < min_chunk_len(cfg)) break;
        for (int i : emitted_photo_indices(cfg, n)) out.push_back(start + i);
    }
    return out;
}

double chunk_loss_and_gradients(const SequenceModel& model, const Eigen::MatrixXd& emb,
                                const std::vector<int>& labels,
                                std::vector<Eigen::MatrixXd>& grads) {
    int len = static_cast<int>(emb.rows());
    if (len < min_chunk_len(model.config)) {
        throw InvalidArgument("loss: chunk shorter than the variant requires");
    }
    if (static_cast<int>(labels.size()) != len) {
        throw InvalidArgument("loss: one label per photo required");
    }
    for (int y : labels) {
        if (y < 0 || y >= model.n_classes) throw InvalidArgument("loss: label out of range");
    }

    double loss = 0.0;
    Eigen::MatrixXd d_softmax_w = Eigen::MatrixXd::Zero(model.softmax_w.rows(), model.softmax_w.cols());
    Eigen::MatrixXd d_softmax_b = Eigen::MatrixXd::Zero(model.n_classes, 1);

    auto softmax_backprop = [&](const Eigen::VectorXd& feat, int label, double scale,
                                Eigen::VectorXd& dfeat) {
        Eigen::VectorXd logits = softmax_logits(model, feat);
        double m = logits.maxCoeff();
        Eigen::ArrayXd e = (logits.array() - m).exp();
        double z = e.sum();
        loss += (m + std::log(z) - logits[label]) * scale;
        Eigen::VectorXd dlogit = (e / z).matrix() * scale;
        dlogit[label] -= scale;
        d_softmax_w += dlogit * feat.transpose();
        d_softmax_b += dlogit;
        dfeat = model.softmax_w.transpose() * dlogit;
    };

    if (model.config.variant == SequenceVariant::kBidirectional) {
        std::vector<int> fwd_rows(static_cast<std::size_t>(len));
        std::iota(fwd_rows.begin(), fwd_rows.end(), 0);
        std::vector<int> bwd_rows(fwd_rows.rbegin(), fwd_rows.rend());
        auto fc = run_forward(model.forward_lstm, emb, fwd_rows);
        auto bc = run_forward(*model.backward_lstm, emb, bwd_rows);
        double scale = 1.0 / len;
        int hidden = model.config.hidden_dim;
        std::vector<Eigen::VectorXd> dh_fwd(static_cast<std::size_t>(len),
                                            Eigen::VectorXd::Zero(hidden));
        std::vector<Eigen::VectorXd> dh_bwd(static_cast<std::size_t>(len),
                                            Eigen::VectorXd::Zero(hidden));
        for (int i = 0; i < len; ++i) {
            Eigen::VectorXd feat(2 * hidden);
            feat << fc[static_cast<std::size_t>(i)].h, bc[static_cast<std::size_t>(len - 1 - i)].h;
            Eigen::VectorXd dfeat;
            softmax_backprop(feat, labels[static_cast<std::size_t>(i)], scale, dfeat);
            dh_fwd[static_cast<std::size_t>(i)] += dfeat.head(hidden);
            dh_bwd[static_cast<std::size_t>(len - 1 - i)] += dfeat.tail(hidden);
        }
        auto gf = run_backward(model.forward_lstm, emb, fwd_rows, fc, dh_fwd);
        auto gb = run_backward(*model.backward_lstm, emb, bwd_rows, bc, dh_bwd);
        grads = gf.take();
        for (auto& g : gb.take()) grads.push_back(std::move(g));
        grads.push_back(std::move(d_softmax_w));
        grads.push_back(std::move(d_softmax_b));
        return loss;
    }

    std::vector<int> input_rows, emit_photo;
    plan_unidirectional(model.config, len, input_rows, emit_photo);
    auto caches = run_forward(model.forward_lstm, emb, input_rows);
    int n_emit = 0;
    for (int p : emit_photo) n_emit += (p >= 0);
    double scale = 1.0 / n_emit;
    std::vector<Eigen::VectorXd> dh(input_rows.size(),
                                    Eigen::VectorXd::Zero(model.config.hidden_dim));
    for (std::size_t t = 0; t < input_rows.size(); ++t) {
        if (emit_photo[t] < 0) continue;
        Eigen::VectorXd dfeat;
        softmax_backprop(caches[t].h, labels[static_cast<std::size_t>(emit_photo[t])], scale,
                         dfeat);
        dh[t] += dfeat;
    }
    auto g = run_backward(model.forward_lstm, emb, input_rows, caches, dh);
    grads = g.take();
    grads.push_back(std::move(d_softmax_w));
    grads.push_back(std::move(d_softmax_b));
    return loss;
}

// ---------------------------------------------------------------------------
// training

namespace {

struct TrainChunk {
    Eigen::MatrixXd emb;
    std::vector<int> labels;
};

}  // namespace

Eigen::MatrixXd album_embeddings(const GeoClassifier& model, const Dataset& ds,
                                 const Album& album) {
    Eigen::MatrixXd emb(album.photos.size(), model.embedding_dim());
    for (std::size_t i = 0; i < album.photos.size(); ++i) {
        emb.row(static_cast<Eigen::Index>(i)) =
            model.embed(feature_vector(ds.records[album.photos[i]])).transpose();
    }
    return emb;
}

SequenceModel train_sequence(const Dataset& ds, const std::vector<Album>& albums,
                             const GeoClassifier& frozen, const Partition& partition,
                             const SequenceModelConfig& cfg, const TrainConfig& tcfg,
                             SequenceTrainReport* report) {
    cfg.validate();
    SequenceModel model(cfg, frozen.embedding_dim(), static_cast<int>(partition.size()));
    model.partition_tag = partition.version_tag();
    if (!frozen.partition_tag.empty() && frozen.partition_tag != model.partition_tag) {
        throw VersionMismatch("train_sequence: single-image model trained on another partition");
    }

    SequenceTrainReport local;
    SequenceTrainReport& rep = report ? *report : local;

    std::vector<TrainChunk> chunks;
    int min_len = min_chunk_len(cfg);
    for (const Album& album : albums) {
        // keep covered photos, chronological order preserved
        std::vector<std::size_t> covered;
        std::vector<int> labels;
        for (std::size_t idx : album.photos) {
            if (auto cls = partition.class_of(ds.records[idx].geo)) {
                covered.push_back(idx);
                labels.push_back(*cls);
            } else {
                ++rep.dropped_photos;
            }
        }
        bool contributed = false;
        for (std::size_t start = 0; start < covered.size();
             start += static_cast<std::size_t>(cfg.max_len)) {
            std::size_t n = std::min<std::size_t>(cfg.max_len, covered.size() - start);
            if (static_cast<int>(n) < min_len) break;
            TrainChunk tc;
            tc.emb.resize(static_cast<Eigen::Index>(n), frozen.embedding_dim());
            tc.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(start),
                             labels.begin() + static_cast<std::ptrdiff_t>(start + n));
            for (std::size_t i = 0; i < n; ++i) {
                tc.emb.row(static_cast<Eigen::Index>(i)) =
                    frozen.embed(feature_vector(ds.records[covered[start + i]])).transpose();
            }
            chunks.push_back(std::move(tc));
            contributed = true;
        }
        if (!contributed) ++rep.skipped_albums;
    }
    if (chunks.empty()) {
        if (rep.skipped_albums > 0) return model;  // nothing trainable; caller sees the count
        throw EmptyDataset("train_sequence: no albums");
    }

    AdaGrad opt{tcfg.learning_rate, tcfg.adagrad_eps, {}};
    Rng rng(tcfg.seed);
    std::vector<std::size_t> order(chunks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    int batch = std::max(1, tcfg.batch_size);
    auto params = model.parameters();

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
            std::vector<Eigen::MatrixXd> acc;
            for (std::size_t i = start; i < end; ++i) {
                const TrainChunk& tc = chunks[order[i]];
                std::vector<Eigen::MatrixXd> grads;
                double loss = chunk_loss_and_gradients(model, tc.emb, tc.labels, grads);
                if (!std::isfinite(loss)) throw NumericError("train_sequence: non-finite loss");
                epoch_loss += loss;
                if (acc.empty()) {
                    acc = std::move(grads);
                } else {
                    for (std::size_t gi = 0; gi < acc.size(); ++gi) acc[gi] += grads[gi];
                }
            }
            double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : acc) g *= inv;
            opt.step(params, acc);
        }
        rep.epoch_loss.push_back(epoch_loss / static_cast<double>(chunks.size()));
    }
    return model;
}

std::vector<CellDistribution> average_baseline(const GeoClassifier& model, const Dataset& ds,
                                               const Album& album) {
    if (album.photos.empty()) throw InvalidArgument("average_baseline: empty album");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.config.n_classes);
    for (std::size_t idx : album.photos) {
        mean += model.predict(feature_vector(ds.records[idx])).probs;
    }
    mean /= static_cast<double>(album.photos.size());
    return std::vector<CellDistribution>(album.photos.size(), CellDistribution{mean});
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

void matrix_from_json(const nlohmann::json& j, Eigen::MatrixXd& m) {
    if (static_cast<Eigen::Index>(j.size()) != m.rows()) {
        throw ParseError("sequence checkpoint: matrix shape mismatch");
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
            throw ParseError("sequence checkpoint: matrix shape mismatch");
        }
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
}

nlohmann::json lstm_to_json(const LstmParams& p) {
    const char* names[] = {"wx_i", "wh_i", "b_i", "wx_f", "wh_f", "b_f",
                           "wx_o", "wh_o", "b_o", "wx_g", "wh_g", "b_g"};
    const Eigen::MatrixXd* mats[] = {&p.wx_i, &p.wh_i, &p.b_i, &p.wx_f, &p.wh_f, &p.b_f,
                                     &p.wx_o, &p.wh_o, &p.b_o, &p.wx_g, &p.wh_g, &p.b_g};
    nlohmann::json j;
    for (std::size_t i = 0; i < 12; ++i) j[names[i]] = matrix_to_json(*mats[i]);
    return j;
}

void lstm_from_json(const nlohmann::json& j, LstmParams& p) {
    const char* names[] = {"wx_i", "wh_i", "b_i", "wx_f", "wh_f", "b_f",
                           "wx_o", "wh_o", "b_o", "wx_g", "wh_g", "b_g"};
    auto ps = p.parameters();
    for (std::size_t i = 0; i < ps.size(); ++i) matrix_from_json(j.at(names[i]), *ps[i]);
}

}  // namespace

void save_sequence_model(const SequenceModel& model, const std::string& path) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "sequence";
    j["variant"] = variant_name(model.config.variant, model.config.offset);
    j["partition_tag"] = model.partition_tag;
    j["config"] = {{"input_dim", model.input_dim},
                   {"hidden_dim", model.config.hidden_dim},
                   {"n_classes", model.n_classes},
                   {"max_len", model.config.max_len},
                   {"seed", model.config.seed}};
    j["forward"] = lstm_to_json(model.forward_lstm);
    if (model.backward_lstm) j["backward"] = lstm_to_json(*model.backward_lstm);
    j["softmax_w"] = matrix_to_json(model.softmax_w);
    j["softmax_b"] = matrix_to_json(model.softmax_b);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << '\n';
    if (!f) throw DataError("write failed: " + path);
}

SequenceModel load_sequence_model(const std::string& path,
                                  const std::string& expected_partition_tag) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    try {
        nlohmann::json j = nlohmann::json::parse(f);
        if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "sequence") {
            throw ParseError("checkpoint: not a sequence v1 file");
        }
        std::string tag = j.at("partition_tag").get<std::string>();
        if (!expected_partition_tag.empty() && tag != expected_partition_tag) {
            throw VersionMismatch("checkpoint partition tag " + tag + " != expected " +
                                  expected_partition_tag);
        }
        SequenceModelConfig cfg;
        cfg.variant = parse_variant(j.at("variant").get<std::string>(), &cfg.offset);
        cfg.hidden_dim = j.at("config").at("hidden_dim").get<int>();
        cfg.max_len = j.at("config").at("max_len").get<int>();
        cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
        SequenceModel model(cfg, j.at("config").at("input_dim").get<int>(),
                            j.at("config").at("n_classes").get<int>());
        model.partition_tag = tag;
        lstm_from_json(j.at("forward"), model.forward_lstm);
        if (model.backward_lstm) lstm_from_json(j.at("backward"), *model.backward_lstm);
        matrix_from_json(j.at("softmax_w"), model.softmax_w);
        matrix_from_json(j.at("softmax_b"), model.softmax_b);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace geocell

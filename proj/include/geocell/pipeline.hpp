#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geocell/classifier.hpp"
#include "geocell/dataset.hpp"
#include "geocell/evaluation.hpp"
#include "geocell/partition.hpp"
#include "geocell/sequence.hpp"

namespace geocell {

// One benchmark run: synthetic correlated albums, a single-image model, and
// the sequence variants, all measured with the same street-level protocol.
struct BenchmarkConfig {
    SyntheticSpec synthetic;           // seed overridden per run
    double train_fraction = 0.7;
    PartitionParams partition{30, 5, 14};
    std::vector<int> hidden_dims = {32, 16};
    int classifier_epochs = 40;
    int classifier_batch = 32;
    int sequence_hidden = 32;
    int sequence_epochs = 30;
    int sequence_batch = 8;
    int max_len = 25;
    double learning_rate = 0.045;

    static BenchmarkConfig defaults() {
        BenchmarkConfig c;
        c.synthetic.ambiguous_fraction = 0.5;
        c.synthetic.label_noise_fraction = 0.05;
        return c;
    }
};

// Street-level (1 km) accuracy per method on held-out albums.
struct TrendResult {
    std::map<std::string, double> street_accuracy;  // single, average, basic, offset1, ...
    std::size_t n_test_photos = 0;
    std::size_t n_classes = 0;
};

// Runs the full benchmark for one seed: generate, split by album, build the
// partition on training geotags, train the classifier and the requested
// sequence variants, and score everything on the held-out albums.
TrendResult run_trend_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed,
                                const std::vector<std::string>& variants);

// ---------------------------------------------------------------------------
// end-to-end experiment directory

struct EndToEndConfig {
    BenchmarkConfig benchmark = BenchmarkConfig::defaults();
    std::uint64_t seed = 7;
};

struct Manifest {
    // artifact name -> fnv1a64 hex of file bytes, in name order
    std::map<std::string, std::string> hashes;

    std::string to_string() const;
};

// Writes dataset, partition, classifier, basic sequence model, evaluation
// report + curves and the trend summary into out_dir, plus a MANIFEST with
// content hashes. Identical config + seed reproduces identical hashes.
Manifest run_end_to_end(const EndToEndConfig& cfg, const std::string& out_dir);

std::string hash_file_hex(const std::string& path);

}  // namespace geocell

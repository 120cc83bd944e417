#pragma once

#include <cstdint>
#include <vector>

#include "retrokit/embedding.hpp"

namespace retrokit {

struct SgnsConfig {
    std::size_t dim = 300;
    std::size_t window = 5;        // context radius; actual window shrinks per position
    std::size_t negatives = 5;     // negative samples per positive pair
    std::size_t epochs = 5;
    double lr_initial = 0.025;
    double lr_floor = 1e-4;        // linear decay stops here
    double subsample = 1e-3;       // word2vec-style frequent-word discard; 0 disables
    double norm_bound = 100.0;     // divergence detector
    std::uint64_t seed = 1;

    void validate() const;
};

struct SgnsResult {
    EmbeddingMatrix embeddings;
    std::vector<double> epoch_loss;  // mean pair loss per epoch
};

// Skip-gram with negative sampling over encoded documents. Windows never
// cross document boundaries; PAD positions are skipped entirely.
// Single-threaded and bit-deterministic given the seed.
SgnsResult train_sgns(const std::vector<EncodedDocument>& docs,
                      std::shared_ptr<const Vocabulary> vocab, const SgnsConfig& cfg);

}  // namespace retrokit

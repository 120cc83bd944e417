#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "retrokit/corpus.hpp"

namespace retrokit {

// Dense n x d matrix of word vectors, row-indexed by vocabulary id.
// The PAD row is all zeros by construction and stays that way.
struct EmbeddingMatrix {
    std::shared_ptr<const Vocabulary> vocab;
    std::size_t dim = 0;
    std::vector<double> data;  // row-major

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::shared_ptr<const Vocabulary> v, std::size_t d)
        : vocab(std::move(v)), dim(d), data(vocab->size() * d, 0.0) {}

    std::size_t rows() const { return vocab ? vocab->size() : 0; }
    std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

double cosine(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    std::string word;
    double similarity;
};

// Top-k by cosine, excluding the query word and the special tokens.
// Ties broken by word id.
std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb, const std::string& word,
                                        std::size_t k);

// Text format: header "n d", then one "word v1 ... vd" line per word in
// id order, doubles printed at full round-trip precision.
void save_embeddings(const EmbeddingMatrix& emb, const std::string& path);

struct LoadOptions {
    std::size_t expected_dim = 0;  // 0 = accept any
    bool skip_unknown = false;     // words outside the vocabulary: skip vs fatal
};

struct LoadReport {
    std::size_t skipped_unknown = 0;
};

EmbeddingMatrix load_embeddings(const std::string& path, std::shared_ptr<const Vocabulary> vocab,
                                const LoadOptions& opts = {}, LoadReport* report = nullptr);

// Divergence detector: every entry finite and no row norm above `bound`.
void check_embedding_health(const EmbeddingMatrix& emb, double bound);

}  // namespace retrokit

#pragma once

#include <cstddef>
#include <vector>

#include "retrokit/embedding.hpp"
#include "retrokit/kgraph.hpp"

namespace retrokit {

enum class BetaScheme {
    inv_degree,  // beta_ij = 1 / degree(i)
    constant,    // beta_ij = 1
};

BetaScheme parse_beta_scheme(const std::string& s);
std::string beta_scheme_name(BetaScheme s);

struct RetrofitConfig {
    double alpha = 1.0;                     // attachment weight, same for every word
    BetaScheme beta_scheme = BetaScheme::inv_degree;
    std::size_t iterations = 10;            // sweep count
    double tolerance = 1e-3;                // max per-vector inf-norm change; 0 disables early stop

    double beta(const KnowledgeGraph& g, std::size_t i) const;
    void validate(const KnowledgeGraph& g) const;
};

struct RetrofitResult {
    EmbeddingMatrix embeddings;
    // Solver energy after initialization and after each sweep: the
    // attachment term plus one term per undirected edge (see retrofit()).
    // Non-increasing for symmetric beta.
    std::vector<double> objective_trace;
    std::size_t sweeps_run = 0;
};

// The distance being minimized, summed over ordered pairs: each
// undirected edge contributes from both endpoints, each with that
// endpoint's own beta.
double objective(const EmbeddingMatrix& original, const EmbeddingMatrix& retrofitted,
                 const KnowledgeGraph& g, const RetrofitConfig& cfg);

// Closed-form single-word update: the neighbor/attachment convex
// combination (sum_j beta_ij w^_j + alpha_i w_i) / (sum_j beta_ij + alpha_i),
// reading the neighbors' current values.
std::vector<double> update_word(std::size_t i, const EmbeddingMatrix& original,
                                const EmbeddingMatrix& retrofitted, const KnowledgeGraph& g,
                                const RetrofitConfig& cfg);

// Gauss-Seidel sweeps of update_word in ascending word-id order, in
// place. Stops after cfg.iterations sweeps or when the largest
// per-vector change drops below cfg.tolerance. PAD/UNK rows and
// degree-0 words are never modified.
RetrofitResult retrofit(const EmbeddingMatrix& original, const KnowledgeGraph& g,
                        const RetrofitConfig& cfg);

}  // namespace retrokit

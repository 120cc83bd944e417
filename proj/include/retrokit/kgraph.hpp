#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "retrokit/corpus.hpp"

namespace retrokit {

struct ConceptRow {
    std::string cui;
    std::string source;
    std::string name;
};

struct ConceptGroup {
    std::string cui;
    std::vector<ConceptRow> rows;  // file order preserved
};

struct ConceptFile {
    std::vector<ConceptGroup> groups;  // ordered by first appearance of each CUI
    std::size_t malformed_rows = 0;
    std::map<std::string, std::size_t> rows_per_source;
};

// TSV: CUI<TAB>SOURCE<TAB>NAME. Malformed rows are counted and skipped;
// a nonempty file with no valid rows at all is an error.
ConceptFile load_concepts(const std::string& path);

// Undirected graph over vocabulary ids. No self-loops, no duplicates,
// adjacency lists sorted.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::size_t n_vocab, const std::set<std::pair<std::uint32_t, std::uint32_t>>& edges);

    std::size_t n_vocab() const { return n_vocab_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges() const { return edges_; }
    const std::vector<std::uint32_t>& neighbors(std::size_t i) const { return adjacency_[i]; }
    std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }

private:
    std::size_t n_vocab_ = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;  // (i, j) with i < j, sorted
    std::vector<std::vector<std::uint32_t>> adjacency_;
};

// Vocabulary word w maps to CUI c iff w equals (case-insensitively) a
// token of one of c's concept names, tokenized by the corpus tokenizer.
// CUIs matching fewer than 2 vocabulary words are dropped. Special
// tokens never match. With first_name_only, only the first concept name
// of each group is considered.
std::map<std::string, std::set<std::uint32_t>> match_vocabulary(const ConceptFile& concepts,
                                                                const Vocabulary& vocab,
                                                                bool first_name_only = false);

// Clique per CUI over its matched word set, deduplicated across CUIs.
KnowledgeGraph build_graph(const std::map<std::string, std::set<std::uint32_t>>& matches,
                           std::size_t n_vocab);

struct GraphStats {
    std::size_t nodes_with_edges = 0;
    std::size_t edge_count = 0;
    std::map<std::size_t, std::size_t> degree_histogram;  // degree >= 1 only
};

GraphStats graph_stats(const KnowledgeGraph& g);

// Edge-list text file: word_i<TAB>word_j, word_i lexicographically <=
// word_j, lines sorted.
void save_edge_list(const KnowledgeGraph& g, const Vocabulary& vocab, const std::string& path);
KnowledgeGraph load_edge_list(const std::string& path, const Vocabulary& vocab);

}  // namespace retrokit

#include "retrokit/kgraph.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "retrokit/common.hpp"

namespace retrokit {

ConceptFile load_concepts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open concept file: " + path);
    ConceptFile out;
    std::unordered_map<std::string, std::size_t> group_index;
    std::string line;
    std::size_t total_rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++total_rows;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos) {
            ++out.malformed_rows;
            continue;
        }
        ConceptRow row;
        row.cui = line.substr(0, t1);
        row.source = line.substr(t1 + 1, t2 - t1 - 1);
        row.name = line.substr(t2 + 1);
        if (row.cui.empty() || row.name.empty()) {
            ++out.malformed_rows;
            continue;
        }
        ++out.rows_per_source[row.source];
        auto [it, inserted] = group_index.emplace(row.cui, out.groups.size());
        if (inserted) out.groups.push_back({row.cui, {}});
        out.groups[it->second].rows.push_back(std::move(row));
    }
    if (total_rows > 0 && out.groups.empty()) {
        throw InputError(path + ": no valid concept rows (" + std::to_string(out.malformed_rows) +
                         " malformed)");
    }
    return out;
}

KnowledgeGraph::KnowledgeGraph(std::size_t n_vocab,
                               const std::set<std::pair<std::uint32_t, std::uint32_t>>& edges)
    : n_vocab_(n_vocab), adjacency_(n_vocab) {
    edges_.reserve(edges.size());
    for (const auto& [a, b] : edges) {
        if (a == b) throw std::invalid_argument("knowledge graph: self-loop on node " + std::to_string(a));
        if (a >= n_vocab || b >= n_vocab) {
            throw std::invalid_argument("knowledge graph: edge endpoint out of range");
        }
        edges_.emplace_back(a, b);
        adjacency_[a].push_back(b);
        adjacency_[b].push_back(a);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::map<std::string, std::set<std::uint32_t>> match_vocabulary(const ConceptFile& concepts,
                                                                const Vocabulary& vocab,
                                                                bool first_name_only) {
    std::map<std::string, std::set<std::uint32_t>> matches;
    for (const auto& group : concepts.groups) {
        std::set<std::uint32_t> ids;
        std::size_t names = first_name_only ? std::min<std::size_t>(1, group.rows.size())
                                            : group.rows.size();
        for (std::size_t r = 0; r < names; ++r) {
            // The tokenizer already lowercases, which is what makes the
            // match case-insensitive.
            for (const auto& tok : tokenize(group.rows[r].name)) {
                std::int32_t id = vocab.id(tok);
                if (id >= 0 && !Vocabulary::is_special(id)) {
                    ids.insert(static_cast<std::uint32_t>(id));
                }
            }
        }
        if (ids.size() >= 2) matches.emplace(group.cui, std::move(ids));
    }
    return matches;
}

KnowledgeGraph build_graph(const std::map<std::string, std::set<std::uint32_t>>& matches,
                           std::size_t n_vocab) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& [cui, ids] : matches) {
        for (auto it = ids.begin(); it != ids.end(); ++it) {
            auto jt = it;
            for (++jt; jt != ids.end(); ++jt) {
                edges.emplace(*it, *jt);  // set iteration is ascending, so *it < *jt
            }
        }
    }
    return KnowledgeGraph(n_vocab, edges);
}

GraphStats graph_stats(const KnowledgeGraph& g) {
    GraphStats s;
    s.edge_count = g.edge_count();
    for (std::size_t i = 0; i < g.n_vocab(); ++i) {
        std::size_t deg = g.degree(i);
        if (deg >= 1) {
            ++s.nodes_with_edges;
            ++s.degree_histogram[deg];
        }
    }
    return s;
}

void save_edge_list(const KnowledgeGraph& g, const Vocabulary& vocab, const std::string& path) {
    std::vector<std::pair<std::string, std::string>> lines;
    lines.reserve(g.edge_count());
    for (const auto& [a, b] : g.edges()) {
        std::string wa = vocab.word(static_cast<std::int32_t>(a));
        std::string wb = vocab.word(static_cast<std::int32_t>(b));
        if (wb < wa) std::swap(wa, wb);
        lines.emplace_back(std::move(wa), std::move(wb));
    }
    std::sort(lines.begin(), lines.end());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write edge list: " + path);
    for (const auto& [a, b] : lines) out << a << '\t' << b << '\n';
}

KnowledgeGraph load_edge_list(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list: " + path);
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw InputError(path + ":" + std::to_string(lineno) + ": expected word_i<TAB>word_j");
        }
        std::string wa = line.substr(0, tab);
        std::string wb = line.substr(tab + 1);
        std::int32_t a = vocab.id(wa);
        std::int32_t b = vocab.id(wb);
        if (a < 0) throw InputError(path + ":" + std::to_string(lineno) + ": word '" + wa + "' not in vocabulary");
        if (b < 0) throw InputError(path + ":" + std::to_string(lineno) + ": word '" + wb + "' not in vocabulary");
        if (a == b) throw InputError(path + ":" + std::to_string(lineno) + ": self-loop on '" + wa + "'");
        auto lo = static_cast<std::uint32_t>(std::min(a, b));
        auto hi = static_cast<std::uint32_t>(std::max(a, b));
        edges.emplace(lo, hi);
    }
    return KnowledgeGraph(vocab.size(), edges);
}

}  // namespace retrokit

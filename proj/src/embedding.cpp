#include "retrokit/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "retrokit/common.hpp"

namespace retrokit {

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: undefined similarity for zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb, const std::string& word,
                                        std::size_t k) {
    const auto& vocab = *emb.vocab;
    std::int32_t qid = vocab.id(word);
    if (qid < 0) throw InputError("nearest_neighbors: word not in vocabulary: '" + word + "'");
    if (k >= vocab.size()) throw std::invalid_argument("nearest_neighbors: k must be < vocabulary size");
    if (k == 0) return {};

    auto q = emb.row(static_cast<std::size_t>(qid));
    double qnorm = 0.0;
    for (double x : q) qnorm += x * x;
    if (qnorm == 0.0) throw std::invalid_argument("cosine: undefined similarity for zero vector");
    qnorm = std::sqrt(qnorm);

    std::vector<std::pair<double, std::int32_t>> scored;
    scored.reserve(vocab.size());
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(vocab.size()); ++i) {
        if (i == qid || Vocabulary::is_special(i)) continue;
        auto r = emb.row(static_cast<std::size_t>(i));
        double dot = 0.0, nr = 0.0;
        for (std::size_t c = 0; c < emb.dim; ++c) {
            dot += q[c] * r[c];
            nr += r[c] * r[c];
        }
        if (nr == 0.0) continue;  // degenerate row, cannot rank it
        scored.emplace_back(dot / (qnorm * std::sqrt(nr)), i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<Neighbor> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
        out.push_back({vocab.word(scored[i].second), scored[i].first});
    }
    return out;
}

void save_embeddings(const EmbeddingMatrix& emb, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write embeddings: " + path);
    out << emb.rows() << ' ' << emb.dim << '\n';
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        out << emb.vocab->word(static_cast<std::int32_t>(i));
        auto r = emb.row(i);
        for (double v : r) out << ' ' << format_double(v);
        out << '\n';
    }
}

EmbeddingMatrix load_embeddings(const std::string& path, std::shared_ptr<const Vocabulary> vocab,
                                const LoadOptions& opts, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open embeddings: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty embedding file");
    std::istringstream header(line);
    std::size_t n = 0, d = 0;
    if (!(header >> n >> d) || d == 0) throw InputError(path + ": malformed header, expected 'n d'");
    if (opts.expected_dim != 0 && d != opts.expected_dim) {
        throw InputError(path + ": dimension mismatch: file has d=" + std::to_string(d) +
                         ", expected d=" + std::to_string(opts.expected_dim));
    }

    EmbeddingMatrix emb(std::move(vocab), d);
    std::vector<bool> assigned(emb.rows(), false);
    std::size_t data_lines = 0, skipped = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++data_lines;
        std::size_t sp = line.find(' ');
        if (sp == std::string::npos) {
            throw InputError(path + ": malformed line " + std::to_string(data_lines + 1));
        }
        std::string word = line.substr(0, sp);
        std::int32_t id = emb.vocab->id(word);
        if (id < 0) {
            if (!opts.skip_unknown) {
                throw InputError(path + ": word '" + word + "' is not in the supplied vocabulary");
            }
            ++skipped;
            continue;
        }
        auto r = emb.row(static_cast<std::size_t>(id));
        std::size_t col = 0;
        std::size_t pos = sp + 1;
        while (pos <= line.size()) {
            std::size_t next = line.find(' ', pos);
            std::size_t end = next == std::string::npos ? line.size() : next;
            if (end > pos) {
                if (col >= d) throw InputError(path + ": word '" + word + "' has more than d=" + std::to_string(d) + " values");
                r[col++] = parse_double(std::string_view(line).substr(pos, end - pos));
            }
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (col != d) {
            throw InputError(path + ": word '" + word + "' has " + std::to_string(col) +
                             " values, expected d=" + std::to_string(d));
        }
        if (assigned[static_cast<std::size_t>(id)]) {
            throw InputError(path + ": duplicate row for word '" + word + "'");
        }
        assigned[static_cast<std::size_t>(id)] = true;
    }
    if (data_lines != n) {
        throw InputError(path + ": header declares " + std::to_string(n) + " words but file has " +
                         std::to_string(data_lines) + " data lines");
    }
    std::size_t missing = 0;
    std::string first_missing;
    for (std::size_t i = 0; i < assigned.size(); ++i) {
        if (!assigned[i]) {
            if (missing == 0) first_missing = emb.vocab->word(static_cast<std::int32_t>(i));
            ++missing;
        }
    }
    if (missing > 0) {
        throw InputError(path + ": embedding file does not cover the vocabulary: " +
                         std::to_string(missing) + " words missing, first '" + first_missing + "'");
    }
    for (double v : emb.row(Vocabulary::kPadId)) {
        if (v != 0.0) throw InputError(path + ": PAD row must be all zeros");
    }
    if (report) report->skipped_unknown = skipped;
    return emb;
}

void check_embedding_health(const EmbeddingMatrix& emb, double bound) {
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        double norm_sq = 0.0;
        for (double v : emb.row(i)) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("embedding diverged: non-finite value in row for '" +
                                         emb.vocab->word(static_cast<std::int32_t>(i)) + "'");
            }
            norm_sq += v * v;
        }
        if (norm_sq > bound * bound) {
            throw std::runtime_error("embedding diverged: |" + emb.vocab->word(static_cast<std::int32_t>(i)) +
                                     "| = " + format_double(std::sqrt(norm_sq)) + " exceeds bound " +
                                     format_double(bound));
        }
    }
}

}  // namespace retrokit

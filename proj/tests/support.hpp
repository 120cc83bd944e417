// Test-only helpers and independent oracles. Everything here must stay
// independent of the implementation paths it is used to check.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "retrokit/corpus.hpp"
#include "retrokit/embedding.hpp"
#include "retrokit/kgraph.hpp"
#include "retrokit/retrofit.hpp"

namespace testsupport {

inline std::filesystem::path tmp_dir(const std::string& name) {
    const char* base = std::getenv("RETROKIT_TMP");
    std::filesystem::path dir =
        base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "retrokit_tests";
    dir /= name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> gaussian_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::invalid_argument("gaussian_solve: bad shape");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (std::abs(a[pivot * n + col]) < 1e-14) throw std::runtime_error("gaussian_solve: singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double factor = a[r * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri * n + c] * x[c];
        x[ri] = acc / a[ri * n + ri];
    }
    return x;
}

// Direct solution of the retrofit stationarity system
//   (alpha + sum_j beta_ij) w^_i - sum_j beta_ij w^_j = alpha w_i
// for every non-special word with at least one edge, one dense solve per
// dimension. Isolated words keep their original vectors.
inline retrokit::EmbeddingMatrix retrofit_oracle(const retrokit::EmbeddingMatrix& original,
                                                 const retrokit::KnowledgeGraph& g,
                                                 const retrokit::RetrofitConfig& cfg) {
    std::vector<std::size_t> unknowns;
    std::vector<std::ptrdiff_t> index(original.rows(), -1);
    for (std::size_t i = 2; i < original.rows(); ++i) {
        if (g.degree(i) > 0) {
            index[i] = static_cast<std::ptrdiff_t>(unknowns.size());
            unknowns.push_back(i);
        }
    }
    retrokit::EmbeddingMatrix result = original;
    if (unknowns.empty()) return result;

    const std::size_t m = unknowns.size();
    std::vector<double> a(m * m, 0.0);
    for (std::size_t u = 0; u < m; ++u) {
        std::size_t i = unknowns[u];
        double beta_i = cfg.beta(g, i);
        double diag = cfg.alpha;
        for (std::uint32_t j : g.neighbors(i)) {
            diag += beta_i;
            a[u * m + static_cast<std::size_t>(index[j])] -= beta_i;
        }
        a[u * m + u] += diag;
    }
    for (std::size_t c = 0; c < original.dim; ++c) {
        std::vector<double> b(m);
        for (std::size_t u = 0; u < m; ++u) b[u] = cfg.alpha * original.row(unknowns[u])[c];
        std::vector<double> x = gaussian_solve(a, b);
        for (std::size_t u = 0; u < m; ++u) result.row(unknowns[u])[c] = x[u];
    }
    return result;
}

struct RetrofitInstance {
    retrokit::EmbeddingMatrix original;
    retrokit::KnowledgeGraph graph;
    retrokit::RetrofitConfig cfg;
};

inline std::shared_ptr<const retrokit::Vocabulary> synthetic_vocab(std::size_t n_words) {
    std::vector<retrokit::RawDocument> docs;
    for (std::size_t i = 0; i < n_words; ++i) {
        retrokit::RawDocument d;
        d.id = "doc" + std::to_string(i);
        // One word per doc keeps ids stable: doc_freq all 1, lexicographic order.
        char buf[32];
        std::snprintf(buf, sizeof(buf), "w%03zu", i);
        d.text = buf;
        docs.push_back(d);
    }
    return std::make_shared<const retrokit::Vocabulary>(retrokit::build_vocabulary(docs, 1));
}

inline RetrofitInstance random_retrofit_instance(std::mt19937_64& rng, bool constant_beta) {
    // Total rows (words + 2 specials) stay within n <= 20.
    std::uniform_int_distribution<std::size_t> n_dist(3, 18);
    std::uniform_int_distribution<std::size_t> d_dist(1, 8);
    std::uniform_real_distribution<double> w_dist(-1.0, 1.0);
    std::uniform_real_distribution<double> p_dist(0.0, 1.0);

    RetrofitInstance inst;
    const std::size_t n_words = n_dist(rng);
    const std::size_t dim = d_dist(rng);
    auto vocab = synthetic_vocab(n_words);
    inst.original = retrokit::EmbeddingMatrix(vocab, dim);
    for (std::size_t i = 1; i < inst.original.rows(); ++i) {
        for (double& v : inst.original.row(i)) v = w_dist(rng);
    }

    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 2; i < vocab->size(); ++i) {
        for (std::uint32_t j = i + 1; j < vocab->size(); ++j) {
            if (p_dist(rng) < 0.25) edges.emplace(i, j);
        }
    }
    inst.graph = retrokit::KnowledgeGraph(vocab->size(), edges);
    inst.cfg.alpha = 0.5 + 1.5 * p_dist(rng);
    inst.cfg.beta_scheme =
        constant_beta ? retrokit::BetaScheme::constant : retrokit::BetaScheme::inv_degree;
    inst.cfg.iterations = 2000;
    inst.cfg.tolerance = 1e-11;
    return inst;
}

// Brute-force F1 oracle: explicit per-class tp/fp/fn loops. Shares only
// the final one-division F1 formula with the implementation; all
// counting is independent.
struct BruteCounts {
    long long tp = 0, fp = 0, fn = 0;
};

inline BruteCounts brute_counts(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                int cls) {
    BruteCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == cls && y_pred[i] == cls) ++c.tp;
        if (y_true[i] != cls && y_pred[i] == cls) ++c.fp;
        if (y_true[i] == cls && y_pred[i] != cls) ++c.fn;
    }
    return c;
}

inline double brute_f1(const BruteCounts& c) {
    long long denom = 2 * c.tp + c.fp + c.fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

inline double brute_micro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                             int class_count) {
    BruteCounts pooled;
    for (int cls = 0; cls < class_count; ++cls) {
        BruteCounts c = brute_counts(y_true, y_pred, cls);
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
    }
    return brute_f1(pooled);
}

inline double brute_macro_f1(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                             int class_count) {
    double sum = 0.0;
    int observed = 0;
    for (int cls = 0; cls < class_count; ++cls) {
        bool seen = false;
        for (std::size_t i = 0; i < y_true.size() && !seen; ++i) {
            seen = y_true[i] == cls || y_pred[i] == cls;
        }
        if (!seen) continue;
        sum += brute_f1(brute_counts(y_true, y_pred, cls));
        ++observed;
    }
    return observed == 0 ? 0.0 : sum / observed;
}

inline double brute_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    long long correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y_true.size());
}

}  // namespace testsupport

#include "retrokit/retrofit.hpp"

#include <algorithm>
#include <cmath>

#include "retrokit/common.hpp"

namespace retrokit {

namespace {

bool is_special(std::size_t i) {
    return Vocabulary::is_special(static_cast<std::int32_t>(i));
}

// Attachment term plus one term per undirected edge weighted by the
// mean of the two directed betas. Equal to the ordered-pair objective
// minus one edge-term copy when beta is symmetric; this is the quantity
// each Eq.-2-style coordinate update minimizes exactly in that case,
// hence the per-sweep monotonicity guarantee.
double sweep_energy(const EmbeddingMatrix& original, const EmbeddingMatrix& current,
                    const KnowledgeGraph& g, const RetrofitConfig& cfg) {
    const std::size_t d = original.dim;
    double total = 0.0;
    for (std::size_t i = 0; i < original.rows(); ++i) {
        auto w = original.row(i);
        auto what = current.row(i);
        double dist = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double diff = what[c] - w[c];
            dist += diff * diff;
        }
        total += cfg.alpha * dist;
    }
    for (const auto& [a, b] : g.edges()) {
        double beta = 0.5 * (cfg.beta(g, a) + cfg.beta(g, b));
        auto wa = current.row(a);
        auto wb = current.row(b);
        double dist = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double diff = wa[c] - wb[c];
            dist += diff * diff;
        }
        total += beta * dist;
    }
    return total;
}

}  // namespace

BetaScheme parse_beta_scheme(const std::string& s) {
    if (s == "inv-degree") return BetaScheme::inv_degree;
    if (s == "const") return BetaScheme::constant;
    throw InputError("unknown beta scheme '" + s + "' (expected inv-degree or const)");
}

std::string beta_scheme_name(BetaScheme s) {
    return s == BetaScheme::inv_degree ? "inv-degree" : "const";
}

double RetrofitConfig::beta(const KnowledgeGraph& g, std::size_t i) const {
    if (beta_scheme == BetaScheme::constant) return 1.0;
    std::size_t deg = g.degree(i);
    return deg == 0 ? 0.0 : 1.0 / static_cast<double>(deg);
}

void RetrofitConfig::validate(const KnowledgeGraph& g) const {
    if (alpha < 0.0) throw std::invalid_argument("retrofit: alpha must be >= 0");
    if (iterations < 1) throw std::invalid_argument("retrofit: iterations must be >= 1");
    if (tolerance < 0.0) throw std::invalid_argument("retrofit: tolerance must be >= 0");
    if (alpha == 0.0) {
        for (std::size_t i = 2; i < g.n_vocab(); ++i) {
            if (g.degree(i) == 0) {
                throw std::invalid_argument(
                    "retrofit: alpha = 0 with isolated words leaves the update undefined");
            }
        }
    }
}

double objective(const EmbeddingMatrix& original, const EmbeddingMatrix& retrofitted,
                 const KnowledgeGraph& g, const RetrofitConfig& cfg) {
    if (original.dim != retrofitted.dim || original.rows() != retrofitted.rows()) {
        throw std::invalid_argument("retrofit objective: shape mismatch");
    }
    const std::size_t d = original.dim;
    double total = 0.0;
    for (std::size_t i = 0; i < original.rows(); ++i) {
        auto w = original.row(i);
        auto what = retrofitted.row(i);
        double dist = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double diff = what[c] - w[c];
            dist += diff * diff;
        }
        total += cfg.alpha * dist;
        double edge_term = 0.0;
        double beta_i = cfg.beta(g, i);
        for (std::uint32_t j : g.neighbors(i)) {
            auto wj = retrofitted.row(j);
            double edist = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                double diff = what[c] - wj[c];
                edist += diff * diff;
            }
            edge_term += beta_i * edist;
        }
        total += edge_term;
    }
    return total;
}

std::vector<double> update_word(std::size_t i, const EmbeddingMatrix& original,
                                const EmbeddingMatrix& retrofitted, const KnowledgeGraph& g,
                                const RetrofitConfig& cfg) {
    const std::size_t d = original.dim;
    auto w = original.row(i);
    if (g.degree(i) == 0) {
        if (cfg.alpha <= 0.0) {
            throw std::invalid_argument("retrofit: update undefined for isolated word with alpha = 0");
        }
        return std::vector<double>(w.begin(), w.end());
    }
    double beta_i = cfg.beta(g, i);
    std::vector<double> acc(d, 0.0);
    double denom = cfg.alpha;
    for (std::uint32_t j : g.neighbors(i)) {
        auto wj = retrofitted.row(j);
        for (std::size_t c = 0; c < d; ++c) acc[c] += beta_i * wj[c];
        denom += beta_i;
    }
    for (std::size_t c = 0; c < d; ++c) acc[c] = (acc[c] + cfg.alpha * w[c]) / denom;
    return acc;
}

RetrofitResult retrofit(const EmbeddingMatrix& original, const KnowledgeGraph& g,
                        const RetrofitConfig& cfg) {
    if (g.n_vocab() != original.rows()) {
        throw std::invalid_argument("retrofit: graph size does not match embedding rows");
    }
    cfg.validate(g);
    for (double v : original.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("retrofit: non-finite input embedding");
    }
    for (std::size_t s = 0; s < 2 && s < g.n_vocab(); ++s) {
        if (g.degree(s) != 0) {
            throw std::invalid_argument("retrofit: special tokens must not be graph nodes");
        }
    }

    RetrofitResult result;
    result.embeddings = original;  // initialized to W
    EmbeddingMatrix& what = result.embeddings;
    result.objective_trace.push_back(sweep_energy(original, what, g, cfg));

    const std::size_t d = original.dim;
    for (std::size_t sweep = 0; sweep < cfg.iterations; ++sweep) {
        double max_change = 0.0;
        for (std::size_t i = 0; i < what.rows(); ++i) {
            if (is_special(i) || g.degree(i) == 0) continue;
            std::vector<double> updated = update_word(i, original, what, g, cfg);
            auto row = what.row(i);
            double change = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                change = std::max(change, std::abs(updated[c] - row[c]));
                row[c] = updated[c];
            }
            max_change = std::max(max_change, change);
        }
        ++result.sweeps_run;
        result.objective_trace.push_back(sweep_energy(original, what, g, cfg));
        if (cfg.tolerance > 0.0 && max_change < cfg.tolerance) break;
    }
    return result;
}

}  // namespace retrokit

#include "retrokit/sgns.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "retrokit/common.hpp"

namespace retrokit {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Negative-sampling table: unigram frequency raised to 0.75, specials
// excluded. Sampled via binary search over the cumulative weights.
class NegativeSampler {
public:
    NegativeSampler(const std::vector<std::int64_t>& counts) {
        cumulative_.resize(counts.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (!Vocabulary::is_special(static_cast<std::int32_t>(i)) && counts[i] > 0) {
                acc += std::pow(static_cast<double>(counts[i]), 0.75);
            }
            cumulative_[i] = acc;
        }
        total_ = acc;
    }

    bool empty() const { return total_ <= 0.0; }

    std::int32_t sample(std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> u(0.0, total_);
        double x = u(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
        if (it == cumulative_.end()) --it;
        return static_cast<std::int32_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

}  // namespace

void SgnsConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("sgns: dim must be >= 1");
    if (window < 1) throw std::invalid_argument("sgns: window must be >= 1");
    if (epochs < 1) throw std::invalid_argument("sgns: epochs must be >= 1");
    if (lr_initial <= 0.0) throw std::invalid_argument("sgns: learning rate must be positive");
    if (subsample < 0.0) throw std::invalid_argument("sgns: subsample threshold must be >= 0");
}

SgnsResult train_sgns(const std::vector<EncodedDocument>& docs,
                      std::shared_ptr<const Vocabulary> vocab, const SgnsConfig& cfg) {
    cfg.validate();
    if (docs.empty()) throw InputError("sgns: no documents");
    const std::size_t n = vocab->size();
    const std::size_t d = cfg.dim;

    // Strip PAD up front; windows are defined over the surviving tokens.
    std::vector<std::vector<std::int32_t>> streams;
    streams.reserve(docs.size());
    std::vector<std::int64_t> counts(n, 0);
    std::int64_t total_tokens = 0;
    for (const auto& doc : docs) {
        std::vector<std::int32_t> s;
        s.reserve(doc.token_ids.size());
        for (std::int32_t id : doc.token_ids) {
            if (id == Vocabulary::kPadId) continue;
            if (id < 0 || static_cast<std::size_t>(id) >= n) {
                throw InputError("sgns: token id " + std::to_string(id) + " outside vocabulary");
            }
            s.push_back(id);
            ++counts[static_cast<std::size_t>(id)];
            ++total_tokens;
        }
        if (!s.empty()) streams.push_back(std::move(s));
    }
    if (total_tokens == 0) throw InputError("sgns: corpus has no non-PAD tokens");

    std::mt19937_64 rng(cfg.seed);

    // Input vectors uniform in [-0.5/d, 0.5/d], context vectors zero,
    // PAD row pinned to zero.
    EmbeddingMatrix emb(vocab, d);
    {
        std::uniform_real_distribution<double> u(-0.5 / static_cast<double>(d),
                                                 0.5 / static_cast<double>(d));
        for (std::size_t i = 1; i < n; ++i) {
            for (double& v : emb.row(i)) v = u(rng);
        }
    }
    std::vector<double> ctx(n * d, 0.0);

    NegativeSampler sampler(counts);
    std::vector<std::int32_t> targets(cfg.negatives + 1);
    std::vector<double> grad_center(d);

    const double total_steps =
        static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens);
    std::int64_t processed = 0;

    SgnsResult result;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::int64_t pair_count = 0;
        for (const auto& stream : streams) {
            for (std::size_t pos = 0; pos < stream.size(); ++pos) {
                ++processed;
                std::int32_t center = stream[pos];
                if (cfg.subsample > 0.0) {
                    double freq = static_cast<double>(counts[static_cast<std::size_t>(center)]) /
                                  static_cast<double>(total_tokens);
                    double keep = std::sqrt(cfg.subsample / freq) + cfg.subsample / freq;
                    if (keep < 1.0 && unit(rng) > keep) continue;
                }
                double lr = std::max(cfg.lr_floor,
                                     cfg.lr_initial * (1.0 - static_cast<double>(processed) / (total_steps + 1.0)));
                std::size_t shrink = 1 + rng() % cfg.window;
                std::size_t lo = pos >= shrink ? pos - shrink : 0;
                std::size_t hi = std::min(stream.size() - 1, pos + shrink);
                auto v_center = emb.row(static_cast<std::size_t>(center));
                for (std::size_t cpos = lo; cpos <= hi; ++cpos) {
                    if (cpos == pos) continue;
                    std::int32_t context = stream[cpos];
                    // One positive target plus sampled negatives; draws
                    // colliding with the positive are dropped.
                    targets[0] = context;
                    std::size_t n_targets = 1;
                    for (std::size_t k = 0; k < cfg.negatives && !sampler.empty(); ++k) {
                        std::int32_t neg = sampler.sample(rng);
                        if (neg == context) continue;
                        targets[n_targets++] = neg;
                    }
                    std::fill(grad_center.begin(), grad_center.end(), 0.0);
                    double pair_loss = 0.0;
                    for (std::size_t t = 0; t < n_targets; ++t) {
                        double* u_t = ctx.data() + static_cast<std::size_t>(targets[t]) * d;
                        double score = 0.0;
                        for (std::size_t c = 0; c < d; ++c) score += v_center[c] * u_t[c];
                        double label = t == 0 ? 1.0 : 0.0;
                        double sig = sigmoid(score);
                        pair_loss += t == 0 ? -std::log(std::max(sig, 1e-300))
                                            : -std::log(std::max(1.0 - sig, 1e-300));
                        double g = (sig - label) * lr;
                        for (std::size_t c = 0; c < d; ++c) {
                            grad_center[c] += g * u_t[c];
                            u_t[c] -= g * v_center[c];
                        }
                    }
                    for (std::size_t c = 0; c < d; ++c) v_center[c] -= grad_center[c];
                    loss_sum += pair_loss;
                    ++pair_count;
                }
            }
        }
        result.epoch_loss.push_back(pair_count > 0 ? loss_sum / static_cast<double>(pair_count) : 0.0);
    }

    check_embedding_health(emb, cfg.norm_bound);
    result.embeddings = std::move(emb);
    return result;
}

}  // namespace retrokit

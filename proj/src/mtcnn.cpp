#include "retrokit/mtcnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "retrokit/common.hpp"
#include "retrokit/metrics.hpp"
#include "json.hpp"

namespace retrokit {

namespace {

// 53-bit uniform in [0, 1); self-contained so results do not depend on
// the standard library's distribution internals.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct ForwardCache {
    std::vector<double> pooled;           // total_filters
    std::vector<std::int32_t> argmax;     // total_filters, position of the max window
    std::vector<std::vector<double>> probs;
    std::vector<double> lse_minus_true;   // per-task CE, 0 when masked
};

void check_doc(const ModelParams& params, const EncodedDocument& doc) {
    if (doc.token_ids.size() != params.config.doc_length) {
        throw std::invalid_argument("mtcnn: document '" + doc.id + "' has length " +
                                    std::to_string(doc.token_ids.size()) + ", model expects " +
                                    std::to_string(params.config.doc_length));
    }
    for (std::int32_t id : doc.token_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_rows) {
            throw std::invalid_argument("mtcnn: token id out of range in document '" + doc.id + "'");
        }
    }
}

// Shared trunk: per window size, ReLU convolution activations maxed
// over positions, concatenated across windows.
void forward_trunk(const ModelParams& params, const EncodedDocument& doc, ForwardCache& cache) {
    const auto& cfg = params.config;
    const std::size_t d = cfg.dim;
    const std::size_t L = cfg.doc_length;
    const std::size_t F = cfg.filters_per_window;
    cache.pooled.assign(cfg.total_filters(), 0.0);
    cache.argmax.assign(cfg.total_filters(), 0);

    std::vector<double> act(F);
    for (std::size_t w = 0; w < cfg.window_sizes.size(); ++w) {
        const std::size_t k = cfg.window_sizes[w];
        const auto& block = params.tensors.conv[w];
        double* pooled = cache.pooled.data() + w * F;
        std::int32_t* argmax = cache.argmax.data() + w * F;
        std::fill_n(pooled, F, -1.0);  // below any ReLU output
        for (std::size_t p = 0; p + k <= L; ++p) {
            std::copy(block.bias.begin(), block.bias.end(), act.begin());
            for (std::size_t t = 0; t < k; ++t) {
                const double* row =
                    params.tensors.embedding.data() + static_cast<std::size_t>(doc.token_ids[p + t]) * d;
                const double* kern = block.kernel.data() + t * d * F;
                for (std::size_t c = 0; c < d; ++c) {
                    const double x = row[c];
                    if (x == 0.0) continue;  // PAD rows are all zero
                    const double* kf = kern + c * F;
                    for (std::size_t f = 0; f < F; ++f) act[f] += x * kf[f];
                }
            }
            for (std::size_t f = 0; f < F; ++f) {
                double a = act[f] > 0.0 ? act[f] : 0.0;
                if (a > pooled[f]) {
                    pooled[f] = a;
                    argmax[f] = static_cast<std::int32_t>(p);
                }
            }
        }
        for (std::size_t f = 0; f < F; ++f) {
            if (pooled[f] < 0.0) pooled[f] = 0.0;  // window count 0 cannot happen; guard anyway
        }
    }
}

void forward_heads(const ModelParams& params, const ForwardCache& cache,
                   std::vector<std::vector<double>>& probs) {
    const auto& cfg = params.config;
    const std::size_t total_f = cfg.total_filters();
    probs.resize(cfg.tasks.size());
    for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
        const auto& head = params.tensors.heads[t];
        const std::size_t C = static_cast<std::size_t>(cfg.tasks[t].num_classes);
        std::vector<double>& z = probs[t];
        z.assign(head.bias.begin(), head.bias.end());
        for (std::size_t f = 0; f < total_f; ++f) {
            const double x = cache.pooled[f];
            if (x == 0.0) continue;
            const double* wrow = head.weight.data() + f * C;
            for (std::size_t c = 0; c < C; ++c) z[c] += x * wrow[c];
        }
        double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : z) v /= sum;
    }
}

double head_cross_entropy(const ModelParams& params, const ForwardCache& cache, std::size_t t,
                          int label, std::vector<double>& probs_out) {
    // log-sum-exp form: smooth, stable, no clamping.
    const auto& cfg = params.config;
    const auto& head = params.tensors.heads[t];
    const std::size_t C = static_cast<std::size_t>(cfg.tasks[t].num_classes);
    const std::size_t total_f = cfg.total_filters();
    std::vector<double> z(head.bias.begin(), head.bias.end());
    for (std::size_t f = 0; f < total_f; ++f) {
        const double x = cache.pooled[f];
        if (x == 0.0) continue;
        const double* wrow = head.weight.data() + f * C;
        for (std::size_t c = 0; c < C; ++c) z[c] += x * wrow[c];
    }
    double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    double lse = m + std::log(sum);
    probs_out.resize(C);
    for (std::size_t c = 0; c < C; ++c) probs_out[c] = std::exp(z[c] - lse);
    return lse - z[static_cast<std::size_t>(label)];
}

}  // namespace

void ModelConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("mtcnn: dim must be >= 1");
    if (doc_length < 1) throw std::invalid_argument("mtcnn: doc_length must be >= 1");
    if (window_sizes.empty()) throw std::invalid_argument("mtcnn: at least one window size required");
    for (std::size_t k : window_sizes) {
        if (k < 1 || k > doc_length) {
            throw std::invalid_argument("mtcnn: window size " + std::to_string(k) +
                                        " must be in [1, doc_length]");
        }
    }
    if (filters_per_window < 1) throw std::invalid_argument("mtcnn: filters_per_window must be >= 1");
    if (tasks.empty()) throw std::invalid_argument("mtcnn: at least one task required");
    for (const auto& t : tasks) {
        if (t.num_classes < 2) {
            throw std::invalid_argument("mtcnn: task '" + t.name + "' needs >= 2 classes");
        }
    }
    if (!task_weights.empty()) {
        if (task_weights.size() != tasks.size()) {
            throw std::invalid_argument("mtcnn: task_weights size mismatch");
        }
        double sum = 0.0;
        for (double w : task_weights) {
            if (w < 0.0) throw std::invalid_argument("mtcnn: task weights must be >= 0");
            sum += w;
        }
        if (sum == 0.0) throw std::invalid_argument("mtcnn: task weights must not all be zero");
    }
}

void ModelTensors::zero_like(const ModelTensors& other) {
    embedding.assign(other.embedding.size(), 0.0);
    conv.resize(other.conv.size());
    for (std::size_t i = 0; i < conv.size(); ++i) {
        conv[i].kernel.assign(other.conv[i].kernel.size(), 0.0);
        conv[i].bias.assign(other.conv[i].bias.size(), 0.0);
    }
    heads.resize(other.heads.size());
    for (std::size_t i = 0; i < heads.size(); ++i) {
        heads[i].weight.assign(other.heads[i].weight.size(), 0.0);
        heads[i].bias.assign(other.heads[i].bias.size(), 0.0);
    }
}

ModelParams init_params(const ModelConfig& config, const EmbeddingMatrix& emb) {
    config.validate();
    if (emb.dim != config.dim) {
        throw std::invalid_argument("mtcnn: embedding dim " + std::to_string(emb.dim) +
                                    " does not match model dim " + std::to_string(config.dim));
    }
    ModelParams params;
    params.config = config;
    params.vocab_rows = emb.rows();
    params.vocab_hash = emb.vocab->content_hash();
    params.tensors.embedding = emb.data;

    std::mt19937_64 rng(config.seed);
    auto glorot = [&](std::vector<double>& w, std::size_t fan_in, std::size_t fan_out) {
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
    };
    const std::size_t d = config.dim;
    const std::size_t F = config.filters_per_window;
    for (std::size_t k : config.window_sizes) {
        ConvBlock block;
        block.kernel.resize(k * d * F);
        // Small positive bias keeps all-PAD windows off the exact ReLU
        // kink, where the loss is not differentiable.
        block.bias.assign(F, 0.01);
        glorot(block.kernel, k * d, F);
        params.tensors.conv.push_back(std::move(block));
    }
    const std::size_t total_f = config.total_filters();
    for (const auto& task : config.tasks) {
        HeadBlock head;
        const std::size_t C = static_cast<std::size_t>(task.num_classes);
        head.weight.resize(total_f * C);
        head.bias.assign(C, 0.0);
        glorot(head.weight, total_f, C);
        params.tensors.heads.push_back(std::move(head));
    }
    return params;
}

std::vector<std::vector<double>> forward(const ModelParams& params, const EncodedDocument& doc) {
    check_doc(params, doc);
    ForwardCache cache;
    forward_trunk(params, doc, cache);
    std::vector<std::vector<double>> probs;
    forward_heads(params, cache, probs);
    return probs;
}

std::vector<double> pooled_features(const ModelParams& params, const EncodedDocument& doc) {
    check_doc(params, doc);
    ForwardCache cache;
    forward_trunk(params, doc, cache);
    return cache.pooled;
}

double loss(const ModelParams& params, const DocBatch& batch) {
    if (batch.empty()) throw std::invalid_argument("mtcnn: empty batch");
    const auto& cfg = params.config;
    double total = 0.0;
    ForwardCache cache;
    std::vector<double> probs;
    for (const EncodedDocument* doc : batch) {
        check_doc(params, *doc);
        if (doc->labels.size() != cfg.tasks.size()) {
            throw std::invalid_argument("mtcnn: document '" + doc->id + "' label vector mismatch");
        }
        forward_trunk(params, *doc, cache);
        for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
            if (!doc->labels[t]) continue;
            int y = *doc->labels[t];
            if (y < 0 || y >= cfg.tasks[t].num_classes) {
                throw std::invalid_argument("mtcnn: label index " + std::to_string(y) +
                                            " >= class count for task '" + cfg.tasks[t].name + "'");
            }
            total += cfg.task_weight(t) * head_cross_entropy(params, cache, t, y, probs);
        }
    }
    return total / static_cast<double>(batch.size());
}

ModelTensors backward(const ModelParams& params, const DocBatch& batch, double* batch_loss) {
    if (batch.empty()) throw std::invalid_argument("mtcnn: empty batch");
    const auto& cfg = params.config;
    const std::size_t d = cfg.dim;
    const std::size_t F = cfg.filters_per_window;
    const std::size_t total_f = cfg.total_filters();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    ModelTensors grads;
    grads.zero_like(params.tensors);

    ForwardCache cache;
    std::vector<double> probs;
    std::vector<double> dpooled(total_f);
    double total = 0.0;

    for (const EncodedDocument* doc : batch) {
        check_doc(params, *doc);
        if (doc->labels.size() != cfg.tasks.size()) {
            throw std::invalid_argument("mtcnn: document '" + doc->id + "' label vector mismatch");
        }
        forward_trunk(params, *doc, cache);
        std::fill(dpooled.begin(), dpooled.end(), 0.0);

        for (std::size_t t = 0; t < cfg.tasks.size(); ++t) {
            if (!doc->labels[t]) continue;
            int y = *doc->labels[t];
            if (y < 0 || y >= cfg.tasks[t].num_classes) {
                throw std::invalid_argument("mtcnn: label index " + std::to_string(y) +
                                            " >= class count for task '" + cfg.tasks[t].name + "'");
            }
            total += cfg.task_weight(t) * head_cross_entropy(params, cache, t, y, probs);
            const double scale = cfg.task_weight(t) * inv_batch;
            const std::size_t C = static_cast<std::size_t>(cfg.tasks[t].num_classes);
            const auto& head = params.tensors.heads[t];
            auto& ghead = grads.heads[t];
            // dlogits = (p - onehot) * scale, then through the affine map.
            for (std::size_t c = 0; c < C; ++c) {
                double dz = (probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * scale;
                ghead.bias[c] += dz;
            }
            for (std::size_t f = 0; f < total_f; ++f) {
                const double x = cache.pooled[f];
                const double* wrow = head.weight.data() + f * C;
                double* gwrow = ghead.weight.data() + f * C;
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    double dz = (probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0)) * scale;
                    gwrow[c] += dz * x;
                    acc += dz * wrow[c];
                }
                dpooled[f] += acc;
            }
        }

        // Through max-pool (gradient to the argmax window only) and ReLU
        // (zero when the pooled activation is zero).
        for (std::size_t w = 0; w < cfg.window_sizes.size(); ++w) {
            const std::size_t k = cfg.window_sizes[w];
            const auto& block = params.tensors.conv[w];
            auto& gblock = grads.conv[w];
            for (std::size_t f = 0; f < F; ++f) {
                const std::size_t fi = w * F + f;
                const double g = dpooled[fi];
                if (g == 0.0 || cache.pooled[fi] <= 0.0) continue;
                const std::size_t p = static_cast<std::size_t>(cache.argmax[fi]);
                gblock.bias[f] += g;
                for (std::size_t t = 0; t < k; ++t) {
                    const std::int32_t tok = doc->token_ids[p + t];
                    const double* row = params.tensors.embedding.data() + static_cast<std::size_t>(tok) * d;
                    const double* kern = block.kernel.data() + t * d * F + f;
                    double* gkern = gblock.kernel.data() + t * d * F + f;
                    if (tok == Vocabulary::kPadId) {
                        // PAD row is frozen at zero: kernel still gets its
                        // (zero) input contribution, embedding does not.
                        continue;
                    }
                    double* grow = grads.embedding.data() + static_cast<std::size_t>(tok) * d;
                    for (std::size_t c = 0; c < d; ++c) {
                        gkern[c * F] += g * row[c];
                        grow[c] += g * kern[c * F];
                    }
                }
            }
        }
    }
    if (batch_loss) *batch_loss = total * inv_batch;
    return grads;
}

std::vector<std::vector<int>> predict(const ModelParams& params,
                                      const std::vector<EncodedDocument>& docs) {
    std::vector<std::vector<int>> out;
    out.reserve(docs.size());
    ForwardCache cache;
    std::vector<std::vector<double>> probs;
    for (const auto& doc : docs) {
        check_doc(params, doc);
        forward_trunk(params, doc, cache);
        forward_heads(params, cache, probs);
        std::vector<int> preds(params.config.tasks.size());
        for (std::size_t t = 0; t < probs.size(); ++t) {
            int best = 0;
            for (std::size_t c = 1; c < probs[t].size(); ++c) {
                if (probs[t][c] > probs[t][best]) best = static_cast<int>(c);
            }
            preds[t] = best;
        }
        out.push_back(std::move(preds));
    }
    return out;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("train: learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (lr_decay <= 0.0) throw std::invalid_argument("train: lr_decay must be positive");
    if (clip_norm < 0.0) throw std::invalid_argument("train: clip_norm must be >= 0");
}

TrainResult train(const ModelParams& initial, const std::vector<EncodedDocument>& train_docs,
                  const std::vector<EncodedDocument>& val_docs, const TrainConfig& cfg) {
    cfg.validate();
    if (train_docs.empty()) throw InputError("train: empty training set");

    TrainResult result;
    result.params = initial;
    if (cfg.epochs == 0) return result;

    ModelParams params = initial;
    ModelTensors velocity;
    velocity.zero_like(params.tensors);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t n_tasks = params.config.tasks.size();
    double best_metric = -std::numeric_limits<double>::infinity();
    std::size_t epochs_since_best = 0;
    double lr = cfg.learning_rate;

    auto validate_epoch = [&](EpochStats& stats) {
        stats.val_macro_f1.assign(n_tasks, std::numeric_limits<double>::quiet_NaN());
        if (val_docs.empty()) {
            stats.val_macro_mean = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        auto preds = predict(params, val_docs);
        double sum = 0.0;
        std::size_t counted = 0;
        for (std::size_t t = 0; t < n_tasks; ++t) {
            TaskPredictions tp;
            tp.task = params.config.tasks[t].name;
            tp.class_count = params.config.tasks[t].num_classes;
            for (std::size_t i = 0; i < val_docs.size(); ++i) {
                if (!val_docs[i].labels[t]) continue;
                tp.y_true.push_back(*val_docs[i].labels[t]);
                tp.y_pred.push_back(preds[i][t]);
            }
            if (tp.y_true.empty()) continue;
            stats.val_macro_f1[t] = macro_f1(tp);
            sum += stats.val_macro_f1[t];
            ++counted;
        }
        stats.val_macro_mean = counted > 0 ? sum / static_cast<double>(counted)
                                           : std::numeric_limits<double>::quiet_NaN();
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own uniform draws: deterministic given
        // the seed, independent of the library's std::shuffle.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(order[i - 1], order[j]);
        }
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            DocBatch batch;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
                batch.push_back(&train_docs[order[i]]);
            }
            double batch_loss = 0.0;
            ModelTensors grads = backward(params, batch, &batch_loss);
            loss_sum += batch_loss;
            ++n_batches;

            if (cfg.clip_norm > 0.0) {
                double norm_sq = 0.0;
                grads.for_each([&](std::vector<double>& buf) {
                    for (double v : buf) norm_sq += v * v;
                });
                if (norm_sq > cfg.clip_norm * cfg.clip_norm) {
                    double scale = cfg.clip_norm / std::sqrt(norm_sq);
                    grads.for_each([&](std::vector<double>& buf) {
                        for (double& v : buf) v *= scale;
                    });
                }
            }

            // SGD with momentum; the PAD embedding row never moves
            // (backward leaves its gradient at zero).
            auto step = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    v[i] = cfg.momentum * v[i] - lr * g[i];
                    p[i] += v[i];
                }
            };
            step(params.tensors.embedding, velocity.embedding, grads.embedding);
            for (std::size_t w = 0; w < params.tensors.conv.size(); ++w) {
                step(params.tensors.conv[w].kernel, velocity.conv[w].kernel, grads.conv[w].kernel);
                step(params.tensors.conv[w].bias, velocity.conv[w].bias, grads.conv[w].bias);
            }
            for (std::size_t h = 0; h < params.tensors.heads.size(); ++h) {
                step(params.tensors.heads[h].weight, velocity.heads[h].weight, grads.heads[h].weight);
                step(params.tensors.heads[h].bias, velocity.heads[h].bias, grads.heads[h].bias);
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = n_batches > 0 ? loss_sum / static_cast<double>(n_batches) : 0.0;
        validate_epoch(stats);
        result.history.push_back(stats);

        bool improved;
        if (val_docs.empty()) {
            improved = true;  // no validation signal: keep the latest
        } else {
            improved = stats.val_macro_mean > best_metric;
        }
        if (improved) {
            best_metric = stats.val_macro_mean;
            result.params = params;
            result.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (cfg.patience > 0 && epochs_since_best >= cfg.patience) break;
        }
        lr *= cfg.lr_decay;
    }
    return result;
}

namespace {

constexpr const char* kCheckpointMagic = "RETROKIT-CKPT-v1";

void write_buf(std::ofstream& out, const std::vector<double>& buf) {
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

void read_buf(std::ifstream& in, std::vector<double>& buf, std::size_t count, const std::string& path) {
    buf.resize(count);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
        throw InputError(path + ": truncated checkpoint tensor data");
    }
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint: " + path);
    nlohmann::ordered_json header;
    header["dim"] = params.config.dim;
    header["doc_length"] = params.config.doc_length;
    header["window_sizes"] = params.config.window_sizes;
    header["filters_per_window"] = params.config.filters_per_window;
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const auto& t : params.config.tasks) {
        tasks.push_back({{"name", t.name}, {"classes", t.num_classes}});
    }
    header["tasks"] = tasks;
    header["task_weights"] = params.config.task_weights;
    header["seed"] = params.config.seed;
    header["vocab_rows"] = params.vocab_rows;
    header["vocab_hash"] = params.vocab_hash;
    out << kCheckpointMagic << '\n' << header.dump() << '\n';
    write_buf(out, params.tensors.embedding);
    for (const auto& c : params.tensors.conv) {
        write_buf(out, c.kernel);
        write_buf(out, c.bias);
    }
    for (const auto& h : params.tensors.heads) {
        write_buf(out, h.weight);
        write_buf(out, h.bias);
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path);
    std::string magic, header_line;
    if (!std::getline(in, magic) || magic != kCheckpointMagic) {
        throw InputError(path + ": not a retrokit checkpoint (bad magic)");
    }
    if (!std::getline(in, header_line)) throw InputError(path + ": missing checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const std::exception& e) {
        throw InputError(path + ": malformed checkpoint header: " + e.what());
    }

    ModelParams params;
    params.config.dim = header.at("dim").get<std::size_t>();
    params.config.doc_length = header.at("doc_length").get<std::size_t>();
    params.config.window_sizes = header.at("window_sizes").get<std::vector<std::size_t>>();
    params.config.filters_per_window = header.at("filters_per_window").get<std::size_t>();
    params.config.tasks.clear();
    for (const auto& t : header.at("tasks")) {
        params.config.tasks.push_back({t.at("name").get<std::string>(), t.at("classes").get<int>()});
    }
    params.config.task_weights = header.at("task_weights").get<std::vector<double>>();
    params.config.seed = header.at("seed").get<std::uint64_t>();
    params.vocab_rows = header.at("vocab_rows").get<std::size_t>();
    params.vocab_hash = header.at("vocab_hash").get<std::string>();
    params.config.validate();

    const std::size_t d = params.config.dim;
    const std::size_t F = params.config.filters_per_window;
    read_buf(in, params.tensors.embedding, params.vocab_rows * d, path);
    for (std::size_t k : params.config.window_sizes) {
        ConvBlock block;
        read_buf(in, block.kernel, k * d * F, path);
        read_buf(in, block.bias, F, path);
        params.tensors.conv.push_back(std::move(block));
    }
    const std::size_t total_f = params.config.total_filters();
    for (const auto& t : params.config.tasks) {
        HeadBlock head;
        read_buf(in, head.weight, total_f * static_cast<std::size_t>(t.num_classes), path);
        read_buf(in, head.bias, static_cast<std::size_t>(t.num_classes), path);
        params.tensors.heads.push_back(std::move(head));
    }
    char extra;
    if (in.read(&extra, 1)) throw InputError(path + ": trailing bytes after checkpoint tensors");
    return params;
}

}  // namespace retrokit

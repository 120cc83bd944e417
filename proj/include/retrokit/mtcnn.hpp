#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retrokit/embedding.hpp"

namespace retrokit {

struct TaskDef {
    std::string name;
    int num_classes = 0;
};

struct ModelConfig {
    std::size_t dim = 300;
    std::size_t doc_length = 3000;
    std::vector<std::size_t> window_sizes = {3, 4, 5};
    std::size_t filters_per_window = 300;
    std::vector<TaskDef> tasks = {{"site", 70},    {"subsite", 324}, {"laterality", 7},
                                  {"behavior", 4}, {"histology", 572}, {"grade", 9}};
    std::vector<double> task_weights;  // empty = all 1.0
    std::uint64_t seed = 1;

    std::size_t total_filters() const { return window_sizes.size() * filters_per_window; }
    double task_weight(std::size_t t) const { return task_weights.empty() ? 1.0 : task_weights[t]; }
    void validate() const;
};

// One shared convolution trunk, one affine+softmax head per task.
// Kernel layout [t][c][f] -> (t*dim + c)*filters + f; head weight layout
// [feature][class] -> f*classes + c.
struct ConvBlock {
    std::vector<double> kernel;
    std::vector<double> bias;
};

struct HeadBlock {
    std::vector<double> weight;
    std::vector<double> bias;
};

struct ModelTensors {
    std::vector<double> embedding;  // n x dim
    std::vector<ConvBlock> conv;    // one per window size
    std::vector<HeadBlock> heads;   // one per task

    void zero_like(const ModelTensors& other);
    // Visit every tensor buffer in a fixed order.
    template <typename F>
    void for_each(F&& f) {
        f(embedding);
        for (auto& c : conv) {
            f(c.kernel);
            f(c.bias);
        }
        for (auto& h : heads) {
            f(h.weight);
            f(h.bias);
        }
    }
};

struct ModelParams {
    ModelConfig config;
    std::size_t vocab_rows = 0;
    std::string vocab_hash;
    ModelTensors tensors;
};

// Embedding table copied from `emb` (trainable; PAD row stays frozen at
// zero), kernels and heads Glorot-uniform from the config seed, biases
// zero.
ModelParams init_params(const ModelConfig& config, const EmbeddingMatrix& emb);

using DocBatch = std::vector<const EncodedDocument*>;

// Per-task probability vectors for one document.
std::vector<std::vector<double>> forward(const ModelParams& params, const EncodedDocument& doc);

// Concatenated max-pooled trunk activations (length total_filters()).
std::vector<double> pooled_features(const ModelParams& params, const EncodedDocument& doc);

// Mean over the batch of the weighted per-task cross-entropies; tasks
// with absent labels contribute zero.
double loss(const ModelParams& params, const DocBatch& batch);

// Exact analytic gradients of `loss` for every parameter group.
ModelTensors backward(const ModelParams& params, const DocBatch& batch, double* batch_loss = nullptr);

// Argmax of each head, ties broken by lowest class index.
std::vector<std::vector<int>> predict(const ModelParams& params,
                                      const std::vector<EncodedDocument>& docs);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double lr_decay = 1.0;    // per-epoch multiplier
    double clip_norm = 5.0;   // global gradient-norm clip; 0 disables
    std::size_t patience = 0;  // early stop on mean validation macro-F1; 0 disables
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::vector<double> val_macro_f1;  // per task, NaN when no labels
    double val_macro_mean = 0.0;
};

struct TrainResult {
    ModelParams params;  // best-validation epoch
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
};

TrainResult train(const ModelParams& initial, const std::vector<EncodedDocument>& train_docs,
                  const std::vector<EncodedDocument>& val_docs, const TrainConfig& cfg);

// Versioned binary checkpoint: magic line, JSON header (config,
// vocab hash, tensor manifest), then raw little-endian doubles.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace retrokit

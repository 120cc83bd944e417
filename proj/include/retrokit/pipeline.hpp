#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retrokit/corpus.hpp"
#include "retrokit/kgraph.hpp"
#include "retrokit/metrics.hpp"
#include "retrokit/mtcnn.hpp"
#include "retrokit/retrofit.hpp"
#include "retrokit/sgns.hpp"
#include "retrokit/synth.hpp"

namespace retrokit {

// Encoded corpus on disk: JSONL with a header line carrying the encoding
// length, the vocabulary hash and the task schema, then one document per
// line.
struct EncodedCorpus {
    std::size_t length = 0;
    std::string vocab_hash;
    std::vector<TaskDef> tasks;
    std::vector<EncodedDocument> docs;

    std::vector<EncodedDocument> split(Split s) const;
};

void save_encoded_corpus(const EncodedCorpus& corpus, const std::string& path);
EncodedCorpus load_encoded_corpus(const std::string& path);

// Stage artifacts carry the vocabulary hash; refuses silently
// inconsistent combinations.
void require_vocab_hash(const std::string& expected, const std::string& actual,
                        const std::string& what);

struct PreprocessArgs {
    std::string corpus_path;
    std::string schema_path;
    std::string out_vocab;
    std::string out_encoded;
    std::int64_t min_df = 5;
    std::size_t length = 3000;
};

struct PreprocessStats {
    std::size_t documents = 0;
    std::size_t vocab_size = 0;
    std::string vocab_hash;
};

PreprocessStats run_preprocess(const PreprocessArgs& args);

struct EmbedArgs {
    std::string vocab_path;
    std::string encoded_path;
    std::string out_embeddings;
    SgnsConfig sgns;
};

void run_embed(const EmbedArgs& args);

struct GraphArgs {
    std::string vocab_path;
    std::string concepts_path;
    std::string out_edges;
    std::string out_stats;
    bool first_name_only = false;
};

void run_graph(const GraphArgs& args);

struct RetrofitStageArgs {
    std::string vocab_path;
    std::string embeddings_path;
    std::string edges_path;
    std::string out_embeddings;
    std::string out_trace;
    RetrofitConfig cfg;
};

void run_retrofit(const RetrofitStageArgs& args);

struct TrainStageArgs {
    std::string vocab_path;
    std::string encoded_path;
    std::string embeddings_path;
    std::string out_checkpoint;
    std::string out_history;
    std::vector<std::size_t> window_sizes = {3, 4, 5};
    std::size_t filters_per_window = 300;
    std::vector<double> task_weights;  // empty = all 1.0
    TrainConfig train_cfg;
    std::uint64_t seed = 1;
};

void run_train(const TrainStageArgs& args);

struct EvalArgs {
    std::string encoded_path;
    std::string model_a;
    std::string model_b;  // optional second checkpoint for comparison
    std::string out_report;
    std::string out_tsv;  // optional summary table
    Split eval_split = Split::test;
    std::size_t resamples = 1000;
    double level = 0.95;
    double strata_quantile = 0.1;
    MacroUniverse macro_universe = MacroUniverse::observed;
    std::uint64_t seed = 1;
};

void run_eval(const EvalArgs& args);

struct SynthStageArgs {
    SynthConfig cfg;
    SynthPaths paths;
};

void run_synth(const SynthStageArgs& args);

}  // namespace retrokit

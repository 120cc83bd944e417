#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace retrokit {

// Desk-scale benchmark generator. Each (task, class) pair gets a cue-word
// synonym group; documents are filler text plus cue repetitions for their
// labels. Train/validation documents always use the first group member;
// test documents for substituted classes use the second, so a model can
// only recover them through the concept-file link between the variants.
struct SynthConfig {
    // task name -> class count; the six-task schema at reduced sizes.
    std::vector<std::pair<std::string, int>> tasks = {
        {"site", 6}, {"subsite", 8}, {"laterality", 3},
        {"behavior", 3}, {"histology", 8}, {"grade", 4}};
    std::size_t train_docs = 5000;
    std::size_t val_docs = 500;
    std::size_t test_docs = 1000;
    std::size_t doc_tokens = 60;       // tokens per document
    std::size_t cue_repeats = 4;       // cue occurrences per task per document
    std::size_t filler_words = 200;
    std::size_t synonym_group_size = 2;
    bool substitution = true;          // test docs swap cues for classes >= 1
    double class_decay = 0.65;         // class prevalence ~ decay^class
    std::uint64_t seed = 1;

    void validate() const;
};

struct SynthPaths {
    std::string corpus_jsonl;
    std::string concepts_tsv;
    std::string schema_json;
};

void generate_synthetic(const SynthConfig& cfg, const SynthPaths& paths);

}  // namespace retrokit

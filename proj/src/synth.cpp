#include "retrokit/synth.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "retrokit/common.hpp"
#include "json.hpp"

namespace retrokit {

namespace {

std::string cue_word(const std::string& task, int cls, std::size_t variant) {
    return task + std::to_string(cls) + std::string(1, static_cast<char>('a' + variant));
}

std::string filler_word(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "filler%03zu", i);
    return buf;
}

}  // namespace

void SynthConfig::validate() const {
    if (tasks.empty()) throw InputError("synth: at least one task required");
    for (const auto& [name, classes] : tasks) {
        if (classes < 2) throw InputError("synth: task '" + name + "' needs >= 2 classes");
    }
    if (train_docs == 0 || test_docs == 0) throw InputError("synth: train and test docs must be > 0");
    if (synonym_group_size < 2) throw InputError("synth: synonym groups smaller than 2");
    if (doc_tokens < tasks.size() * cue_repeats) {
        throw InputError("synth: doc_tokens too small for cue_repeats * tasks");
    }
    if (filler_words == 0) throw InputError("synth: filler_words must be > 0");
    if (class_decay <= 0.0 || class_decay > 1.0) throw InputError("synth: class_decay must be in (0, 1]");
}

void generate_synthetic(const SynthConfig& cfg, const SynthPaths& paths) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);

    // Schema file.
    {
        nlohmann::ordered_json schema;
        for (const auto& [name, classes] : cfg.tasks) {
            nlohmann::ordered_json labels = nlohmann::ordered_json::array();
            for (int c = 0; c < classes; ++c) labels.push_back(name + "_" + std::to_string(c));
            schema[name] = labels;
        }
        std::ofstream out(paths.schema_json);
        if (!out) throw InputError("cannot write schema: " + paths.schema_json);
        out << schema.dump(2) << '\n';
    }

    // Concept file: one CUI per (task, class), one row per synonym-group
    // member, sources rotated to give the per-source breakdown something
    // to count.
    {
        static const char* kSources[] = {"SNOMEDCT", "NCI", "ICD10"};
        std::ofstream out(paths.concepts_tsv);
        if (!out) throw InputError("cannot write concepts: " + paths.concepts_tsv);
        std::size_t cui_counter = 0;
        for (const auto& [name, classes] : cfg.tasks) {
            for (int c = 0; c < classes; ++c) {
                std::string cui = "C" + std::to_string(1000000 + cui_counter++);
                for (std::size_t v = 0; v < cfg.synonym_group_size; ++v) {
                    out << cui << '\t' << kSources[(cui_counter + v) % 3] << '\t'
                        << cue_word(name, c, v) << '\n';
                }
            }
        }
    }

    // Corpus. Class draws follow a geometric-style prevalence profile so
    // rare classes exist, mirroring the registry-style imbalance.
    std::ofstream out(paths.corpus_jsonl);
    if (!out) throw InputError("cannot write corpus: " + paths.corpus_jsonl);

    auto draw_class = [&](int classes) {
        std::vector<double> weights(static_cast<std::size_t>(classes));
        double w = 1.0;
        for (int c = 0; c < classes; ++c) {
            weights[static_cast<std::size_t>(c)] = w;
            w *= cfg.class_decay;
        }
        std::discrete_distribution<int> dist(weights.begin(), weights.end());
        return dist(rng);
    };

    const std::size_t total = cfg.train_docs + cfg.val_docs + cfg.test_docs;
    std::vector<std::size_t> positions(cfg.doc_tokens);
    for (std::size_t doc_i = 0; doc_i < total; ++doc_i) {
        const bool is_test = doc_i >= cfg.train_docs + cfg.val_docs;
        const bool is_val = !is_test && doc_i >= cfg.train_docs;

        std::vector<std::string> tokens(cfg.doc_tokens);
        for (auto& tok : tokens) tok = filler_word(rng() % cfg.filler_words);

        for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
        for (std::size_t i = positions.size(); i > 1; --i) {
            std::swap(positions[i - 1], positions[rng() % i]);
        }

        nlohmann::ordered_json labels;
        std::size_t next_slot = 0;
        for (const auto& [name, classes] : cfg.tasks) {
            int cls = draw_class(classes);
            labels[name] = name + "_" + std::to_string(cls);
            // Class 0 keeps its training cue everywhere; other classes
            // switch to the second synonym in the test split.
            std::size_t variant = (is_test && cfg.substitution && cls >= 1) ? 1 : 0;
            for (std::size_t r = 0; r < cfg.cue_repeats; ++r) {
                tokens[positions[next_slot++]] = cue_word(name, cls, variant);
            }
        }

        std::string text;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) text += ' ';
            text += tokens[i];
        }

        std::string date;
        if (is_test) {
            date = "2018-" + std::string(doc_i % 12 < 9 ? "0" : "") + std::to_string(doc_i % 12 + 1) + "-15";
        } else {
            date = "2015-" + std::string(doc_i % 12 < 9 ? "0" : "") + std::to_string(doc_i % 12 + 1) + "-15";
        }

        nlohmann::ordered_json j;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "synth-%06zu", doc_i);
        j["id"] = idbuf;
        j["text"] = text;
        j["date"] = date;
        j["labels"] = labels;
        j["split"] = is_test ? "test" : (is_val ? "validation" : "train");
        out << j.dump() << '\n';
    }
}

}  // namespace retrokit

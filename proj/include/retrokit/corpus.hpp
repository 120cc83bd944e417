#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace retrokit {

enum class Split { train, validation, test };

std::string split_name(Split s);
Split parse_split(const std::string& s);

struct RawDocument {
    std::string id;
    std::string text;
    std::map<std::string, std::string> labels;  // task name -> class-label string
    std::optional<std::string> date;            // ISO-8601, used for the split check
    Split split = Split::train;
};

// Ordered list of (task name, ordered class labels). Task order is the
// order of the schema file and fixes label-vector layout everywhere.
class TaskSchema {
public:
    struct Task {
        std::string name;
        std::vector<std::string> classes;
        std::unordered_map<std::string, int> class_index;
    };

    static TaskSchema from_json_file(const std::string& path);
    static TaskSchema from_pairs(const std::vector<std::pair<std::string, std::vector<std::string>>>& tasks);

    const std::vector<Task>& tasks() const { return tasks_; }
    std::size_t size() const { return tasks_.size(); }
    const Task& task(std::size_t i) const { return tasks_[i]; }
    // -1 when the task name is unknown.
    int task_index(const std::string& name) const;

private:
    std::vector<Task> tasks_;
};

class Vocabulary {
public:
    static constexpr std::int32_t kPadId = 0;
    static constexpr std::int32_t kUnkId = 1;
    static constexpr const char* kPadWord = "<pad>";
    static constexpr const char* kUnkWord = "<unk>";

    Vocabulary();

    std::size_t size() const { return words_.size(); }
    const std::string& word(std::int32_t id) const { return words_[static_cast<std::size_t>(id)]; }
    std::int64_t doc_freq(std::int32_t id) const { return doc_freq_[static_cast<std::size_t>(id)]; }
    // -1 when the word is not in the vocabulary.
    std::int32_t id(const std::string& word) const;
    bool contains(const std::string& word) const { return id(word) >= 0; }
    static bool is_special(std::int32_t id) { return id == kPadId || id == kUnkId; }

    // Stable content hash over the id-ordered word/doc_freq table; stage
    // artifacts carry it so the pipeline can refuse mismatched inputs.
    std::string content_hash() const;

    void save_tsv(const std::string& path) const;
    static Vocabulary load_tsv(const std::string& path);

    // Words with document frequency >= min_df, id order: doc_freq
    // descending, ties lexicographic, after the two special tokens.
    friend Vocabulary build_vocabulary(const std::vector<RawDocument>& docs, std::int64_t min_df);

private:
    void append(const std::string& word, std::int64_t df);

    std::vector<std::string> words_;
    std::vector<std::int64_t> doc_freq_;
    std::unordered_map<std::string, std::int32_t> index_;
};

struct EncodedDocument {
    std::string id;
    std::vector<std::int32_t> token_ids;            // exactly `length` entries
    std::vector<std::optional<std::int32_t>> labels;  // schema task order; nullopt = absent
    Split split = Split::train;
};

// Strips <...> spans, lowercases, and emits maximal alphanumeric runs.
std::vector<std::string> tokenize(const std::string& text);

Vocabulary build_vocabulary(const std::vector<RawDocument>& docs, std::int64_t min_df = 5);

EncodedDocument encode_document(const RawDocument& doc, const Vocabulary& vocab,
                                const TaskSchema& schema, std::size_t length = 3000);

// JSON Lines corpus: one object per line with fields id, text, optional
// date, optional labels object, optional split.
std::vector<RawDocument> load_corpus_jsonl(const std::string& path);

// Every test document's date must be strictly later than every
// train/validation date. Documents without dates are ignored.
void validate_date_split(const std::vector<RawDocument>& docs);

}  // namespace retrokit

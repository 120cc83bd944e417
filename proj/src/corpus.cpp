#include "retrokit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "retrokit/common.hpp"
#include "json.hpp"

namespace retrokit {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw InputError("unknown split '" + s + "' (expected train, validation or test)");
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    while (i < n) {
        char c = text[i];
        if (c == '<') {
            // Drop a well-formed <...> span entirely; a lone '<' is just
            // a token separator.
            std::size_t close = text.find('>', i + 1);
            if (close != std::string::npos) {
                flush();
                i = close + 1;
                continue;
            }
        }
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
        }
        ++i;
    }
    flush();
    return tokens;
}

TaskSchema TaskSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open task schema: " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("malformed task schema " + path + ": " + e.what());
    }
    if (!j.is_object()) throw InputError("task schema must be a JSON object: " + path);
    std::vector<std::pair<std::string, std::vector<std::string>>> pairs;
    for (auto& [name, classes] : j.items()) {
        if (!classes.is_array()) {
            throw InputError("task '" + name + "' in " + path + " must map to a class-label array");
        }
        std::vector<std::string> labels;
        for (auto& c : classes) labels.push_back(c.get<std::string>());
        pairs.emplace_back(name, std::move(labels));
    }
    return from_pairs(pairs);
}

TaskSchema TaskSchema::from_pairs(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& tasks) {
    TaskSchema schema;
    for (const auto& [name, classes] : tasks) {
        if (classes.empty()) throw InputError("task '" + name + "' has no classes");
        Task t;
        t.name = name;
        t.classes = classes;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (!t.class_index.emplace(classes[i], static_cast<int>(i)).second) {
                throw InputError("task '" + name + "' has duplicate class label '" + classes[i] + "'");
            }
        }
        schema.tasks_.push_back(std::move(t));
    }
    return schema;
}

int TaskSchema::task_index(const std::string& name) const {
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (tasks_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

Vocabulary::Vocabulary() {
    append(kPadWord, 0);
    append(kUnkWord, 0);
}

void Vocabulary::append(const std::string& word, std::int64_t df) {
    index_.emplace(word, static_cast<std::int32_t>(words_.size()));
    words_.push_back(word);
    doc_freq_.push_back(df);
}

std::int32_t Vocabulary::id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? -1 : it->second;
}

std::string Vocabulary::content_hash() const {
    std::string buf;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        buf += words_[i];
        buf += '\t';
        buf += std::to_string(doc_freq_[i]);
        buf += '\n';
    }
    std::uint64_t h = fnv1a64(buf);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string(hex);
}

void Vocabulary::save_tsv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write vocabulary: " + path);
    for (std::size_t i = 0; i < words_.size(); ++i) {
        out << words_[i] << '\t' << doc_freq_[i] << '\n';
    }
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary: " + path);
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw InputError(path + ":" + std::to_string(lineno) + ": expected word<TAB>doc_freq");
        }
        std::string word = line.substr(0, tab);
        std::int64_t df = 0;
        try {
            df = std::stoll(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw InputError(path + ":" + std::to_string(lineno) + ": bad doc_freq");
        }
        if (lineno == 1 || lineno == 2) {
            const char* expected = lineno == 1 ? kPadWord : kUnkWord;
            if (word != expected) {
                throw InputError(path + ": line " + std::to_string(lineno) + " must be the special token " + expected);
            }
            continue;  // specials are created by the constructor
        }
        if (v.index_.count(word)) {
            throw InputError(path + ":" + std::to_string(lineno) + ": duplicate word '" + word + "'");
        }
        v.append(word, df);
    }
    if (lineno < 2) throw InputError(path + ": missing special-token rows");
    return v;
}

Vocabulary build_vocabulary(const std::vector<RawDocument>& docs, std::int64_t min_df) {
    if (docs.empty()) throw InputError("no documents");
    std::unordered_map<std::string, std::int64_t> df;
    for (const auto& doc : docs) {
        std::set<std::string> seen;
        for (auto& tok : tokenize(doc.text)) seen.insert(std::move(tok));
        for (const auto& tok : seen) ++df[tok];
    }
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (const auto& [word, count] : df) {
        if (count >= min_df) kept.emplace_back(word, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [word, count] : kept) v.append(word, count);
    return v;
}

EncodedDocument encode_document(const RawDocument& doc, const Vocabulary& vocab,
                                const TaskSchema& schema, std::size_t length) {
    EncodedDocument out;
    out.id = doc.id;
    out.split = doc.split;
    out.token_ids.assign(length, Vocabulary::kPadId);
    std::size_t pos = 0;
    for (const auto& tok : tokenize(doc.text)) {
        if (pos >= length) break;  // truncate at the end
        std::int32_t id = vocab.id(tok);
        out.token_ids[pos++] = id >= 0 ? id : Vocabulary::kUnkId;
    }
    out.labels.assign(schema.size(), std::nullopt);
    for (const auto& [task, value] : doc.labels) {
        int ti = schema.task_index(task);
        if (ti < 0) {
            throw InputError("document '" + doc.id + "': unknown task '" + task + "'");
        }
        const auto& t = schema.task(static_cast<std::size_t>(ti));
        auto it = t.class_index.find(value);
        if (it == t.class_index.end()) {
            throw InputError("document '" + doc.id + "': unknown label '" + value +
                             "' for task '" + task + "'");
        }
        out.labels[static_cast<std::size_t>(ti)] = it->second;
    }
    return out;
}

std::vector<RawDocument> load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus: " + path);
    std::vector<RawDocument> docs;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
        }
        RawDocument doc;
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            throw InputError(path + ":" + std::to_string(lineno) + ": missing or empty 'id'");
        }
        doc.id = j["id"].get<std::string>();
        if (!ids.insert(doc.id).second) {
            throw InputError(path + ":" + std::to_string(lineno) + ": duplicate document id '" + doc.id + "'");
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            throw InputError(path + ":" + std::to_string(lineno) + ": missing 'text'");
        }
        doc.text = j["text"].get<std::string>();
        if (j.contains("date") && !j["date"].is_null()) {
            doc.date = j["date"].get<std::string>();
        }
        if (j.contains("labels") && !j["labels"].is_null()) {
            for (auto& [task, value] : j["labels"].items()) {
                doc.labels[task] = value.get<std::string>();
            }
        }
        if (j.contains("split") && !j["split"].is_null()) {
            doc.split = parse_split(j["split"].get<std::string>());
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

void validate_date_split(const std::vector<RawDocument>& docs) {
    // ISO-8601 dates compare correctly as strings.
    std::optional<std::string> max_train;
    std::optional<std::string> min_test;
    std::string max_train_id, min_test_id;
    for (const auto& doc : docs) {
        if (!doc.date) continue;
        if (doc.split == Split::test) {
            if (!min_test || *doc.date < *min_test) {
                min_test = *doc.date;
                min_test_id = doc.id;
            }
        } else {
            if (!max_train || *doc.date > *max_train) {
                max_train = *doc.date;
                max_train_id = doc.id;
            }
        }
    }
    if (max_train && min_test && !(*max_train < *min_test)) {
        throw InputError("date split violated: train/validation document '" + max_train_id +
                         "' (" + *max_train + ") is not strictly earlier than test document '" +
                         min_test_id + "' (" + *min_test + ")");
    }
}

}  // namespace retrokit

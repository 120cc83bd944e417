#include "doctest.h"

#include <fstream>

#include "retrokit/common.hpp"
#include "retrokit/corpus.hpp"
#include "support.hpp"

using namespace retrokit;

namespace {

RawDocument doc(const std::string& id, const std::string& text) {
    RawDocument d;
    d.id = id;
    d.text = text;
    return d;
}

TaskSchema two_task_schema() {
    return TaskSchema::from_pairs({{"site", {"lung", "kidney", "breast"}},
                                   {"grade", {"g1", "g2"}}});
}

}  // namespace

TEST_CASE("tokenize: empty input gives empty sequence") {
    CHECK(tokenize("").empty());
}

TEST_CASE("tokenize: strips tags, lowercases, drops punctuation") {
    CHECK(tokenize("<b>Renal</b> Failure.") == std::vector<std::string>{"renal", "failure"});
    CHECK(tokenize("Grade 3, left-side") == std::vector<std::string>{"grade", "3", "left", "side"});
    CHECK(tokenize("...!!!") == std::vector<std::string>{});
    CHECK(tokenize("<removed entirely>") == std::vector<std::string>{});
    // Lone '<' without a closing '>' acts as a separator.
    CHECK(tokenize("a < b") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("build_vocabulary: document-frequency threshold") {
    std::vector<RawDocument> docs;
    for (int i = 0; i < 100; ++i) {
        std::string text = "common";
        if (i < 4) text += " rare";
        docs.push_back(doc("d" + std::to_string(i), text));
    }
    Vocabulary v = build_vocabulary(docs, 5);
    CHECK(v.contains("common"));
    CHECK_FALSE(v.contains("rare"));
    CHECK(v.doc_freq(v.id("common")) == 100);
}

TEST_CASE("build_vocabulary: exact doc-frequency counting") {
    std::vector<RawDocument> docs = {doc("a", "tumor tumor tumor"), doc("b", "a tumor"),
                                     doc("c", "tumor b")};
    Vocabulary v = build_vocabulary(docs, 3);
    CHECK(v.contains("tumor"));
    CHECK(v.doc_freq(v.id("tumor")) == 3);  // repeated mentions in one doc count once
    CHECK_FALSE(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
}

TEST_CASE("build_vocabulary: deterministic order, df descending then lexicographic") {
    std::vector<RawDocument> docs = {doc("1", "zebra apple"), doc("2", "zebra apple"),
                                     doc("3", "zebra banana")};
    Vocabulary v = build_vocabulary(docs, 1);
    CHECK(v.word(0) == Vocabulary::kPadWord);
    CHECK(v.word(1) == Vocabulary::kUnkWord);
    CHECK(v.word(2) == "zebra");   // df 3
    CHECK(v.word(3) == "apple");   // df 2
    CHECK(v.word(4) == "banana");  // df 1

    Vocabulary again = build_vocabulary(docs, 1);
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(v.size()); ++i) {
        CHECK(v.word(i) == again.word(i));
        CHECK(v.doc_freq(i) == again.doc_freq(i));
    }
}

TEST_CASE("build_vocabulary: empty corpus is an error") {
    CHECK_THROWS_WITH_AS(build_vocabulary({}, 5), "no documents", InputError);
}

TEST_CASE("vocabulary round-trips word -> id -> word") {
    std::vector<RawDocument> docs = {doc("1", "kidney renal failure"), doc("2", "kidney lung")};
    Vocabulary v = build_vocabulary(docs, 1);
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(v.size()); ++i) {
        CHECK(v.id(v.word(i)) == i);
    }
    CHECK(v.id("absent") == -1);
}

TEST_CASE("vocabulary TSV round trip preserves ids and counts") {
    std::vector<RawDocument> docs = {doc("1", "kidney renal failure"), doc("2", "kidney lung")};
    Vocabulary v = build_vocabulary(docs, 1);
    auto dir = testsupport::tmp_dir("vocab_tsv");
    auto path = (dir / "vocab.tsv").string();
    v.save_tsv(path);
    Vocabulary loaded = Vocabulary::load_tsv(path);
    REQUIRE(loaded.size() == v.size());
    CHECK(loaded.content_hash() == v.content_hash());
    for (std::int32_t i = 0; i < static_cast<std::int32_t>(v.size()); ++i) {
        CHECK(loaded.word(i) == v.word(i));
        CHECK(loaded.doc_freq(i) == v.doc_freq(i));
    }
}

TEST_CASE("encode_document: empty text is all PAD at full length") {
    Vocabulary v = build_vocabulary({doc("1", "x")}, 1);
    EncodedDocument e = encode_document(doc("d", ""), v, two_task_schema(), 3000);
    REQUIRE(e.token_ids.size() == 3000);
    for (std::int32_t id : e.token_ids) CHECK(id == Vocabulary::kPadId);
}

TEST_CASE("encode_document: truncation keeps the first `length` tokens") {
    std::string text;
    for (int i = 0; i < 3005; ++i) text += "tok ";
    Vocabulary v = build_vocabulary({doc("1", text)}, 1);
    EncodedDocument e = encode_document(doc("d", text), v, two_task_schema(), 3000);
    REQUIRE(e.token_ids.size() == 3000);
    for (std::int32_t id : e.token_ids) CHECK(id == v.id("tok"));
}

TEST_CASE("encode_document: padding and OOV mapping") {
    Vocabulary v = build_vocabulary({doc("1", "kidney lung")}, 1);
    EncodedDocument e = encode_document(doc("d", "kidney mystery"), v, two_task_schema(), 5);
    CHECK(e.token_ids == std::vector<std::int32_t>{v.id("kidney"), Vocabulary::kUnkId,
                                                   Vocabulary::kPadId, Vocabulary::kPadId,
                                                   Vocabulary::kPadId});
}

TEST_CASE("encode_document: labels map through the schema") {
    Vocabulary v = build_vocabulary({doc("1", "x")}, 1);
    TaskSchema schema = two_task_schema();
    RawDocument d = doc("d", "x");
    d.labels["site"] = "kidney";
    EncodedDocument e = encode_document(d, v, schema, 4);
    REQUIRE(e.labels.size() == 2);
    CHECK(e.labels[0] == 1);
    CHECK_FALSE(e.labels[1].has_value());

    d.labels["site"] = "spleen";
    CHECK_THROWS_WITH_AS(encode_document(d, v, schema, 4),
                         "document 'd': unknown label 'spleen' for task 'site'", InputError);

    RawDocument bad_task = doc("d2", "x");
    bad_task.labels["colour"] = "red";
    CHECK_THROWS_AS(encode_document(bad_task, v, schema, 4), InputError);
}

TEST_CASE("encoded length is always exactly L") {
    Vocabulary v = build_vocabulary({doc("1", "a b c d e f g")}, 1);
    TaskSchema schema = two_task_schema();
    for (std::size_t len : {std::size_t{1}, std::size_t{3}, std::size_t{7}, std::size_t{20}}) {
        for (const char* text : {"", "a", "a b c d e f g", "q w e r t y u i o p"}) {
            CHECK(encode_document(doc("d", text), v, schema, len).token_ids.size() == len);
        }
    }
}

TEST_CASE("corpus JSONL loading and validation") {
    auto dir = testsupport::tmp_dir("corpus_jsonl");
    auto path = (dir / "corpus.jsonl").string();
    {
        std::ofstream out(path);
        out << R"({"id":"a","text":"kidney failure","date":"2015-01-01","labels":{"site":"kidney"},"split":"train"})" << "\n";
        out << R"({"id":"b","text":"lung","split":"test","date":"2018-01-01"})" << "\n";
        out << R"({"id":"c","text":"no split or date"})" << "\n";
    }
    auto docs = load_corpus_jsonl(path);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].labels.at("site") == "kidney");
    CHECK(docs[0].split == Split::train);
    CHECK(docs[1].split == Split::test);
    CHECK(docs[2].split == Split::train);  // default
    CHECK_FALSE(docs[2].date.has_value());
    validate_date_split(docs);

    CHECK_THROWS_AS(load_corpus_jsonl((dir / "missing.jsonl").string()), InputError);

    auto dup = (dir / "dup.jsonl").string();
    {
        std::ofstream out(dup);
        out << R"({"id":"a","text":"x"})" << "\n" << R"({"id":"a","text":"y"})" << "\n";
    }
    CHECK_THROWS_AS(load_corpus_jsonl(dup), InputError);

    auto bad = (dir / "bad.jsonl").string();
    {
        std::ofstream out(bad);
        out << "{not json}\n";
    }
    CHECK_THROWS_AS(load_corpus_jsonl(bad), InputError);
}

TEST_CASE("date split: test dates must be strictly later") {
    RawDocument train_doc = doc("t", "x");
    train_doc.date = "2016-12-31";
    RawDocument test_doc = doc("e", "y");
    test_doc.date = "2017-01-01";
    test_doc.split = Split::test;
    validate_date_split({train_doc, test_doc});

    test_doc.date = "2016-12-31";  // equal is a violation
    CHECK_THROWS_AS(validate_date_split({train_doc, test_doc}), InputError);

    test_doc.date = "2015-06-01";
    CHECK_THROWS_AS(validate_date_split({train_doc, test_doc}), InputError);
}

TEST_CASE("task schema loads from JSON preserving order") {
    auto dir = testsupport::tmp_dir("schema");
    auto path = (dir / "schema.json").string();
    {
        std::ofstream out(path);
        out << R"({"site":["a","b"],"grade":["g1","g2","g3"]})";
    }
    TaskSchema s = TaskSchema::from_json_file(path);
    REQUIRE(s.size() == 2);
    CHECK(s.task(0).name == "site");
    CHECK(s.task(1).name == "grade");
    CHECK(s.task(1).classes.size() == 3);
    CHECK(s.task_index("grade") == 1);
    CHECK(s.task_index("unknown") == -1);
}

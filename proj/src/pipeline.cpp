#include "retrokit/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <set>

#include "retrokit/common.hpp"
#include "json.hpp"

namespace retrokit {

namespace {

void write_json_file(const nlohmann::ordered_json& j, const std::string& path, const char* what) {
    std::ofstream out(path);
    if (!out) throw InputError(std::string("cannot write ") + what + ": " + path);
    out << j.dump(2) << '\n';
}

}  // namespace

std::vector<EncodedDocument> EncodedCorpus::split(Split s) const {
    std::vector<EncodedDocument> out;
    for (const auto& doc : docs) {
        if (doc.split == s) out.push_back(doc);
    }
    return out;
}

void save_encoded_corpus(const EncodedCorpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write encoded corpus: " + path);
    nlohmann::ordered_json header;
    header["encoded_corpus"] = 1;
    header["length"] = corpus.length;
    header["vocab_hash"] = corpus.vocab_hash;
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const auto& t : corpus.tasks) tasks.push_back({{"name", t.name}, {"classes", t.num_classes}});
    header["tasks"] = tasks;
    out << header.dump() << '\n';
    for (const auto& doc : corpus.docs) {
        nlohmann::ordered_json j;
        j["id"] = doc.id;
        j["split"] = split_name(doc.split);
        nlohmann::ordered_json labels;
        for (std::size_t t = 0; t < doc.labels.size(); ++t) {
            if (doc.labels[t]) labels[corpus.tasks[t].name] = *doc.labels[t];
        }
        j["labels"] = labels;
        j["ids"] = doc.token_ids;
        out << j.dump() << '\n';
    }
}

EncodedCorpus load_encoded_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open encoded corpus: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + ": empty encoded corpus");
    EncodedCorpus corpus;
    try {
        auto header = nlohmann::json::parse(line);
        if (!header.contains("encoded_corpus")) throw InputError(path + ": missing header line");
        corpus.length = header.at("length").get<std::size_t>();
        corpus.vocab_hash = header.at("vocab_hash").get<std::string>();
        for (const auto& t : header.at("tasks")) {
            corpus.tasks.push_back({t.at("name").get<std::string>(), t.at("classes").get<int>()});
        }
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw InputError(path + ": malformed encoded-corpus header: " + e.what());
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            EncodedDocument doc;
            doc.id = j.at("id").get<std::string>();
            doc.split = parse_split(j.at("split").get<std::string>());
            doc.token_ids = j.at("ids").get<std::vector<std::int32_t>>();
            if (doc.token_ids.size() != corpus.length) {
                throw InputError(path + ":" + std::to_string(lineno) + ": document length mismatch");
            }
            doc.labels.assign(corpus.tasks.size(), std::nullopt);
            if (j.contains("labels")) {
                for (auto& [task, idx] : j.at("labels").items()) {
                    bool found = false;
                    for (std::size_t t = 0; t < corpus.tasks.size(); ++t) {
                        if (corpus.tasks[t].name == task) {
                            doc.labels[t] = idx.get<std::int32_t>();
                            found = true;
                            break;
                        }
                    }
                    if (!found) {
                        throw InputError(path + ":" + std::to_string(lineno) + ": unknown task '" + task + "'");
                    }
                }
            }
            corpus.docs.push_back(std::move(doc));
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& e) {
            throw InputError(path + ":" + std::to_string(lineno) + ": malformed document: " + e.what());
        }
    }
    return corpus;
}

void require_vocab_hash(const std::string& expected, const std::string& actual,
                        const std::string& what) {
    if (expected != actual) {
        throw InputError("vocabulary hash mismatch for " + what + ": expected " + expected +
                         ", found " + actual);
    }
}

PreprocessStats run_preprocess(const PreprocessArgs& args) {
    auto docs = load_corpus_jsonl(args.corpus_path);
    validate_date_split(docs);
    TaskSchema schema = TaskSchema::from_json_file(args.schema_path);
    Vocabulary vocab = build_vocabulary(docs, args.min_df);
    vocab.save_tsv(args.out_vocab);

    EncodedCorpus encoded;
    encoded.length = args.length;
    encoded.vocab_hash = vocab.content_hash();
    for (const auto& task : schema.tasks()) {
        encoded.tasks.push_back({task.name, static_cast<int>(task.classes.size())});
    }
    encoded.docs.reserve(docs.size());
    for (const auto& doc : docs) {
        encoded.docs.push_back(encode_document(doc, vocab, schema, args.length));
    }
    save_encoded_corpus(encoded, args.out_encoded);
    return {docs.size(), vocab.size(), encoded.vocab_hash};
}

void run_embed(const EmbedArgs& args) {
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::load_tsv(args.vocab_path));
    EncodedCorpus encoded = load_encoded_corpus(args.encoded_path);
    require_vocab_hash(encoded.vocab_hash, vocab->content_hash(), args.encoded_path);
    SgnsResult result = train_sgns(encoded.docs, vocab, args.sgns);
    save_embeddings(result.embeddings, args.out_embeddings);
}

void run_graph(const GraphArgs& args) {
    Vocabulary vocab = Vocabulary::load_tsv(args.vocab_path);
    ConceptFile concepts = load_concepts(args.concepts_path);
    auto matches = match_vocabulary(concepts, vocab, args.first_name_only);
    KnowledgeGraph graph = build_graph(matches, vocab.size());
    save_edge_list(graph, vocab, args.out_edges);

    GraphStats stats = graph_stats(graph);
    nlohmann::ordered_json j;
    j["vocab_hash"] = vocab.content_hash();
    j["nodes_with_edges"] = stats.nodes_with_edges;
    j["edges"] = stats.edge_count;
    nlohmann::ordered_json hist;
    for (const auto& [degree, count] : stats.degree_histogram) {
        hist[std::to_string(degree)] = count;
    }
    j["degree_histogram"] = hist;
    j["cuis_matched"] = matches.size();
    j["cuis_total"] = concepts.groups.size();
    j["malformed_rows"] = concepts.malformed_rows;
    nlohmann::ordered_json sources;
    for (const auto& [source, rows] : concepts.rows_per_source) sources[source] = rows;
    j["rows_per_source"] = sources;
    write_json_file(j, args.out_stats, "graph stats");
}

void run_retrofit(const RetrofitStageArgs& args) {
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::load_tsv(args.vocab_path));
    EmbeddingMatrix original = load_embeddings(args.embeddings_path, vocab);
    KnowledgeGraph graph = load_edge_list(args.edges_path, *vocab);
    RetrofitResult result = retrofit(original, graph, args.cfg);
    save_embeddings(result.embeddings, args.out_embeddings);

    nlohmann::ordered_json j;
    j["vocab_hash"] = vocab->content_hash();
    j["alpha"] = args.cfg.alpha;
    j["beta"] = beta_scheme_name(args.cfg.beta_scheme);
    j["iterations"] = args.cfg.iterations;
    j["tolerance"] = args.cfg.tolerance;
    j["sweeps_run"] = result.sweeps_run;
    j["objective_trace"] = result.objective_trace;
    write_json_file(j, args.out_trace, "retrofit trace");
}

void run_train(const TrainStageArgs& args) {
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::load_tsv(args.vocab_path));
    EncodedCorpus encoded = load_encoded_corpus(args.encoded_path);
    require_vocab_hash(encoded.vocab_hash, vocab->content_hash(), args.encoded_path);
    EmbeddingMatrix emb = load_embeddings(args.embeddings_path, vocab);

    ModelConfig mcfg;
    mcfg.dim = emb.dim;
    mcfg.doc_length = encoded.length;
    mcfg.window_sizes = args.window_sizes;
    mcfg.filters_per_window = args.filters_per_window;
    mcfg.tasks = encoded.tasks;
    mcfg.task_weights = args.task_weights;
    mcfg.seed = derive_seed(args.seed, "mtcnn-init");

    TrainConfig tcfg = args.train_cfg;
    tcfg.seed = derive_seed(args.seed, "mtcnn-shuffle");

    ModelParams params = init_params(mcfg, emb);
    auto train_docs = encoded.split(Split::train);
    auto val_docs = encoded.split(Split::validation);
    TrainResult result = train(params, train_docs, val_docs, tcfg);
    save_checkpoint(result.params, args.out_checkpoint);

    std::ofstream hist(args.out_history);
    if (!hist) throw InputError("cannot write training history: " + args.out_history);
    for (const auto& e : result.history) {
        nlohmann::ordered_json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        nlohmann::ordered_json per_task;
        for (std::size_t t = 0; t < e.val_macro_f1.size(); ++t) {
            if (std::isnan(e.val_macro_f1[t])) {
                per_task[mcfg.tasks[t].name] = nullptr;
            } else {
                per_task[mcfg.tasks[t].name] = e.val_macro_f1[t];
            }
        }
        j["val_macro_f1"] = per_task;
        if (std::isnan(e.val_macro_mean)) {
            j["val_macro_mean"] = nullptr;
        } else {
            j["val_macro_mean"] = e.val_macro_mean;
        }
        j["best"] = e.epoch == result.best_epoch;
        hist << j.dump() << '\n';
    }
}

namespace {

struct TaskEval {
    TaskPredictions preds;
    double micro = 0.0;
    ConfidenceInterval micro_ci;
    double macro = 0.0;
    ConfidenceInterval macro_ci;
    std::optional<StrataAccuracy> strata;
};

struct ModelEval {
    std::vector<TaskEval> tasks;
    double mean_micro = 0.0;
    double mean_macro = 0.0;
    std::optional<double> strata_most_mean;
    std::optional<double> strata_least_mean;
    std::optional<double> phenotype_all;
    std::optional<double> phenotype_subset;
};

ModelEval evaluate_model(const ModelParams& params, const std::vector<EncodedDocument>& docs,
                         const EvalArgs& args) {
    const auto& tasks = params.config.tasks;
    auto preds = predict(params, docs);

    ModelEval ev;
    double micro_sum = 0.0, macro_sum = 0.0;
    double most_sum = 0.0, least_sum = 0.0;
    std::size_t strata_count = 0;
    auto macro_metric = [&args](const TaskPredictions& p) {
        return macro_f1(p, args.macro_universe);
    };
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        TaskEval te;
        te.preds.task = tasks[t].name;
        te.preds.class_count = tasks[t].num_classes;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (!docs[i].labels[t]) continue;
            te.preds.y_true.push_back(*docs[i].labels[t]);
            te.preds.y_pred.push_back(preds[i][t]);
        }
        if (te.preds.y_true.empty()) {
            throw InputError("eval: no labeled documents for task '" + tasks[t].name + "'");
        }
        te.micro = micro_f1(te.preds);
        te.macro = macro_metric(te.preds);
        te.micro_ci = bootstrap_ci(te.preds, micro_f1, args.resamples, args.level,
                                   derive_seed(args.seed, tasks[t].name + "/micro"));
        te.macro_ci = bootstrap_ci(te.preds, macro_metric, args.resamples, args.level,
                                   derive_seed(args.seed, tasks[t].name + "/macro"));
        std::set<int> distinct(te.preds.y_true.begin(), te.preds.y_true.end());
        if (distinct.size() >= 2) {
            te.strata = prevalence_strata(te.preds, args.strata_quantile);
            most_sum += te.strata->most_prevalent;
            least_sum += te.strata->least_prevalent;
            ++strata_count;
        }
        micro_sum += te.micro;
        macro_sum += te.macro;
        ev.tasks.push_back(std::move(te));
    }
    ev.mean_micro = micro_sum / static_cast<double>(tasks.size());
    ev.mean_macro = macro_sum / static_cast<double>(tasks.size());
    if (strata_count > 0) {
        ev.strata_most_mean = most_sum / static_cast<double>(strata_count);
        ev.strata_least_mean = least_sum / static_cast<double>(strata_count);
    }

    // Phenotype over documents labeled for every task involved.
    std::vector<TaskPredictions> aligned(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        aligned[t].task = tasks[t].name;
        aligned[t].class_count = tasks[t].num_classes;
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        bool all_labeled = true;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            if (!docs[i].labels[t]) {
                all_labeled = false;
                break;
            }
        }
        if (!all_labeled) continue;
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            aligned[t].y_true.push_back(*docs[i].labels[t]);
            aligned[t].y_pred.push_back(preds[i][t]);
        }
    }
    if (!aligned.empty() && !aligned[0].y_true.empty()) {
        std::vector<std::size_t> all(tasks.size());
        for (std::size_t t = 0; t < tasks.size(); ++t) all[t] = t;
        ev.phenotype_all = phenotype_accuracy(aligned, all);
        std::vector<std::size_t> subset;
        for (const char* name : {"site", "laterality", "behavior", "histology"}) {
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                if (tasks[t].name == name) subset.push_back(t);
            }
        }
        if (subset.size() == 4) ev.phenotype_subset = phenotype_accuracy(aligned, subset);
    }
    return ev;
}

nlohmann::ordered_json eval_to_json(const ModelEval& ev) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json tasks;
    for (const auto& te : ev.tasks) {
        nlohmann::ordered_json t;
        t["n"] = te.preds.y_true.size();
        t["micro_f1"] = te.micro;
        t["micro_ci"] = {te.micro_ci.lo, te.micro_ci.hi};
        t["macro_f1"] = te.macro;
        t["macro_ci"] = {te.macro_ci.lo, te.macro_ci.hi};
        if (te.strata) {
            t["accuracy_most_prevalent"] = te.strata->most_prevalent;
            t["accuracy_least_prevalent"] = te.strata->least_prevalent;
        } else {
            t["accuracy_most_prevalent"] = nullptr;
            t["accuracy_least_prevalent"] = nullptr;
        }
        tasks[te.preds.task] = t;
    }
    j["tasks"] = tasks;
    j["mean_micro_f1"] = ev.mean_micro;
    j["mean_macro_f1"] = ev.mean_macro;
    nlohmann::ordered_json prevalence;
    prevalence["most_prevalent_accuracy_mean"] =
        ev.strata_most_mean ? nlohmann::ordered_json(*ev.strata_most_mean) : nullptr;
    prevalence["least_prevalent_accuracy_mean"] =
        ev.strata_least_mean ? nlohmann::ordered_json(*ev.strata_least_mean) : nullptr;
    j["prevalence"] = prevalence;
    nlohmann::ordered_json phenotype;
    phenotype["all_tasks"] = ev.phenotype_all ? nlohmann::ordered_json(*ev.phenotype_all) : nullptr;
    phenotype["site_laterality_behavior_histology"] =
        ev.phenotype_subset ? nlohmann::ordered_json(*ev.phenotype_subset) : nullptr;
    j["phenotype"] = phenotype;
    return j;
}

void write_tsv_summary(const std::vector<std::pair<std::string, const ModelEval*>>& models,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write TSV summary: " + path);
    out << "model\ttask\tmicro_f1\tmicro_lo\tmicro_hi\tmacro_f1\tmacro_lo\tmacro_hi\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    for (const auto& [name, ev] : models) {
        for (const auto& te : ev->tasks) {
            out << name << '\t' << te.preds.task << '\t' << fmt(te.micro) << '\t'
                << fmt(te.micro_ci.lo) << '\t' << fmt(te.micro_ci.hi) << '\t' << fmt(te.macro)
                << '\t' << fmt(te.macro_ci.lo) << '\t' << fmt(te.macro_ci.hi) << '\n';
        }
    }
}

}  // namespace

void run_eval(const EvalArgs& args) {
    EncodedCorpus encoded = load_encoded_corpus(args.encoded_path);
    auto docs = encoded.split(args.eval_split);
    if (docs.empty()) {
        throw InputError("eval: no documents in split '" + split_name(args.eval_split) + "'");
    }

    ModelParams model_a = load_checkpoint(args.model_a);
    require_vocab_hash(model_a.vocab_hash, encoded.vocab_hash, args.model_a);
    ModelEval eval_a = evaluate_model(model_a, docs, args);

    nlohmann::ordered_json report;
    report["split"] = split_name(args.eval_split);
    report["documents"] = docs.size();
    report["bootstrap"] = {{"resamples", args.resamples}, {"level", args.level}};
    report["model_a"] = eval_to_json(eval_a);

    std::unique_ptr<ModelEval> eval_b;
    if (!args.model_b.empty()) {
        ModelParams model_b = load_checkpoint(args.model_b);
        require_vocab_hash(model_b.vocab_hash, encoded.vocab_hash, args.model_b);
        eval_b = std::make_unique<ModelEval>(evaluate_model(model_b, docs, args));
        report["model_b"] = eval_to_json(*eval_b);
        nlohmann::ordered_json delta;
        delta["mean_micro_f1"] = eval_b->mean_micro - eval_a.mean_micro;
        delta["mean_macro_f1"] = eval_b->mean_macro - eval_a.mean_macro;
        if (eval_a.phenotype_all && eval_b->phenotype_all) {
            delta["phenotype_all_tasks"] = *eval_b->phenotype_all - *eval_a.phenotype_all;
        }
        nlohmann::ordered_json per_task;
        for (std::size_t t = 0; t < eval_a.tasks.size(); ++t) {
            per_task[eval_a.tasks[t].preds.task] = {
                {"micro_f1", eval_b->tasks[t].micro - eval_a.tasks[t].micro},
                {"macro_f1", eval_b->tasks[t].macro - eval_a.tasks[t].macro}};
        }
        delta["tasks"] = per_task;
        report["delta"] = delta;
    }
    write_json_file(report, args.out_report, "metrics report");

    if (!args.out_tsv.empty()) {
        std::vector<std::pair<std::string, const ModelEval*>> models;
        models.emplace_back("model_a", &eval_a);
        if (eval_b) models.emplace_back("model_b", eval_b.get());
        write_tsv_summary(models, args.out_tsv);
    }
}

void run_synth(const SynthStageArgs& args) {
    generate_synthetic(args.cfg, args.paths);
}

}  // namespace retrokit

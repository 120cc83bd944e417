#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "retrokit/common.hpp"
#include "retrokit/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// --config <path> is resolved before option registration so its values
// become the option defaults; explicit flags still win.
json load_config_from_argv(int argc, char** argv) {
    std::string path;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            path = argv[i + 1];
            break;
        }
        if (arg.rfind("--config=", 0) == 0) {
            path = arg.substr(9);
            break;
        }
    }
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw retrokit::InputError("cannot open config: " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw retrokit::InputError("config must be a JSON object: " + path);
        return j;
    } catch (const retrokit::InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw retrokit::InputError("malformed config " + path + ": " + e.what());
    }
}

template <typename T>
T defval(const json& cfg, const std::string& section, const std::string& key, T builtin) {
    if (cfg.contains(section) && cfg[section].is_object() && cfg[section].contains(key)) {
        return cfg[section][key].get<T>();
    }
    return builtin;
}

std::string in_workdir(const std::string& workdir, const std::string& name) {
    return (fs::path(workdir) / name).string();
}

void echo(const std::string& command, std::uint64_t seed, const ordered_json& args) {
    ordered_json j;
    j["command"] = command;
    j["seed"] = seed;
    j["args"] = args;
    std::cout << j.dump() << std::endl;
}

std::vector<std::pair<std::string, int>> parse_task_spec(const std::string& spec) {
    std::vector<std::pair<std::string, int>> tasks;
    std::size_t pos = 0;
    while (pos < spec.size()) {
        std::size_t comma = spec.find(',', pos);
        std::string item = spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw retrokit::InputError("bad task spec item '" + item + "' (expected name=classes)");
        }
        int classes = 0;
        try {
            classes = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw retrokit::InputError("bad class count in task spec item '" + item + "'");
        }
        tasks.emplace_back(item.substr(0, eq), classes);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (tasks.empty()) throw retrokit::InputError("empty task spec");
    return tasks;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        json cfg = load_config_from_argv(argc, argv);

        CLI::App app{"retrokit: embedding enrichment pipeline (preprocess, embed, graph, retrofit, train, eval, synth)"};
        app.require_subcommand(1);

        std::uint64_t seed = defval<std::uint64_t>(cfg, "", "seed", cfg.value("seed", 42ull));
        std::string workdir = cfg.value("workdir", ".");
        std::string config_path;
        app.add_option("--seed", seed, "Master seed; per-stage seeds are derived from it");
        app.add_option("--workdir", workdir, "Directory for default artifact paths");
        app.add_option("--config", config_path, "JSON config file overriding flag defaults");

        // ---- preprocess ----
        auto* p_cmd = app.add_subcommand("preprocess", "Tokenize, build vocabulary, encode documents");
        p_cmd->fallthrough();
        retrokit::PreprocessArgs p_args;
        p_args.min_df = defval<std::int64_t>(cfg, "preprocess", "min_df", 5);
        p_args.length = defval<std::size_t>(cfg, "preprocess", "length", 3000);
        p_cmd->add_option("--corpus", p_args.corpus_path, "Corpus JSONL")->required();
        p_cmd->add_option("--schema", p_args.schema_path, "Task schema JSON")->required();
        p_cmd->add_option("--out-vocab", p_args.out_vocab, "Vocabulary TSV output");
        p_cmd->add_option("--out-encoded", p_args.out_encoded, "Encoded corpus output");
        p_cmd->add_option("--min-df", p_args.min_df, "Minimum document frequency");
        p_cmd->add_option("--length", p_args.length, "Fixed document length");

        // ---- embed ----
        auto* e_cmd = app.add_subcommand("embed", "Train skip-gram negative-sampling embeddings");
        e_cmd->fallthrough();
        retrokit::EmbedArgs e_args;
        e_args.sgns.dim = defval<std::size_t>(cfg, "embed", "dim", 300);
        e_args.sgns.window = defval<std::size_t>(cfg, "embed", "window", 5);
        e_args.sgns.negatives = defval<std::size_t>(cfg, "embed", "negatives", 5);
        e_args.sgns.epochs = defval<std::size_t>(cfg, "embed", "epochs", 5);
        e_args.sgns.lr_initial = defval<double>(cfg, "embed", "lr", 0.025);
        e_args.sgns.lr_floor = defval<double>(cfg, "embed", "lr_floor", 1e-4);
        e_args.sgns.subsample = defval<double>(cfg, "embed", "subsample", 1e-3);
        e_args.sgns.norm_bound = defval<double>(cfg, "embed", "norm_bound", 100.0);
        e_cmd->add_option("--vocab", e_args.vocab_path, "Vocabulary TSV");
        e_cmd->add_option("--encoded", e_args.encoded_path, "Encoded corpus");
        e_cmd->add_option("--out", e_args.out_embeddings, "Embedding text file output");
        e_cmd->add_option("--dim", e_args.sgns.dim, "Embedding dimensionality");
        e_cmd->add_option("--window", e_args.sgns.window, "Context radius");
        e_cmd->add_option("--negatives", e_args.sgns.negatives, "Negative samples per positive");
        e_cmd->add_option("--epochs", e_args.sgns.epochs, "Training epochs");
        e_cmd->add_option("--lr", e_args.sgns.lr_initial, "Initial learning rate");
        e_cmd->add_option("--lr-floor", e_args.sgns.lr_floor, "Learning-rate floor");
        e_cmd->add_option("--subsample", e_args.sgns.subsample, "Frequent-word subsampling threshold (0 disables)");
        e_cmd->add_option("--norm-bound", e_args.sgns.norm_bound, "Divergence detector norm bound");

        // ---- graph ----
        auto* g_cmd = app.add_subcommand("graph", "Build the concept graph over vocabulary words");
        g_cmd->fallthrough();
        retrokit::GraphArgs g_args;
        g_args.first_name_only = defval<bool>(cfg, "graph", "first_name_only", false);
        g_cmd->add_option("--vocab", g_args.vocab_path, "Vocabulary TSV");
        g_cmd->add_option("--concepts", g_args.concepts_path, "Concept TSV (CUI<TAB>SOURCE<TAB>NAME)")->required();
        g_cmd->add_option("--out-edges", g_args.out_edges, "Edge-list output");
        g_cmd->add_option("--out-stats", g_args.out_stats, "Stats JSON output");
        g_cmd->add_flag("--first-name-only", g_args.first_name_only,
                        "Match only the first concept name of each CUI");

        // ---- retrofit ----
        auto* r_cmd = app.add_subcommand("retrofit", "Pull embeddings toward their graph neighbors");
        r_cmd->fallthrough();
        retrokit::RetrofitStageArgs r_args;
        std::string beta_name = defval<std::string>(cfg, "retrofit", "beta", "inv-degree");
        r_args.cfg.alpha = defval<double>(cfg, "retrofit", "alpha", 1.0);
        r_args.cfg.iterations = defval<std::size_t>(cfg, "retrofit", "iters", 10);
        r_args.cfg.tolerance = defval<double>(cfg, "retrofit", "tol", 1e-3);
        r_cmd->add_option("--vocab", r_args.vocab_path, "Vocabulary TSV");
        r_cmd->add_option("--embeddings", r_args.embeddings_path, "Input embedding text file");
        r_cmd->add_option("--edges", r_args.edges_path, "Edge-list file");
        r_cmd->add_option("--out", r_args.out_embeddings, "Retrofitted embedding output");
        r_cmd->add_option("--trace", r_args.out_trace, "Objective trace JSON output");
        r_cmd->add_option("--alpha", r_args.cfg.alpha, "Attachment weight");
        r_cmd->add_option("--beta", beta_name, "Edge weight scheme: inv-degree or const")
            ->check(CLI::IsMember({"inv-degree", "const"}));
        r_cmd->add_option("--iters", r_args.cfg.iterations, "Sweep count");
        r_cmd->add_option("--tol", r_args.cfg.tolerance, "Early-stop tolerance (0 disables)");

        // ---- train ----
        auto* t_cmd = app.add_subcommand("train", "Train the multitask text CNN");
        t_cmd->fallthrough();
        retrokit::TrainStageArgs t_args;
        t_args.window_sizes = defval<std::vector<std::size_t>>(cfg, "train", "windows", {3, 4, 5});
        t_args.filters_per_window = defval<std::size_t>(cfg, "train", "filters", 300);
        t_args.task_weights = defval<std::vector<double>>(cfg, "train", "task_weights", {});
        t_args.train_cfg.epochs = defval<std::size_t>(cfg, "train", "epochs", 10);
        t_args.train_cfg.batch_size = defval<std::size_t>(cfg, "train", "batch_size", 32);
        t_args.train_cfg.learning_rate = defval<double>(cfg, "train", "lr", 0.1);
        t_args.train_cfg.momentum = defval<double>(cfg, "train", "momentum", 0.9);
        t_args.train_cfg.lr_decay = defval<double>(cfg, "train", "lr_decay", 1.0);
        t_args.train_cfg.clip_norm = defval<double>(cfg, "train", "clip_norm", 5.0);
        t_args.train_cfg.patience = defval<std::size_t>(cfg, "train", "patience", 0);
        t_cmd->add_option("--vocab", t_args.vocab_path, "Vocabulary TSV");
        t_cmd->add_option("--encoded", t_args.encoded_path, "Encoded corpus");
        t_cmd->add_option("--embeddings", t_args.embeddings_path, "Initial embedding text file");
        t_cmd->add_option("--out", t_args.out_checkpoint, "Model checkpoint output");
        t_cmd->add_option("--history", t_args.out_history, "Training history JSONL output");
        t_cmd->add_option("--windows", t_args.window_sizes, "Convolution window sizes")->delimiter(',');
        t_cmd->add_option("--filters", t_args.filters_per_window, "Filters per window size");
        t_cmd->add_option("--task-weights", t_args.task_weights, "Per-task loss weights")->delimiter(',');
        t_cmd->add_option("--epochs", t_args.train_cfg.epochs, "Training epochs");
        t_cmd->add_option("--batch-size", t_args.train_cfg.batch_size, "Batch size");
        t_cmd->add_option("--lr", t_args.train_cfg.learning_rate, "Learning rate");
        t_cmd->add_option("--momentum", t_args.train_cfg.momentum, "Momentum");
        t_cmd->add_option("--lr-decay", t_args.train_cfg.lr_decay, "Per-epoch learning-rate multiplier");
        t_cmd->add_option("--clip-norm", t_args.train_cfg.clip_norm, "Global gradient-norm clip (0 disables)");
        t_cmd->add_option("--patience", t_args.train_cfg.patience, "Early-stop patience (0 disables)");

        // ---- eval ----
        auto* v_cmd = app.add_subcommand("eval", "Evaluate checkpoints and emit the metrics report");
        v_cmd->fallthrough();
        retrokit::EvalArgs v_args;
        std::string split_str = defval<std::string>(cfg, "eval", "split", "test");
        bool over_schema = defval<bool>(cfg, "eval", "macro_over_schema", false);
        v_args.resamples = defval<std::size_t>(cfg, "eval", "resamples", 1000);
        v_args.level = defval<double>(cfg, "eval", "level", 0.95);
        v_args.strata_quantile = defval<double>(cfg, "eval", "quantile", 0.1);
        v_cmd->add_option("--encoded", v_args.encoded_path, "Encoded corpus");
        v_cmd->add_option("--model", v_args.model_a, "Checkpoint to evaluate")->required();
        v_cmd->add_option("--model-b", v_args.model_b, "Second checkpoint; report includes deltas (b - a)");
        v_cmd->add_option("--out", v_args.out_report, "Metrics report JSON output");
        v_cmd->add_option("--tsv", v_args.out_tsv, "Optional TSV summary table");
        v_cmd->add_option("--split", split_str, "Evaluation split")
            ->check(CLI::IsMember({"train", "validation", "test"}));
        v_cmd->add_option("--resamples", v_args.resamples, "Bootstrap resamples");
        v_cmd->add_option("--level", v_args.level, "Confidence level");
        v_cmd->add_option("--quantile", v_args.strata_quantile, "Prevalence strata quantile");
        v_cmd->add_flag("--macro-over-schema", over_schema,
                        "Average macro-F1 over all schema classes instead of observed ones");

        // ---- synth ----
        auto* s_cmd = app.add_subcommand("synth", "Generate the synthetic synonym-substitution benchmark");
        s_cmd->fallthrough();
        retrokit::SynthStageArgs s_args;
        std::string task_spec = defval<std::string>(cfg, "synth", "tasks",
                                                    "site=6,subsite=8,laterality=3,behavior=3,histology=8,grade=4");
        bool no_substitution = defval<bool>(cfg, "synth", "no_substitution", false);
        s_args.cfg.train_docs = defval<std::size_t>(cfg, "synth", "train_docs", 5000);
        s_args.cfg.val_docs = defval<std::size_t>(cfg, "synth", "val_docs", 500);
        s_args.cfg.test_docs = defval<std::size_t>(cfg, "synth", "test_docs", 1000);
        s_args.cfg.doc_tokens = defval<std::size_t>(cfg, "synth", "doc_tokens", 60);
        s_args.cfg.cue_repeats = defval<std::size_t>(cfg, "synth", "cue_repeats", 4);
        s_args.cfg.filler_words = defval<std::size_t>(cfg, "synth", "filler_words", 200);
        s_args.cfg.synonym_group_size = defval<std::size_t>(cfg, "synth", "synonym_group_size", 2);
        s_args.cfg.class_decay = defval<double>(cfg, "synth", "class_decay", 0.65);
        s_cmd->add_option("--tasks", task_spec, "Task spec, e.g. site=6,grade=4");
        s_cmd->add_option("--train-docs", s_args.cfg.train_docs, "Training documents");
        s_cmd->add_option("--val-docs", s_args.cfg.val_docs, "Validation documents");
        s_cmd->add_option("--test-docs", s_args.cfg.test_docs, "Test documents");
        s_cmd->add_option("--doc-tokens", s_args.cfg.doc_tokens, "Tokens per document");
        s_cmd->add_option("--cue-repeats", s_args.cfg.cue_repeats, "Cue occurrences per task per document");
        s_cmd->add_option("--filler-words", s_args.cfg.filler_words, "Filler vocabulary size");
        s_cmd->add_option("--synonym-group-size", s_args.cfg.synonym_group_size, "Members per cue synonym group");
        s_cmd->add_option("--class-decay", s_args.cfg.class_decay, "Per-class prevalence decay");
        s_cmd->add_flag("--no-substitution", no_substitution, "Test split keeps the training cues");
        s_cmd->add_option("--out-corpus", s_args.paths.corpus_jsonl, "Corpus JSONL output");
        s_cmd->add_option("--out-concepts", s_args.paths.concepts_tsv, "Concept TSV output");
        s_cmd->add_option("--out-schema", s_args.paths.schema_json, "Task schema JSON output");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        auto dflt = [&](std::string& value, const std::string& name) {
            if (value.empty()) value = in_workdir(workdir, name);
        };

        if (*p_cmd) {
            dflt(p_args.out_vocab, "vocab.tsv");
            dflt(p_args.out_encoded, "encoded.jsonl");
            echo("preprocess", seed,
                 {{"corpus", p_args.corpus_path},
                  {"schema", p_args.schema_path},
                  {"out_vocab", p_args.out_vocab},
                  {"out_encoded", p_args.out_encoded},
                  {"min_df", p_args.min_df},
                  {"length", p_args.length}});
            auto stats = run_preprocess(p_args);
            ordered_json done;
            done["documents"] = stats.documents;
            done["vocab_size"] = stats.vocab_size;
            done["vocab_hash"] = stats.vocab_hash;
            std::cout << done.dump() << std::endl;
        } else if (*e_cmd) {
            dflt(e_args.vocab_path, "vocab.tsv");
            dflt(e_args.encoded_path, "encoded.jsonl");
            dflt(e_args.out_embeddings, "embeddings.txt");
            e_args.sgns.seed = retrokit::derive_seed(seed, "embed");
            echo("embed", seed,
                 {{"vocab", e_args.vocab_path},
                  {"encoded", e_args.encoded_path},
                  {"out", e_args.out_embeddings},
                  {"dim", e_args.sgns.dim},
                  {"window", e_args.sgns.window},
                  {"negatives", e_args.sgns.negatives},
                  {"epochs", e_args.sgns.epochs},
                  {"lr", e_args.sgns.lr_initial},
                  {"lr_floor", e_args.sgns.lr_floor},
                  {"subsample", e_args.sgns.subsample},
                  {"stage_seed", e_args.sgns.seed}});
            run_embed(e_args);
        } else if (*g_cmd) {
            dflt(g_args.vocab_path, "vocab.tsv");
            dflt(g_args.out_edges, "edges.tsv");
            dflt(g_args.out_stats, "graph_stats.json");
            echo("graph", seed,
                 {{"vocab", g_args.vocab_path},
                  {"concepts", g_args.concepts_path},
                  {"out_edges", g_args.out_edges},
                  {"out_stats", g_args.out_stats},
                  {"first_name_only", g_args.first_name_only}});
            run_graph(g_args);
        } else if (*r_cmd) {
            dflt(r_args.vocab_path, "vocab.tsv");
            dflt(r_args.embeddings_path, "embeddings.txt");
            dflt(r_args.edges_path, "edges.tsv");
            dflt(r_args.out_embeddings, "retrofitted.txt");
            dflt(r_args.out_trace, "retrofit_trace.json");
            r_args.cfg.beta_scheme = retrokit::parse_beta_scheme(beta_name);
            echo("retrofit", seed,
                 {{"vocab", r_args.vocab_path},
                  {"embeddings", r_args.embeddings_path},
                  {"edges", r_args.edges_path},
                  {"out", r_args.out_embeddings},
                  {"trace", r_args.out_trace},
                  {"alpha", r_args.cfg.alpha},
                  {"beta", beta_name},
                  {"iters", r_args.cfg.iterations},
                  {"tol", r_args.cfg.tolerance}});
            run_retrofit(r_args);
        } else if (*t_cmd) {
            dflt(t_args.vocab_path, "vocab.tsv");
            dflt(t_args.encoded_path, "encoded.jsonl");
            dflt(t_args.embeddings_path, "embeddings.txt");
            dflt(t_args.out_checkpoint, "model.ckpt");
            dflt(t_args.out_history, "history.jsonl");
            t_args.seed = retrokit::derive_seed(seed, "train");
            echo("train", seed,
                 {{"vocab", t_args.vocab_path},
                  {"encoded", t_args.encoded_path},
                  {"embeddings", t_args.embeddings_path},
                  {"out", t_args.out_checkpoint},
                  {"history", t_args.out_history},
                  {"windows", t_args.window_sizes},
                  {"filters", t_args.filters_per_window},
                  {"epochs", t_args.train_cfg.epochs},
                  {"batch_size", t_args.train_cfg.batch_size},
                  {"lr", t_args.train_cfg.learning_rate},
                  {"momentum", t_args.train_cfg.momentum},
                  {"lr_decay", t_args.train_cfg.lr_decay},
                  {"clip_norm", t_args.train_cfg.clip_norm},
                  {"patience", t_args.train_cfg.patience},
                  {"stage_seed", t_args.seed}});
            run_train(t_args);
        } else if (*v_cmd) {
            dflt(v_args.encoded_path, "encoded.jsonl");
            dflt(v_args.out_report, "report.json");
            v_args.eval_split = retrokit::parse_split(split_str);
            v_args.macro_universe =
                over_schema ? retrokit::MacroUniverse::schema : retrokit::MacroUniverse::observed;
            v_args.seed = retrokit::derive_seed(seed, "eval");
            echo("eval", seed,
                 {{"encoded", v_args.encoded_path},
                  {"model", v_args.model_a},
                  {"model_b", v_args.model_b},
                  {"out", v_args.out_report},
                  {"tsv", v_args.out_tsv},
                  {"split", split_str},
                  {"resamples", v_args.resamples},
                  {"level", v_args.level},
                  {"quantile", v_args.strata_quantile},
                  {"macro_over_schema", over_schema},
                  {"stage_seed", v_args.seed}});
            run_eval(v_args);
        } else if (*s_cmd) {
            dflt(s_args.paths.corpus_jsonl, "corpus.jsonl");
            dflt(s_args.paths.concepts_tsv, "concepts.tsv");
            dflt(s_args.paths.schema_json, "schema.json");
            s_args.cfg.tasks = parse_task_spec(task_spec);
            s_args.cfg.substitution = !no_substitution;
            s_args.cfg.seed = retrokit::derive_seed(seed, "synth");
            echo("synth", seed,
                 {{"tasks", task_spec},
                  {"train_docs", s_args.cfg.train_docs},
                  {"val_docs", s_args.cfg.val_docs},
                  {"test_docs", s_args.cfg.test_docs},
                  {"doc_tokens", s_args.cfg.doc_tokens},
                  {"cue_repeats", s_args.cfg.cue_repeats},
                  {"filler_words", s_args.cfg.filler_words},
                  {"synonym_group_size", s_args.cfg.synonym_group_size},
                  {"class_decay", s_args.cfg.class_decay},
                  {"substitution", s_args.cfg.substitution},
                  {"out_corpus", s_args.paths.corpus_jsonl},
                  {"out_concepts", s_args.paths.concepts_tsv},
                  {"out_schema", s_args.paths.schema_json},
                  {"stage_seed", s_args.cfg.seed}});
            run_synth(s_args);
        }
        return 0;
    } catch (const retrokit::InputError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 1;
    }
}

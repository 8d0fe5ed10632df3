#include "gcpt/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gcpt/contrast.hpp"
#include "gcpt/downstream.hpp"
#include "gcpt/error.hpp"
#include "gcpt/gcn.hpp"
#include "gcpt/pipeline.hpp"
#include "gcpt/synthetic.hpp"
#include "gcpt/theory.hpp"

namespace gcpt::cli {

namespace fs = std::filesystem;

namespace {

void config_to_json(const RunConfig& c, nlohmann::json& j) {
    j["related"] = c.related;
    j["current_train"] = c.current_train;
    j["current_test"] = c.current_test;
    j["embedding_file"] = c.embedding_file;
    j["format"] = c.format;
    j["num_classes"] = c.num_classes;
    j["min_freq"] = c.min_freq;
    j["window"] = c.window;
    j["tau"] = c.tau;
    j["gamma"] = c.gamma;
    j["s"] = c.s;
    j["n_per_epoch"] = c.n_per_epoch;
    j["epochs"] = c.epochs;
    j["lr"] = c.lr;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_eps"] = c.adam_eps;
    j["dim"] = c.dim;
    j["hidden_dim"] = c.hidden_dim;
    j["out_dim"] = c.out_dim;
    j["method"] = c.method;
    j["weighted_positive_sampling"] = c.weighted_positive_sampling;
    j["normalize_embeddings"] = c.normalize_embeddings;
    j["mode"] = c.mode;
    j["embeddings_path"] = c.embeddings_path;
    j["embedding_label"] = c.embedding_label;
    j["clf_max_epochs"] = c.clf_max_epochs;
    j["clf_patience"] = c.clf_patience;
    j["eval_seeds"] = c.eval_seeds;
    j["theory_taus"] = c.theory_taus;
    j["trials"] = c.trials;
    j["theory_tokens"] = c.theory_tokens;
    j["theory_dim"] = c.theory_dim;
    j["synth_vocab_size"] = c.synth_vocab_size;
    j["synth_related_per_class"] = c.synth_related_per_class;
    j["synth_current_per_class"] = c.synth_current_per_class;
    j["overlap"] = c.overlap;
    j["domain_tilt"] = c.domain_tilt;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out"] = c.out;
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& value) {
    if (j.contains(key)) value = j.at(key).get<T>();
}

void config_from_json(const nlohmann::json& j, RunConfig& c) {
    read_key(j, "related", c.related);
    read_key(j, "current_train", c.current_train);
    read_key(j, "current_test", c.current_test);
    read_key(j, "embedding_file", c.embedding_file);
    read_key(j, "format", c.format);
    read_key(j, "num_classes", c.num_classes);
    read_key(j, "min_freq", c.min_freq);
    read_key(j, "window", c.window);
    read_key(j, "tau", c.tau);
    read_key(j, "gamma", c.gamma);
    read_key(j, "s", c.s);
    read_key(j, "n_per_epoch", c.n_per_epoch);
    read_key(j, "epochs", c.epochs);
    read_key(j, "lr", c.lr);
    read_key(j, "beta1", c.beta1);
    read_key(j, "beta2", c.beta2);
    read_key(j, "adam_eps", c.adam_eps);
    read_key(j, "dim", c.dim);
    read_key(j, "hidden_dim", c.hidden_dim);
    read_key(j, "out_dim", c.out_dim);
    read_key(j, "method", c.method);
    read_key(j, "weighted_positive_sampling", c.weighted_positive_sampling);
    read_key(j, "normalize_embeddings", c.normalize_embeddings);
    read_key(j, "mode", c.mode);
    read_key(j, "embeddings_path", c.embeddings_path);
    read_key(j, "embedding_label", c.embedding_label);
    read_key(j, "clf_max_epochs", c.clf_max_epochs);
    read_key(j, "clf_patience", c.clf_patience);
    read_key(j, "eval_seeds", c.eval_seeds);
    read_key(j, "theory_taus", c.theory_taus);
    read_key(j, "trials", c.trials);
    read_key(j, "theory_tokens", c.theory_tokens);
    read_key(j, "theory_dim", c.theory_dim);
    read_key(j, "synth_vocab_size", c.synth_vocab_size);
    read_key(j, "synth_related_per_class", c.synth_related_per_class);
    read_key(j, "synth_current_per_class", c.synth_current_per_class);
    read_key(j, "overlap", c.overlap);
    read_key(j, "domain_tilt", c.domain_tilt);
    read_key(j, "seed", c.seed);
    read_key(j, "threads", c.threads);
    read_key(j, "out", c.out);
}

CorpusFormat parse_format(const std::string& format) {
    if (format == "tsv") return CorpusFormat::kTsv;
    if (format == "jsonl") return CorpusFormat::kJsonl;
    throw ConfigError("unknown corpus format: " + format);
}

ProtocolMode parse_mode(const std::string& mode) {
    if (mode == "transfer") return ProtocolMode::kTransfer;
    if (mode == "rdf") return ProtocolMode::kRdf;
    if (mode == "zero_shot") return ProtocolMode::kZeroShot;
    throw ConfigError("unknown protocol mode: " + mode);
}

/// Concatenates the related corpora into the union P, preserving file order.
LabeledCorpus load_related_union(const RunConfig& cfg) {
    if (cfg.related.empty()) {
        throw ConfigError("at least one --related corpus is required");
    }
    const CorpusFormat format = parse_format(cfg.format);
    LabeledCorpus merged;
    merged.num_classes = cfg.num_classes;
    merged.name = "related";
    merged.role = CorpusRole::kRelated;
    for (const auto& path : cfg.related) {
        LabeledCorpus part = load_corpus(path, format, cfg.num_classes, CorpusRole::kRelated);
        merged.examples.insert(merged.examples.end(),
                               std::make_move_iterator(part.examples.begin()),
                               std::make_move_iterator(part.examples.end()));
    }
    return merged;
}

fs::path ensure_dir(const std::string& base, const char* sub) {
    fs::path dir = fs::path(base) / sub;
    fs::create_directories(dir);
    return dir;
}

void echo_config(const RunConfig& cfg) {
    fs::create_directories(cfg.out);
    nlohmann::json j;
    config_to_json(cfg, j);
    std::ofstream out(fs::path(cfg.out) / "config.json");
    if (!out) {
        throw DataError("cannot write config echo to " + cfg.out);
    }
    out << j.dump(2) << '\n';
}

TrainConfig train_config_of(const RunConfig& cfg) {
    TrainConfig tc;
    tc.tau = cfg.tau;
    tc.gamma = cfg.gamma;
    tc.s = cfg.s;
    tc.n_per_epoch = cfg.n_per_epoch;
    tc.epochs = cfg.epochs;
    tc.lr = cfg.lr;
    tc.seed = cfg.seed;
    tc.beta1 = cfg.beta1;
    tc.beta2 = cfg.beta2;
    tc.adam_eps = cfg.adam_eps;
    tc.hidden_dim = cfg.hidden_dim;
    tc.out_dim = cfg.out_dim;
    tc.weighted_positive_sampling = cfg.weighted_positive_sampling;
    tc.normalize_embeddings = cfg.normalize_embeddings;
    return tc;
}

std::optional<std::string> optional_path(const std::string& path) {
    return path.empty() ? std::nullopt : std::optional<std::string>(path);
}

int cmd_build_graph(const RunConfig& cfg) {
    LabeledCorpus related = load_related_union(cfg);
    Pipeline pipe = build_pipeline(related, cfg.tau, cfg.min_freq, cfg.window);

    const fs::path dir = ensure_dir(cfg.out, "graph");
    write_edges_tsv(pipe.graph, pipe.vocab, (dir / "edges.tsv").string());
    write_vocabulary_tsv(pipe.vocab, (dir / "vocab.tsv").string());
    write_candidates_tsv(pipe.cond, pipe.vocab, (dir / "candidates.tsv").string());
    echo_config(cfg);

    std::cout << "vocab=" << pipe.vocab.size() << " edges=" << pipe.graph.edge_count();
    for (int c = 0; c < pipe.num_classes(); ++c) {
        std::cout << " |P^" << c << "|=" << pipe.cond.candidates[static_cast<std::size_t>(c)].size();
    }
    std::cout << '\n';
    for (int c : pipe.cond.empty_classes) {
        std::cerr << "warning: candidate set for class " << c
                  << " is empty; pretraining on it is impossible\n";
    }
    return 0;
}

void write_train_log(const std::vector<EpochLog>& log, const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write training log: " + path.string());
    }
    for (const auto& entry : log) {
        nlohmann::json j;
        j["epoch"] = entry.epoch;
        j["mean_loss"] = entry.mean_loss;
        j["skipped_candidates"] = entry.skipped_candidates;
        j["wall_ms"] = entry.wall_ms;
        out << j.dump() << '\n';
    }
}

int cmd_pretrain(const RunConfig& cfg) {
    LabeledCorpus related = load_related_union(cfg);
    const fs::path dir = ensure_dir(cfg.out, "embeddings");
    const TrainConfig tc = train_config_of(cfg);

    if (cfg.method == "ecl") {
        Vocabulary vocab = build_vocabulary(related, cfg.min_freq);
        Eigen::MatrixXd table =
            init_features(vocab, optional_path(cfg.embedding_file), cfg.dim, cfg.seed);
        write_embeddings_text(vocab.tokens(), table, (dir / "h0.txt").string());
        EclResult result = ecl_pretrain(related, vocab, table, tc);
        write_embeddings_text(vocab.tokens(), result.table, (dir / "embeddings.txt").string());
        write_train_log(result.log, dir / "train_log.jsonl");
        echo_config(cfg);
        std::cout << "method=ecl vocab=" << vocab.size() << " epochs=" << result.log.size()
                  << '\n';
        return 0;
    }
    if (cfg.method != "gcpt") {
        throw ConfigError("unknown pretraining method: " + cfg.method);
    }

    Pipeline pipe = build_pipeline(related, cfg.tau, cfg.min_freq, cfg.window);
    for (int c : pipe.cond.empty_classes) {
        std::cerr << "warning: candidate set for class " << c << " is empty\n";
    }
    Eigen::MatrixXd h0 =
        init_features(pipe.vocab, optional_path(cfg.embedding_file), cfg.dim, cfg.seed);
    write_embeddings_text(pipe.vocab.tokens(), h0, (dir / "h0.txt").string());

    PretrainResult result = pretrain(pipe, h0, tc);
    write_embeddings_text(pipe.vocab.tokens(), result.z, (dir / "embeddings.txt").string());
    write_train_log(result.log, dir / "train_log.jsonl");
    echo_config(cfg);

    std::cout << "method=gcpt vocab=" << pipe.vocab.size() << " epochs=" << result.log.size();
    if (!result.log.empty()) {
        std::cout << " first_loss=" << result.log.front().mean_loss
                  << " last_loss=" << result.log.back().mean_loss;
    }
    std::cout << '\n';
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    if (cfg.embeddings_path.empty()) {
        throw ConfigError("eval needs --embeddings");
    }
    const ProtocolMode mode = parse_mode(cfg.mode);
    const CorpusFormat format = parse_format(cfg.format);

    TextEmbeddings emb = read_embeddings_text(cfg.embeddings_path);
    EmbeddingTable table(std::move(emb.tokens), std::move(emb.rows));

    ProtocolDatasets datasets{
        std::nullopt,
        std::nullopt,
        [&] {
            if (cfg.current_test.empty()) throw ConfigError("eval needs --current-test");
            return load_corpus(cfg.current_test, format, cfg.num_classes,
                               CorpusRole::kCurrentTest);
        }()};
    if (mode != ProtocolMode::kZeroShot) {
        if (cfg.current_train.empty()) {
            throw ConfigError(cfg.mode + " mode needs --current-train");
        }
        datasets.current_train =
            load_corpus(cfg.current_train, format, cfg.num_classes, CorpusRole::kCurrentTrain);
    }
    if (mode != ProtocolMode::kTransfer && !cfg.related.empty()) {
        datasets.related = load_related_union(cfg);
    }
    if (mode == ProtocolMode::kZeroShot && !datasets.related) {
        throw ConfigError("zero_shot mode needs --related");
    }

    ClassifierConfig clf;
    clf.max_epochs = cfg.clf_max_epochs;
    clf.patience = cfg.clf_patience;
    clf.seed = cfg.seed;
    clf.beta1 = cfg.beta1;
    clf.beta2 = cfg.beta2;
    clf.adam_eps = cfg.adam_eps;

    ProtocolResult result = run_protocol(mode, datasets, table, clf, cfg.eval_seeds);

    const std::string label = cfg.embedding_label.empty()
                                  ? fs::path(cfg.embeddings_path).stem().string()
                                  : cfg.embedding_label;
    const fs::path dir = ensure_dir(cfg.out, "eval");
    write_results_csv({{label, result}}, datasets.current_test.name,
                      (dir / "results.csv").string());
    echo_config(cfg);

    std::cout << cfg.mode << " " << label << " mean_weighted_f1=" << result.mean_weighted_f1
              << '\n';
    return 0;
}

int cmd_theory(const RunConfig& cfg) {
    if (cfg.theory_taus.empty()) {
        throw ConfigError("theory needs a non-empty tau grid");
    }
    std::vector<BoundReport> reports;
    for (double tau : cfg.theory_taus) {
        GenerativeSpec spec =
            make_sweep_spec(tau, cfg.theory_tokens, cfg.theory_dim, cfg.trials, cfg.seed);
        reports.push_back(run_bound_check(spec));
        const auto& r = reports.back();
        std::cout << "tau=" << tau << " L=" << r.overall.mean << " upper_ok=" << r.upper_ok
                  << " lower_ok=" << r.lower_ok << '\n';
    }

    const fs::path dir = ensure_dir(cfg.out, "theory");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        arr.push_back(nlohmann::json::parse(report_to_json(r)));
    }
    std::ofstream out(dir / "report.json");
    if (!out) {
        throw DataError("cannot write theory report");
    }
    out << arr.dump(2) << '\n';
    write_sweep_csv(reports, (dir / "sweep.csv").string());
    echo_config(cfg);
    return 0;
}

int cmd_make_synthetic(const RunConfig& cfg) {
    SyntheticConfig sc;
    sc.vocab_size = cfg.synth_vocab_size;
    sc.related_per_class = cfg.synth_related_per_class;
    sc.current_train_per_class = cfg.synth_current_per_class;
    sc.current_test_per_class = cfg.synth_current_per_class;
    sc.overlap = cfg.overlap;
    sc.domain_tilt = cfg.domain_tilt;
    sc.seed = cfg.seed;

    SyntheticCorpora corpora = make_synthetic(sc);
    const fs::path dir = ensure_dir(cfg.out, "synthetic");
    write_corpus_tsv(corpora.related, (dir / "related.tsv").string());
    write_corpus_tsv(corpora.current_train, (dir / "train.tsv").string());
    write_corpus_tsv(corpora.current_test, (dir / "test.tsv").string());
    echo_config(cfg);

    std::cout << "related=" << corpora.related.examples.size()
              << " train=" << corpora.current_train.examples.size()
              << " test=" << corpora.current_test.examples.size() << " -> " << dir.string()
              << '\n';
    return 0;
}

std::string find_config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") return args[i + 1];
    }
    return {};
}

} // namespace

int run(const std::vector<std::string>& args) {
    RunConfig cfg;

    const std::string config_path = find_config_path(args);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file: " << config_path << '\n';
            return 2;
        }
        try {
            config_from_json(nlohmann::json::parse(in), cfg);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: malformed config file: " << e.what() << '\n';
            return 2;
        }
    }

    CLI::App app{"Graph contrastive pretraining for text classification"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON config file (flags override its values)");
    app.add_option("--seed", cfg.seed, "master RNG seed");
    app.add_option("--threads", cfg.threads, "worker cap (the numeric core runs one worker)")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", cfg.out, "output directory");

    auto add_data_options = [&](CLI::App* cmd) {
        cmd->add_option("--related", cfg.related, "related corpus files (union P)");
        cmd->add_option("--format", cfg.format, "corpus format: tsv | jsonl");
        cmd->add_option("--num-classes", cfg.num_classes, "number of classes");
    };
    auto add_pipeline_options = [&](CLI::App* cmd) {
        cmd->add_option("--min-freq", cfg.min_freq, "minimum token frequency");
        cmd->add_option("--window", cfg.window, "co-occurrence window width (0: whole example)");
        cmd->add_option("--tau", cfg.tau, "candidate confidence threshold");
    };

    CLI::App* build = app.add_subcommand("build-graph", "build vocabulary, candidates and PMI graph");
    add_data_options(build);
    add_pipeline_options(build);

    CLI::App* pre = app.add_subcommand("pretrain", "contrastive pretraining of token embeddings");
    add_data_options(pre);
    add_pipeline_options(pre);
    pre->add_option("--embedding-file", cfg.embedding_file, "word2vec-format input features");
    pre->add_option("--dim", cfg.dim, "input feature dimension");
    pre->add_option("--hidden-dim", cfg.hidden_dim, "GCN hidden dimension");
    pre->add_option("--out-dim", cfg.out_dim, "GCN output dimension");
    pre->add_option("--gamma", cfg.gamma, "softmax temperature");
    pre->add_option("--s", cfg.s, "positive/negative samples per candidate");
    pre->add_option("--n-per-epoch", cfg.n_per_epoch, "candidate draws per epoch (0: auto)");
    pre->add_option("--epochs", cfg.epochs, "pretraining epochs");
    pre->add_option("--lr", cfg.lr, "learning rate");
    pre->add_option("--method", cfg.method, "gcpt | ecl");
    pre->add_flag("--weighted-positives", cfg.weighted_positive_sampling,
                  "weight-proportional positive sampling");
    pre->add_flag("--normalize", cfg.normalize_embeddings, "L2-normalize z in the loss");

    CLI::App* eval = app.add_subcommand("eval", "train and score the downstream classifier");
    add_data_options(eval);
    eval->add_option("--current-train", cfg.current_train, "current train split (O_TR)");
    eval->add_option("--current-test", cfg.current_test, "current test split (O_TE)");
    eval->add_option("--embeddings", cfg.embeddings_path, "pretrained embeddings file");
    eval->add_option("--embedding-label", cfg.embedding_label, "label for the results table");
    eval->add_option("--mode", cfg.mode, "transfer | rdf | zero_shot");
    eval->add_option("--clf-max-epochs", cfg.clf_max_epochs, "classifier epoch cap");
    eval->add_option("--clf-patience", cfg.clf_patience, "early-stopping patience");
    eval->add_option("--eval-seeds", cfg.eval_seeds, "number of seeded runs to average");

    CLI::App* theory = app.add_subcommand("theory", "Monte-Carlo verification of the loss bounds");
    theory->add_option("--taus", cfg.theory_taus, "tau grid");
    theory->add_option("--trials", cfg.trials, "Monte-Carlo trials per grid point");
    theory->add_option("--tokens", cfg.theory_tokens, "synthetic token population size");
    theory->add_option("--theory-dim", cfg.theory_dim, "embedding dimension");

    CLI::App* synth = app.add_subcommand("make-synthetic", "generate the synthetic benchmark");
    synth->add_option("--vocab-size", cfg.synth_vocab_size, "topical vocabulary size");
    synth->add_option("--related-per-class", cfg.synth_related_per_class,
                      "related examples per class");
    synth->add_option("--current-per-class", cfg.synth_current_per_class,
                      "current examples per class and split");
    synth->add_option("--overlap", cfg.overlap, "shared fraction of the vocabulary");
    synth->add_option("--domain-tilt", cfg.domain_tilt, "related-vs-current token shift");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (build->parsed()) return cmd_build_graph(cfg);
        if (pre->parsed()) return cmd_pretrain(cfg);
        if (eval->parsed()) return cmd_eval(cfg);
        if (theory->parsed()) return cmd_theory(cfg);
        if (synth->parsed()) return cmd_make_synthetic(cfg);
        std::cerr << "error: no subcommand given\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace gcpt::cli

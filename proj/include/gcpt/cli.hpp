#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gcpt::cli {

/// Full run configuration. JSON round-trips through a flat key set; command
/// line flags override file values.
struct RunConfig {
    // data
    std::vector<std::string> related;
    std::string current_train;
    std::string current_test;
    std::string embedding_file;
    std::string format = "tsv";
    int num_classes = 2;

    // pipeline
    std::int64_t min_freq = 5;
    std::size_t window = 10;  // 0: whole-example windows

    // pretraining
    double tau = 0.9;
    double gamma = 1.0;
    int s = 5;
    int n_per_epoch = 0;
    int epochs = 80;
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int dim = 300;
    int hidden_dim = 300;
    int out_dim = 300;
    std::string method = "gcpt";  // gcpt | ecl
    bool weighted_positive_sampling = false;
    bool normalize_embeddings = false;

    // evaluation
    std::string mode = "transfer";  // transfer | rdf | zero_shot
    std::string embeddings_path;
    std::string embedding_label;
    int clf_max_epochs = 30;
    int clf_patience = 4;
    int eval_seeds = 3;

    // theory
    std::vector<double> theory_taus = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::int64_t trials = 100000;
    int theory_tokens = 50;
    int theory_dim = 8;

    // synthetic benchmark
    int synth_vocab_size = 200;
    int synth_related_per_class = 1000;
    int synth_current_per_class = 50;
    double overlap = 0.3;
    double domain_tilt = 0.9;

    // global
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out = "out";
};

/// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args);

} // namespace gcpt::cli

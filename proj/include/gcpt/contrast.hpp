#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gcpt/gcn.hpp"
#include "gcpt/pipeline.hpp"
#include "gcpt/rng.hpp"

namespace gcpt {

/// One contrastive sampling unit: a candidate node of class `cls` with S
/// positive and S negative draws (multisets; duplicates kept).
struct ContrastBatch {
    int candidate = -1;
    int cls = -1;
    std::vector<int> positives;
    std::vector<int> negatives;
};

struct TrainConfig {
    double tau = 0.9;
    double gamma = 1.0;
    int s = 5;
    int n_per_epoch = 0;  // 0: one draw per candidate token in expectation
    int epochs = 80;
    double lr = 0.005;
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int hidden_dim = 300;
    int out_dim = 300;
    bool weighted_positive_sampling = false;  // edge-weight-proportional positives
    bool normalize_embeddings = false;        // L2-normalize z before dot products

    void validate() const;
};

/// S i.i.d. draws with replacement, uniform over the candidate's neighborhood
/// within the class view; empty neighborhoods fall back to uniform draws over
/// the rest of the candidate set. Returns nullopt when no valid positive
/// exists (the candidate must be skipped).
std::optional<std::vector<int>> sample_positives(int candidate, const SubgraphView& view, int s,
                                                 Rng& rng, bool weighted = false);

/// S i.i.d. uniform draws with replacement from the cross-class pool.
/// Throws ConfigError when the pool is empty (pretraining cannot proceed).
std::vector<int> sample_negatives(const std::vector<int>& cross_class_pool, int s, Rng& rng);

struct NodeLossResult {
    double loss = 0.0;
    // Exact dloss/dz for every touched row (candidate, positives, negatives);
    // duplicate draws are folded into one entry per node.
    std::vector<std::pair<int, Eigen::RowVectorXd>> grads;
};

/// Softmax contrast of the candidate against the positive/negative multiset
/// (log-sum-exp with max subtraction; every draw keeps its own denominator
/// term). Non-finite dot products raise NumericError.
NodeLossResult node_loss(const EmbeddingMatrix& z, const ContrastBatch& batch, double gamma,
                         bool normalize = false);

/// Arithmetic mean of node losses over explicit batches.
double epoch_loss(const EmbeddingMatrix& z, const std::vector<ContrastBatch>& batches,
                  double gamma, bool normalize = false);

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    int skipped_candidates = 0;
    double wall_ms = 0.0;
};

struct PretrainResult {
    EmbeddingMatrix z;
    GcnModel model;
    std::vector<EpochLog> log;
};

/// Full pretraining: per epoch, forward GCN, draw n_per_epoch candidates
/// (class uniform over non-empty candidate sets, node uniform within), take
/// the mean contrastive loss and its exact gradient, backprop through the
/// GCN and apply one Adam step to W0/W1. Fully reproducible from the seed.
PretrainResult pretrain(const Pipeline& pipe, const Eigen::MatrixXd& h0, const TrainConfig& cfg);

/// Preprocessed corpus for the example-level baseline: in-vocabulary token
/// occurrences per example, same-class and cross-class example pools.
struct EclProblem {
    int num_examples = 0;
    std::vector<std::vector<int>> token_ids;    // per example
    std::vector<std::vector<int>> by_class;     // example indices per class
    std::vector<std::vector<int>> cross_class;  // example indices outside each class
    std::vector<int> labels;
};

/// Requires at least 6 examples per class (5 positives plus the candidate).
EclProblem build_ecl_problem(const LabeledCorpus& corpus, const Vocabulary& vocab);

struct EclEpoch {
    double mean_loss = 0.0;
    Eigen::MatrixXd grad_table;
};

/// One pass over every example as candidate (shuffled), each contrasted with
/// 5 same-class positives and 5 cross-class negatives; example vectors are
/// occurrence means of the table rows. Returns the mean loss and its exact
/// gradient w.r.t. the table.
EclEpoch ecl_epoch(const EclProblem& problem, const Eigen::MatrixXd& table, double gamma,
                   Rng& rng);

struct EclResult {
    Eigen::MatrixXd table;  // trained token table, |V| x d
    std::vector<EpochLog> log;
};

/// Example-level contrastive baseline: epochs of ecl_epoch with one Adam step
/// each (no GCN). The trained token table transfers downstream.
EclResult ecl_pretrain(const LabeledCorpus& corpus, const Vocabulary& vocab,
                       const Eigen::MatrixXd& init_table, const TrainConfig& cfg);

} // namespace gcpt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gcpt/corpus.hpp"

namespace gcpt {

/// Token -> embedding-row lookup used at evaluation time (decoupled from the
/// training vocabulary so external embedding files work too).
class EmbeddingTable {
public:
    EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd rows);

    int dim() const { return static_cast<int>(rows_.cols()); }
    const Eigen::MatrixXd& rows() const { return rows_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    int id_of(const std::string& token) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    Eigen::MatrixXd rows_;
};

/// Mean of the rows of in-vocabulary tokens; zero vector when every token is
/// out of vocabulary (or the list is empty).
Eigen::RowVectorXd embed_example(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table);

struct LinearClassifier {
    Eigen::MatrixXd weights;  // dim x C
    Eigen::RowVectorXd bias;  // C
};

struct ClassifierConfig {
    std::vector<double> lr_grid = {1e-2, 1e-3, 1e-4};
    int max_epochs = 30;
    int patience = 4;
    std::uint64_t seed = 42;
    double val_fraction = 0.2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct PerClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalResult {
    double weighted_f1 = 0.0;
    std::vector<PerClassScore> per_class;
};

/// Support-weighted F1 over classes appearing in either vector; classes
/// absent from the golds carry zero support. Throws ConfigError on length
/// mismatch or empty input.
EvalResult evaluate_weighted_f1(const std::vector<int>& preds, const std::vector<int>& golds);

/// Softmax cross-entropy, full-batch Adam. A seeded shuffle puts 20% of the
/// examples aside for validation; the learning rate comes from the grid by
/// validation weighted F1 and training stops early after `patience` epochs
/// without improvement (best-epoch weights kept). `warm_start` continues from
/// existing weights instead of zeros.
LinearClassifier train_classifier(const LabeledCorpus& train, const EmbeddingTable& table,
                                  const ClassifierConfig& config,
                                  const std::optional<LinearClassifier>& warm_start = std::nullopt);

std::vector<int> predict(const LinearClassifier& clf, const LabeledCorpus& corpus,
                         const EmbeddingTable& table);

enum class ProtocolMode { kTransfer, kRdf, kZeroShot };

struct ProtocolDatasets {
    std::optional<LabeledCorpus> related;        // P (union of related datasets)
    std::optional<LabeledCorpus> current_train;  // O_TR
    LabeledCorpus current_test;                  // O_TE
};

struct SeedRun {
    std::uint64_t seed = 0;
    EvalResult result;
};

struct ProtocolResult {
    ProtocolMode mode = ProtocolMode::kTransfer;
    std::vector<SeedRun> runs;
    double mean_weighted_f1 = 0.0;
};

/// transfer: f_CE(O_TR) -> O_TE.  rdf: f_CE(P) continued with f_CE(O_TR)
/// -> O_TE (empty P degenerates to transfer).  zero_shot: f_CE(P) -> O_TE,
/// O_TR never touched. Repeats over `num_seeds` seeds and reports the mean.
ProtocolResult run_protocol(ProtocolMode mode, const ProtocolDatasets& datasets,
                            const EmbeddingTable& table, const ClassifierConfig& config,
                            int num_seeds = 3);

/// "mode,embedding,dataset,seed,weighted_f1" rows plus one aggregate row
/// (seed column "mean") per result.
void write_results_csv(const std::vector<std::pair<std::string, ProtocolResult>>& labeled_results,
                       const std::string& dataset, const std::string& path);

std::string protocol_mode_name(ProtocolMode mode);

} // namespace gcpt

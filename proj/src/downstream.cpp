#include "gcpt/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "gcpt/adam.hpp"
#include "gcpt/error.hpp"
#include "gcpt/rng.hpp"

namespace gcpt {

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Eigen::MatrixXd rows)
    : tokens_(std::move(tokens)), rows_(std::move(rows)) {
    if (static_cast<Eigen::Index>(tokens_.size()) != rows_.rows()) {
        throw ConfigError("embedding table token list and rows disagree");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        ids_.emplace(tokens_[i], static_cast<int>(i));
    }
}

int EmbeddingTable::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? -1 : it->second;
}

Eigen::RowVectorXd embed_example(const std::vector<std::string>& tokens,
                                 const EmbeddingTable& table) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(table.dim());
    int hits = 0;
    for (const auto& tok : tokens) {
        const int id = table.id_of(tok);
        if (id >= 0) {
            sum += table.rows().row(id);
            ++hits;
        }
    }
    if (hits > 0) {
        sum /= static_cast<double>(hits);
    }
    return sum;
}

EvalResult evaluate_weighted_f1(const std::vector<int>& preds, const std::vector<int>& golds) {
    if (preds.size() != golds.size()) {
        throw ConfigError("prediction and gold label lists differ in length");
    }
    if (preds.empty()) {
        throw ConfigError("cannot evaluate empty label lists");
    }

    int num_classes = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || golds[i] < 0) {
            throw ConfigError("labels must be non-negative");
        }
        num_classes = std::max(num_classes, std::max(preds[i], golds[i]) + 1);
    }

    std::vector<std::int64_t> tp(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::int64_t> fp(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::int64_t> fn(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::int64_t> support(static_cast<std::size_t>(num_classes), 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto p = static_cast<std::size_t>(preds[i]);
        const auto g = static_cast<std::size_t>(golds[i]);
        ++support[g];
        if (p == g) {
            ++tp[g];
        } else {
            ++fp[p];
            ++fn[g];
        }
    }

    EvalResult result;
    result.per_class.resize(static_cast<std::size_t>(num_classes));
    double weighted_sum = 0.0;
    std::int64_t total_support = 0;
    for (std::size_t c = 0; c < static_cast<std::size_t>(num_classes); ++c) {
        auto& score = result.per_class[c];
        score.support = support[c];
        const std::int64_t pred_pos = tp[c] + fp[c];
        const std::int64_t gold_pos = tp[c] + fn[c];
        score.precision = pred_pos > 0 ? static_cast<double>(tp[c]) / static_cast<double>(pred_pos) : 0.0;
        score.recall = gold_pos > 0 ? static_cast<double>(tp[c]) / static_cast<double>(gold_pos) : 0.0;
        score.f1 = (score.precision + score.recall) > 0.0
                       ? 2.0 * score.precision * score.recall / (score.precision + score.recall)
                       : 0.0;
        weighted_sum += static_cast<double>(score.support) * score.f1;
        total_support += score.support;
    }
    result.weighted_f1 = weighted_sum / static_cast<double>(total_support);
    return result;
}

namespace {

struct Featurized {
    Eigen::MatrixXd x;  // n x dim
    std::vector<int> y;
};

Featurized featurize(const LabeledCorpus& corpus, const EmbeddingTable& table) {
    Featurized f;
    const auto n = static_cast<Eigen::Index>(corpus.examples.size());
    f.x.resize(n, table.dim());
    f.y.reserve(corpus.examples.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& ex = corpus.examples[static_cast<std::size_t>(i)];
        f.x.row(i) = embed_example(tokenize(ex.text), table);
        f.y.push_back(ex.label);
    }
    return f;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        int best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
        }
        out.push_back(best);
    }
    return out;
}

/// One Adam run at a fixed learning rate with early stopping on validation
/// weighted F1. Returns the best-epoch parameters and their validation score.
struct FitOutcome {
    Eigen::MatrixXd params;  // (dim+1) x C, last row is the bias
    double val_f1 = -1.0;
};

FitOutcome fit_at_lr(const Eigen::MatrixXd& x_train, const std::vector<int>& y_train,
                     const Eigen::MatrixXd& x_val, const std::vector<int>& y_val, int num_classes,
                     double lr, const ClassifierConfig& config, const Eigen::MatrixXd& init) {
    const Eigen::Index n = x_train.rows();
    const Eigen::Index aug = x_train.cols() + 1;

    Eigen::MatrixXd xt(n, aug);
    xt << x_train, Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd xv(x_val.rows(), aug);
    xv << x_val, Eigen::VectorXd::Ones(x_val.rows());

    Eigen::MatrixXd params = init;
    AdamState adam(aug, num_classes, config.beta1, config.beta2, config.adam_eps);

    FitOutcome best;
    best.params = params;
    int stall = 0;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Eigen::MatrixXd logits = xt * params;
        Eigen::MatrixXd probs = logits;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double row_max = logits.row(i).maxCoeff();
            probs.row(i) = (logits.row(i).array() - row_max).exp();
            probs.row(i) /= probs.row(i).sum();
        }
        Eigen::MatrixXd dlogits = probs;
        for (Eigen::Index i = 0; i < n; ++i) {
            dlogits(i, y_train[static_cast<std::size_t>(i)]) -= 1.0;
        }
        dlogits /= static_cast<double>(n);
        Eigen::MatrixXd grad = xt.transpose() * dlogits;
        adam.step(params, grad, lr);

        const double val_f1 =
            evaluate_weighted_f1(argmax_rows(xv * params), y_val).weighted_f1;
        if (val_f1 > best.val_f1) {
            best.val_f1 = val_f1;
            best.params = params;
            stall = 0;
        } else if (++stall >= config.patience) {
            break;
        }
    }
    return best;
}

} // namespace

LinearClassifier train_classifier(const LabeledCorpus& train, const EmbeddingTable& table,
                                  const ClassifierConfig& config,
                                  const std::optional<LinearClassifier>& warm_start) {
    if (train.examples.empty()) {
        throw DataError("cannot train on an empty corpus");
    }
    if (config.lr_grid.empty() || config.max_epochs < 1 || config.patience < 1) {
        throw ConfigError("classifier config needs a learning-rate grid, epochs and patience");
    }

    Featurized f = featurize(train, table);
    const auto n = static_cast<std::size_t>(f.x.rows());
    if (n < 2) {
        throw DataError("need at least two examples for a validation split");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "val_split"));
    std::shuffle(order.begin(), order.end(), rng);

    auto val_count = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * config.val_fraction));
    val_count = std::clamp<std::size_t>(val_count, 1, n - 1);

    const std::size_t train_count = n - val_count;
    Eigen::MatrixXd x_train(train_count, f.x.cols()), x_val(val_count, f.x.cols());
    std::vector<int> y_train(train_count), y_val(val_count);
    for (std::size_t i = 0; i < val_count; ++i) {
        x_val.row(static_cast<Eigen::Index>(i)) = f.x.row(static_cast<Eigen::Index>(order[i]));
        y_val[i] = f.y[order[i]];
    }
    for (std::size_t i = 0; i < train_count; ++i) {
        const std::size_t src = order[val_count + i];
        x_train.row(static_cast<Eigen::Index>(i)) = f.x.row(static_cast<Eigen::Index>(src));
        y_train[i] = f.y[src];
    }

    if (std::adjacent_find(y_train.begin(), y_train.end(), std::not_equal_to<>()) ==
        y_train.end()) {
        throw DataError("degenerate single-class training set");
    }

    const int num_classes = train.num_classes;
    Eigen::MatrixXd init = Eigen::MatrixXd::Zero(f.x.cols() + 1, num_classes);
    if (warm_start) {
        if (warm_start->weights.rows() != f.x.cols() || warm_start->weights.cols() != num_classes) {
            throw ConfigError("warm-start classifier shape does not match");
        }
        init.topRows(f.x.cols()) = warm_start->weights;
        init.row(f.x.cols()) = warm_start->bias;
    }

    FitOutcome best;
    for (double lr : config.lr_grid) {
        FitOutcome outcome =
            fit_at_lr(x_train, y_train, x_val, y_val, num_classes, lr, config, init);
        if (outcome.val_f1 > best.val_f1) {
            best = outcome;
        }
    }

    LinearClassifier clf;
    clf.weights = best.params.topRows(f.x.cols());
    clf.bias = best.params.row(f.x.cols());
    return clf;
}

std::vector<int> predict(const LinearClassifier& clf, const LabeledCorpus& corpus,
                         const EmbeddingTable& table) {
    Featurized f = featurize(corpus, table);
    Eigen::MatrixXd logits = (f.x * clf.weights).rowwise() + clf.bias;
    return argmax_rows(logits);
}

std::string protocol_mode_name(ProtocolMode mode) {
    switch (mode) {
        case ProtocolMode::kTransfer: return "transfer";
        case ProtocolMode::kRdf: return "rdf";
        case ProtocolMode::kZeroShot: return "zero_shot";
    }
    return "unknown";
}

ProtocolResult run_protocol(ProtocolMode mode, const ProtocolDatasets& datasets,
                            const EmbeddingTable& table, const ClassifierConfig& config,
                            int num_seeds) {
    if (num_seeds < 1) {
        throw ConfigError("need at least one evaluation seed");
    }
    if ((mode == ProtocolMode::kTransfer || mode == ProtocolMode::kRdf) &&
        !datasets.current_train) {
        throw ConfigError(protocol_mode_name(mode) + " mode needs the current train split");
    }
    if (mode == ProtocolMode::kZeroShot && !datasets.related) {
        throw ConfigError("zero_shot mode needs the related corpus");
    }

    ProtocolResult result;
    result.mode = mode;
    double sum = 0.0;
    for (int i = 0; i < num_seeds; ++i) {
        ClassifierConfig run_config = config;
        run_config.seed = config.seed + static_cast<std::uint64_t>(i);

        LinearClassifier clf;
        switch (mode) {
            case ProtocolMode::kTransfer:
                clf = train_classifier(*datasets.current_train, table, run_config);
                break;
            case ProtocolMode::kZeroShot:
                clf = train_classifier(*datasets.related, table, run_config);
                break;
            case ProtocolMode::kRdf: {
                if (datasets.related) {
                    LinearClassifier stage1 = train_classifier(*datasets.related, table, run_config);
                    clf = train_classifier(*datasets.current_train, table, run_config, stage1);
                } else {
                    clf = train_classifier(*datasets.current_train, table, run_config);
                }
                break;
            }
        }

        std::vector<int> golds;
        golds.reserve(datasets.current_test.examples.size());
        for (const auto& ex : datasets.current_test.examples) golds.push_back(ex.label);

        SeedRun run;
        run.seed = run_config.seed;
        run.result = evaluate_weighted_f1(predict(clf, datasets.current_test, table), golds);
        sum += run.result.weighted_f1;
        result.runs.push_back(std::move(run));
    }
    result.mean_weighted_f1 = sum / static_cast<double>(num_seeds);
    return result;
}

void write_results_csv(const std::vector<std::pair<std::string, ProtocolResult>>& labeled_results,
                       const std::string& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write results file: " + path);
    }
    out << "mode,embedding,dataset,seed,weighted_f1\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& [label, res] : labeled_results) {
        const std::string mode = protocol_mode_name(res.mode);
        for (const auto& run : res.runs) {
            out << mode << ',' << label << ',' << dataset << ',' << run.seed << ','
                << run.result.weighted_f1 << '\n';
        }
        out << mode << ',' << label << ',' << dataset << ",mean," << res.mean_weighted_f1 << '\n';
    }
}

} // namespace gcpt

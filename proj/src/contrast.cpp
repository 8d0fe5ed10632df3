#include "gcpt/contrast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "gcpt/adam.hpp"
#include "gcpt/error.hpp"

namespace gcpt {

namespace {

using RowVec = Eigen::RowVectorXd;

struct SoftmaxContrast {
    double loss = 0.0;
    RowVec grad_anchor;
    std::vector<RowVec> grad_members;  // one per member occurrence
};

/// l = logsumexp_k(a_k) - mean over positives of a_k, with
/// a_k = anchor . member_k / gamma. members = positives then negatives,
/// every draw contributing its own denominator term.
SoftmaxContrast softmax_contrast(const RowVec& anchor, const std::vector<RowVec>& members,
                                 int num_positives, double gamma) {
    const int k = static_cast<int>(members.size());
    Eigen::VectorXd logits(k);
    for (int m = 0; m < k; ++m) {
        logits(m) = anchor.dot(members[static_cast<std::size_t>(m)]) / gamma;
    }
    if (!logits.allFinite()) {
        throw NumericError("non-finite dot product in contrastive loss");
    }

    const double max_logit = logits.maxCoeff();
    const double log_z = max_logit + std::log((logits.array() - max_logit).exp().sum());

    SoftmaxContrast out;
    out.loss = log_z - logits.head(num_positives).mean();

    // dloss/da_k = softmax_k - 1/S for positives, softmax_k for negatives
    Eigen::VectorXd dlogits = (logits.array() - log_z).exp();
    dlogits.head(num_positives).array() -= 1.0 / num_positives;

    out.grad_anchor = RowVec::Zero(anchor.size());
    out.grad_members.reserve(static_cast<std::size_t>(k));
    for (int m = 0; m < k; ++m) {
        out.grad_anchor += dlogits(m) / gamma * members[static_cast<std::size_t>(m)];
        out.grad_members.push_back(dlogits(m) / gamma * anchor);
    }
    return out;
}

RowVec l2_normalize(const RowVec& v) {
    const double norm = v.norm();
    return norm < 1e-12 ? RowVec::Zero(v.size()).eval() : (v / norm).eval();
}

/// Pulls a gradient w.r.t. the normalized row back to the raw row.
RowVec l2_normalize_backward(const RowVec& raw, const RowVec& grad_normalized) {
    const double norm = raw.norm();
    if (norm < 1e-12) {
        return RowVec::Zero(raw.size());
    }
    const RowVec unit = raw / norm;
    return (grad_normalized - grad_normalized.dot(unit) * unit) / norm;
}

Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            w(i, j) = uniform_real(rng, -limit, limit);
        }
    }
    return w;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

void TrainConfig::validate() const {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (s < 1) throw ConfigError("s must be >= 1");
    if (n_per_epoch < 0) throw ConfigError("n_per_epoch must be >= 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw ConfigError("adam eps must be > 0");
    if (hidden_dim < 1 || out_dim < 1) throw ConfigError("layer dimensions must be >= 1");
}

std::optional<std::vector<int>> sample_positives(int candidate, const SubgraphView& view, int s,
                                                 Rng& rng, bool weighted) {
    auto it = view.neighbors.find(candidate);
    if (it == view.neighbors.end()) {
        throw ConfigError("candidate " + std::to_string(candidate) + " is not in the class view");
    }
    const auto& nbh = it->second;

    std::vector<int> draws;
    draws.reserve(static_cast<std::size_t>(s));
    if (!nbh.empty()) {
        if (weighted) {
            std::vector<double> weights;
            weights.reserve(nbh.size());
            for (const auto& [node, w] : nbh) {
                (void)node;
                weights.push_back(w);
            }
            std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
            for (int i = 0; i < s; ++i) draws.push_back(nbh[dist(rng)].first);
        } else {
            for (int i = 0; i < s; ++i) draws.push_back(nbh[uniform_index(rng, nbh.size())].first);
        }
        return draws;
    }

    // Isolated candidate inside its view: fall back to the rest of P^c.
    std::vector<int> pool;
    pool.reserve(view.nodes.size());
    for (int node : view.nodes) {
        if (node != candidate) pool.push_back(node);
    }
    if (pool.empty()) {
        return std::nullopt;
    }
    for (int i = 0; i < s; ++i) draws.push_back(pool[uniform_index(rng, pool.size())]);
    return draws;
}

std::vector<int> sample_negatives(const std::vector<int>& cross_class_pool, int s, Rng& rng) {
    if (cross_class_pool.empty()) {
        throw ConfigError("cross-class candidate pool is empty; cannot sample negatives");
    }
    std::vector<int> draws;
    draws.reserve(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
        draws.push_back(cross_class_pool[uniform_index(rng, cross_class_pool.size())]);
    }
    return draws;
}

NodeLossResult node_loss(const EmbeddingMatrix& z, const ContrastBatch& batch, double gamma,
                         bool normalize) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    if (batch.positives.empty() || batch.positives.size() != batch.negatives.size()) {
        throw ConfigError("batch must hold S positives and S negatives, S >= 1");
    }

    const int s = static_cast<int>(batch.positives.size());
    std::vector<int> member_ids = batch.positives;
    member_ids.insert(member_ids.end(), batch.negatives.begin(), batch.negatives.end());

    const RowVec anchor_raw = z.row(batch.candidate);
    const RowVec anchor = normalize ? l2_normalize(anchor_raw) : anchor_raw;
    std::vector<RowVec> members;
    members.reserve(member_ids.size());
    for (int id : member_ids) {
        const RowVec row = z.row(id);
        members.push_back(normalize ? l2_normalize(row) : row);
    }

    SoftmaxContrast sc = softmax_contrast(anchor, members, s, gamma);

    NodeLossResult out;
    out.loss = sc.loss;

    // Fold duplicate draws into one gradient row per node.
    auto accumulate = [&](int id, const RowVec& g) {
        for (auto& [existing, row] : out.grads) {
            if (existing == id) {
                row += g;
                return;
            }
        }
        out.grads.emplace_back(id, g);
    };

    accumulate(batch.candidate, sc.grad_anchor);
    for (std::size_t m = 0; m < member_ids.size(); ++m) {
        accumulate(member_ids[m], sc.grad_members[m]);
    }

    if (normalize) {
        for (auto& [id, g] : out.grads) {
            g = l2_normalize_backward(z.row(id), g);
        }
    }
    return out;
}

double epoch_loss(const EmbeddingMatrix& z, const std::vector<ContrastBatch>& batches,
                  double gamma, bool normalize) {
    if (batches.empty()) {
        throw ConfigError("epoch loss needs at least one batch");
    }
    double sum = 0.0;
    for (const auto& batch : batches) {
        sum += node_loss(z, batch, gamma, normalize).loss;
    }
    return sum / static_cast<double>(batches.size());
}

PretrainResult pretrain(const Pipeline& pipe, const Eigen::MatrixXd& h0, const TrainConfig& cfg) {
    cfg.validate();
    if (h0.rows() != pipe.vocab.size()) {
        throw ConfigError("feature matrix row count does not match the vocabulary");
    }
    if (pipe.active_classes.empty()) {
        throw DataError("no class has candidate tokens; nothing to pretrain on");
    }
    for (int c : pipe.active_classes) {
        if (pipe.neg_pools[static_cast<std::size_t>(c)].empty()) {
            throw ConfigError("class " + std::to_string(c) +
                              " has no cross-class candidates to contrast against");
        }
    }

    GcnModel model;
    model.h0 = h0;
    Rng init_rng(derive_seed(cfg.seed, "gcn_init"));
    model.w0 = glorot_uniform(h0.cols(), cfg.hidden_dim, init_rng);
    model.w1 = glorot_uniform(cfg.hidden_dim, cfg.out_dim, init_rng);

    int total_candidates = 0;
    for (int c : pipe.active_classes) {
        total_candidates += static_cast<int>(pipe.cond.candidates[static_cast<std::size_t>(c)].size());
    }
    const int draws_per_epoch = cfg.n_per_epoch > 0 ? cfg.n_per_epoch : total_candidates;

    AdamState adam0(model.w0.rows(), model.w0.cols(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    AdamState adam1(model.w1.rows(), model.w1.cols(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    Rng rng(derive_seed(cfg.seed, "pretrain"));

    PretrainResult result;
    Eigen::MatrixXd grad_z(pipe.vocab.size(), cfg.out_dim);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        GcnForward fwd = gcn_forward(model, pipe.op);

        grad_z.setZero();
        double loss_sum = 0.0;
        int used = 0, skipped = 0;
        for (int draw = 0; draw < draws_per_epoch; ++draw) {
            const int cls =
                pipe.active_classes[uniform_index(rng, pipe.active_classes.size())];
            const auto& pool = pipe.cond.candidates[static_cast<std::size_t>(cls)];
            const int candidate = pool[uniform_index(rng, pool.size())];

            auto positives = sample_positives(candidate, pipe.views[static_cast<std::size_t>(cls)],
                                              cfg.s, rng, cfg.weighted_positive_sampling);
            if (!positives) {
                ++skipped;
                continue;
            }
            ContrastBatch batch{candidate, cls, std::move(*positives),
                                sample_negatives(pipe.neg_pools[static_cast<std::size_t>(cls)],
                                                 cfg.s, rng)};
            NodeLossResult nl = node_loss(fwd.z, batch, cfg.gamma, cfg.normalize_embeddings);
            loss_sum += nl.loss;
            ++used;
            for (const auto& [id, g] : nl.grads) {
                grad_z.row(id) += g;
            }
        }
        if (used == 0) {
            throw DataError("every candidate draw was skipped in epoch " + std::to_string(epoch));
        }

        const double mean_loss = loss_sum / static_cast<double>(used);
        if (!std::isfinite(mean_loss)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
        grad_z /= static_cast<double>(used);

        GcnGradients grads = gcn_backward(model, pipe.op, fwd, grad_z);
        adam0.step(model.w0, grads.w0, cfg.lr);
        adam1.step(model.w1, grads.w1, cfg.lr);

        result.log.push_back({epoch, mean_loss, skipped, elapsed_ms(t0)});
    }

    result.z = gcn_forward(model, pipe.op).z;
    result.model = std::move(model);
    return result;
}

EclProblem build_ecl_problem(const LabeledCorpus& corpus, const Vocabulary& vocab) {
    constexpr int kSamplesPerSide = 5;
    EclProblem problem;
    problem.num_examples = static_cast<int>(corpus.examples.size());
    problem.token_ids.resize(static_cast<std::size_t>(problem.num_examples));
    problem.by_class.resize(static_cast<std::size_t>(corpus.num_classes));
    problem.cross_class.resize(static_cast<std::size_t>(corpus.num_classes));
    for (int e = 0; e < problem.num_examples; ++e) {
        const auto& ex = corpus.examples[static_cast<std::size_t>(e)];
        for (const auto& tok : tokenize(ex.text)) {
            const int id = vocab.id_of(tok);
            if (id >= 0) problem.token_ids[static_cast<std::size_t>(e)].push_back(id);
        }
        problem.by_class[static_cast<std::size_t>(ex.label)].push_back(e);
        problem.labels.push_back(ex.label);
    }
    for (int c = 0; c < corpus.num_classes; ++c) {
        if (problem.by_class[static_cast<std::size_t>(c)].size() < kSamplesPerSide + 1) {
            throw DataError("class " + std::to_string(c) + " has fewer than " +
                            std::to_string(kSamplesPerSide + 1) + " examples");
        }
        for (int other = 0; other < corpus.num_classes; ++other) {
            if (other == c) continue;
            auto& pool = problem.cross_class[static_cast<std::size_t>(c)];
            pool.insert(pool.end(), problem.by_class[static_cast<std::size_t>(other)].begin(),
                        problem.by_class[static_cast<std::size_t>(other)].end());
        }
    }
    return problem;
}

EclEpoch ecl_epoch(const EclProblem& problem, const Eigen::MatrixXd& table, double gamma,
                   Rng& rng) {
    constexpr int kSamplesPerSide = 5;
    const Eigen::Index dim = table.cols();
    const int num_examples = problem.num_examples;

    Eigen::MatrixXd example_vecs(num_examples, dim);
    for (int e = 0; e < num_examples; ++e) {
        const auto& ids = problem.token_ids[static_cast<std::size_t>(e)];
        if (ids.empty()) {
            example_vecs.row(e).setZero();
            continue;
        }
        RowVec mean = RowVec::Zero(dim);
        for (int id : ids) mean += table.row(id);
        example_vecs.row(e) = mean / static_cast<double>(ids.size());
    }

    std::vector<int> order(static_cast<std::size_t>(num_examples));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Eigen::MatrixXd grad_examples = Eigen::MatrixXd::Zero(num_examples, dim);
    double loss_sum = 0.0;
    for (int e : order) {
        const int cls = problem.labels[static_cast<std::size_t>(e)];
        const auto& same = problem.by_class[static_cast<std::size_t>(cls)];
        const auto& cross = problem.cross_class[static_cast<std::size_t>(cls)];

        std::vector<int> member_examples;
        member_examples.reserve(2 * kSamplesPerSide);
        for (int i = 0; i < kSamplesPerSide; ++i) {
            int pick = e;
            while (pick == e) {
                pick = same[uniform_index(rng, same.size())];
            }
            member_examples.push_back(pick);
        }
        for (int i = 0; i < kSamplesPerSide; ++i) {
            member_examples.push_back(cross[uniform_index(rng, cross.size())]);
        }

        std::vector<RowVec> members;
        members.reserve(member_examples.size());
        for (int m : member_examples) members.emplace_back(example_vecs.row(m));

        SoftmaxContrast sc =
            softmax_contrast(example_vecs.row(e), members, kSamplesPerSide, gamma);
        loss_sum += sc.loss;
        grad_examples.row(e) += sc.grad_anchor;
        for (std::size_t m = 0; m < member_examples.size(); ++m) {
            grad_examples.row(member_examples[m]) += sc.grad_members[m];
        }
    }

    EclEpoch out;
    out.mean_loss = loss_sum / static_cast<double>(num_examples);
    out.grad_table = Eigen::MatrixXd::Zero(table.rows(), dim);
    for (int e = 0; e < num_examples; ++e) {
        const auto& ids = problem.token_ids[static_cast<std::size_t>(e)];
        if (ids.empty()) continue;
        const RowVec g = grad_examples.row(e) /
                         (static_cast<double>(ids.size()) * static_cast<double>(num_examples));
        for (int id : ids) out.grad_table.row(id) += g;
    }
    return out;
}

EclResult ecl_pretrain(const LabeledCorpus& corpus, const Vocabulary& vocab,
                       const Eigen::MatrixXd& init_table, const TrainConfig& cfg) {
    cfg.validate();
    if (init_table.rows() != vocab.size()) {
        throw ConfigError("token table row count does not match the vocabulary");
    }
    const EclProblem problem = build_ecl_problem(corpus, vocab);

    EclResult result;
    result.table = init_table;
    AdamState adam(result.table.rows(), result.table.cols(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    Rng rng(derive_seed(cfg.seed, "ecl"));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EclEpoch step = ecl_epoch(problem, result.table, cfg.gamma, rng);
        if (!std::isfinite(step.mean_loss)) {
            throw NumericError("ECL training diverged at epoch " + std::to_string(epoch));
        }
        adam.step(result.table, step.grad_table, cfg.lr);
        result.log.push_back({epoch, step.mean_loss, 0, elapsed_ms(t0)});
    }
    return result;
}

} // namespace gcpt

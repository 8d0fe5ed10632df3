#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gcpt/contrast.hpp"
#include "gcpt/error.hpp"
#include "gcpt/gcn.hpp"
#include "test_util.hpp"

using namespace gcpt;

namespace {

LabeledCorpus corpus_of(const std::vector<std::pair<int, std::string>>& rows) {
    LabeledCorpus c;
    c.num_classes = 2;
    for (const auto& [label, text] : rows) c.examples.push_back({text, label});
    return c;
}

/// Star on {0,1,2} with edges 0-1 and 0-2: Nbh(0) = {1, 2}.
SubgraphView star_view() {
    TokenGraph g(3);
    g.add_edge(0, 1, 1.0);
    g.add_edge(0, 2, 1.0);
    return induced_subgraph(g, {0, 1, 2}, 0);
}

/// Two well-separated topic clusters; every token is a candidate at tau=0.9.
LabeledCorpus cluster_corpus() {
    std::vector<std::pair<int, std::string>> rows;
    for (int i = 0; i < 12; ++i) {
        rows.push_back({0, "red green blue red green"});
        rows.push_back({0, "green blue red blue"});
        rows.push_back({1, "sun moon star sun moon"});
        rows.push_back({1, "moon star sun star"});
    }
    return corpus_of(rows);
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.s = 2;
    cfg.epochs = 5;
    cfg.lr = 0.05;
    cfg.hidden_dim = 6;
    cfg.out_dim = 4;
    cfg.seed = 9;
    return cfg;
}

} // namespace

TEST_CASE("node_loss closed forms at S=1") {
    EmbeddingMatrix z(3, 2);

    SUBCASE("unit positive dot, zero negative dot") {
        z << 1, 0, 1, 0, 0, 1;  // z_n.z_p = 1, z_n.z_m = 0
        ContrastBatch b{0, 0, {1}, {2}};
        NodeLossResult r = node_loss(z, b, 1.0);
        CHECK(r.loss == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
        CHECK(r.loss == doctest::Approx(0.3132616875).epsilon(1e-9));
    }
    SUBCASE("identical positive and negative") {
        z << 1, 0, 0.37, -0.8, 0.37, -0.8;
        ContrastBatch b{0, 0, {1}, {2}};
        CHECK(node_loss(z, b, 1.0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("temperature 0.5 doubles the margin") {
        z << 1, 0, 1, 0, 0, 1;
        ContrastBatch b{0, 0, {1}, {2}};
        NodeLossResult r = node_loss(z, b, 0.5);
        CHECK(r.loss == doctest::Approx(std::log(1.0 + std::exp(-2.0))).epsilon(1e-12));
        CHECK(r.loss == doctest::Approx(0.1269280110).epsilon(1e-9));
    }
}

TEST_CASE("epoch_loss is the arithmetic mean of node losses") {
    EmbeddingMatrix z(4, 2);
    z << 1, 0, 1, 0, 0, 1, 1, 0;  // row 3 mirrors the positive geometry
    ContrastBatch sep{0, 0, {1}, {2}};  // loss log(1+e^-1)
    ContrastBatch tie{0, 0, {1}, {3}};  // identical members: loss log 2

    CHECK(epoch_loss(z, {sep}, 1.0) == doctest::Approx(node_loss(z, sep, 1.0).loss));
    const double mean = epoch_loss(z, {sep, tie}, 1.0);
    CHECK(mean == doctest::Approx(0.5 * (0.3132616875 + std::log(2.0))).epsilon(1e-9));
    CHECK(mean == doctest::Approx(0.5032).epsilon(1e-4));
    CHECK_THROWS_AS(epoch_loss(z, {}, 1.0), ConfigError);
}

TEST_CASE("node_loss stays positive and handles duplicate draws as a multiset") {
    EmbeddingMatrix z(4, 3);
    z << 0.9, -0.2, 0.1, 0.4, 0.4, -0.6, -0.5, 0.3, 0.8, 0.1, -0.7, 0.2;

    ContrastBatch dup{0, 0, {1, 1}, {2, 3}};
    NodeLossResult r = node_loss(z, dup, 1.0);
    CHECK(r.loss > 0.0);

    // duplicate positive draws fold into one gradient row
    int entries_for_1 = 0;
    for (const auto& [id, g] : r.grads) {
        (void)g;
        if (id == 1) ++entries_for_1;
    }
    CHECK(entries_for_1 == 1);

    // the duplicated node contributes two denominator terms, so the loss
    // differs from the S=1 batch on the same geometry
    ContrastBatch single{0, 0, {1}, {2}};
    CHECK(r.loss != doctest::Approx(node_loss(z, single, 1.0).loss));
}

TEST_CASE("node_loss gradients match finite differences") {
    EmbeddingMatrix z(5, 3);
    z << 0.9, -0.2, 0.1, 0.4, 0.4, -0.6, -0.5, 0.3, 0.8, 0.1, -0.7, 0.2, 0.3, 0.3, -0.3;
    ContrastBatch batch{0, 0, {1, 4, 1}, {2, 3, 3}};

    for (bool normalize : {false, true}) {
        CAPTURE(normalize);
        NodeLossResult r = node_loss(z, batch, 0.7, normalize);
        const double step = 1e-6;
        for (const auto& [id, grad] : r.grads) {
            for (Eigen::Index d = 0; d < z.cols(); ++d) {
                EmbeddingMatrix zp = z, zm = z;
                zp(id, d) += step;
                zm(id, d) -= step;
                const double fd = (node_loss(zp, batch, 0.7, normalize).loss -
                                   node_loss(zm, batch, 0.7, normalize).loss) /
                                  (2.0 * step);
                CHECK(grad(d) == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("loss decreases along its negative gradient") {
    EmbeddingMatrix z(5, 3);
    z << 0.9, -0.2, 0.1, 0.4, 0.4, -0.6, -0.5, 0.3, 0.8, 0.1, -0.7, 0.2, 0.3, 0.3, -0.3;
    ContrastBatch batch{0, 0, {1, 4}, {2, 3}};

    NodeLossResult r = node_loss(z, batch, 1.0);
    EmbeddingMatrix stepped = z;
    for (const auto& [id, g] : r.grads) {
        stepped.row(id) -= 1e-4 * g;
    }
    CHECK(node_loss(stepped, batch, 1.0).loss < r.loss);
}

TEST_CASE("margin monotonicity at S=1") {
    // losses strictly decrease as the positive/negative margin grows
    std::vector<double> margins = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0};
    double prev = std::numeric_limits<double>::infinity();
    for (double margin : margins) {
        EmbeddingMatrix z(3, 1);
        z << 1.0, margin, 0.0;  // dot_p - dot_m = margin
        ContrastBatch b{0, 0, {1}, {2}};
        const double loss = node_loss(z, b, 1.0).loss;
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("positive sampling follows the neighborhood, with fallback") {
    SubgraphView view = star_view();

    SUBCASE("seeded draws are reproducible (golden)") {
        Rng rng(123);
        auto draws = sample_positives(0, view, 4, rng);
        REQUIRE(draws.has_value());
        CHECK(*draws == std::vector<int>{1, 2, 2, 2});  // regression pin, first recorded run
        for (int d : *draws) CHECK((d == 1 || d == 2));
        Rng rng2(123);
        CHECK(*sample_positives(0, view, 4, rng2) == *draws);
    }
    SUBCASE("empty neighborhood falls back to the rest of the candidate set") {
        TokenGraph g(3);  // no edges at all
        SubgraphView isolated = induced_subgraph(g, {0, 2}, 0);
        Rng rng(5);
        auto draws = sample_positives(0, isolated, 3, rng);
        REQUIRE(draws.has_value());
        CHECK(*draws == std::vector<int>{2, 2, 2});
    }
    SUBCASE("singleton candidate set skips") {
        TokenGraph g(2);
        SubgraphView lone = induced_subgraph(g, {0}, 0);
        Rng rng(5);
        CHECK(!sample_positives(0, lone, 3, rng).has_value());
    }
    SUBCASE("candidate outside the view is a usage error") {
        Rng rng(5);
        CHECK_THROWS_AS(sample_positives(7, view, 2, rng), ConfigError);
    }
}

TEST_CASE("weight-proportional positive sampling skews toward heavy edges") {
    TokenGraph g(3);
    g.add_edge(0, 1, 10.0);
    g.add_edge(0, 2, 0.1);
    SubgraphView view = induced_subgraph(g, {0, 1, 2}, 0);

    Rng rng(17);
    int heavy = 0, total = 0;
    for (int trial = 0; trial < 200; ++trial) {
        auto draws = sample_positives(0, view, 5, rng, /*weighted=*/true);
        for (int d : *draws) {
            ++total;
            if (d == 1) ++heavy;
        }
    }
    CHECK(static_cast<double>(heavy) / total > 0.9);
}

TEST_CASE("negative sampling is uniform over the cross-class pool") {
    const std::vector<int> pool = {10, 11, 12, 13, 14};
    Rng rng(2023);
    std::vector<int> counts(5, 0);
    const int draws = 100000;
    auto sampled = sample_negatives(pool, draws, rng);
    for (int node : sampled) {
        ++counts[static_cast<std::size_t>(node - 10)];
    }
    // 3 sigma of Binomial(1e5, 0.2)
    const double expected = draws / 5.0;
    const double sigma = std::sqrt(draws * 0.2 * 0.8);
    for (int c : counts) {
        CHECK(std::abs(c - expected) < 3.0 * sigma);
    }

    CHECK_THROWS_AS(sample_negatives({}, 3, rng), ConfigError);
    Rng rng2(4);
    CHECK(sample_negatives({42}, 3, rng2) == std::vector<int>{42, 42, 42});
}

TEST_CASE("full contrastive objective gradients match finite differences") {
    LabeledCorpus corpus = cluster_corpus();
    Pipeline pipe = build_pipeline(corpus, 0.9, 1, 5);
    REQUIRE(pipe.active_classes.size() == 2);

    TrainConfig cfg = tiny_config();
    Eigen::MatrixXd h0 = init_features(pipe.vocab, std::nullopt, 5, cfg.seed);

    GcnModel model;
    model.h0 = h0;
    Rng wrng(31);
    model.w0 = Eigen::MatrixXd::NullaryExpr(5, cfg.hidden_dim,
                                            [&] { return uniform_real(wrng, -0.5, 0.5); });
    model.w1 = Eigen::MatrixXd::NullaryExpr(cfg.hidden_dim, cfg.out_dim,
                                            [&] { return uniform_real(wrng, -0.5, 0.5); });

    // freeze a batch set
    Rng srng(77);
    std::vector<ContrastBatch> batches;
    for (int c : pipe.active_classes) {
        for (int candidate : pipe.cond.candidates[static_cast<std::size_t>(c)]) {
            auto pos = sample_positives(candidate, pipe.views[static_cast<std::size_t>(c)],
                                        cfg.s, srng);
            if (!pos) continue;
            batches.push_back({candidate, c, *pos,
                               sample_negatives(pipe.neg_pools[static_cast<std::size_t>(c)],
                                                cfg.s, srng)});
        }
    }
    REQUIRE(!batches.empty());

    auto objective = [&](const GcnModel& m) {
        return epoch_loss(gcn_forward(m, pipe.op).z, batches, cfg.gamma);
    };

    // analytic gradient through node losses and the GCN backward pass
    GcnForward fwd = gcn_forward(model, pipe.op);
    Eigen::MatrixXd grad_z = Eigen::MatrixXd::Zero(pipe.vocab.size(), cfg.out_dim);
    for (const auto& batch : batches) {
        for (const auto& [id, g] : node_loss(fwd.z, batch, cfg.gamma).grads) {
            grad_z.row(id) += g;
        }
    }
    grad_z /= static_cast<double>(batches.size());
    GcnGradients grads = gcn_backward(model, pipe.op, fwd, grad_z);

    const double step = 1e-5;
    auto check_matrix = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& analytic) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                const double saved = w(i, j);
                w(i, j) = saved + step;
                const double up = objective(model);
                w(i, j) = saved - step;
                const double down = objective(model);
                w(i, j) = saved;
                const double fd = (up - down) / (2.0 * step);
                const double scale = std::max({std::abs(fd), std::abs(analytic(i, j)), 1e-8});
                CHECK(std::abs(fd - analytic(i, j)) / scale < 1e-4);
            }
        }
    };
    check_matrix(model.w0, grads.w0);
    check_matrix(model.w1, grads.w1);
}

TEST_CASE("pretrain reduces the loss and is seed-deterministic") {
    LabeledCorpus corpus = cluster_corpus();
    Pipeline pipe = build_pipeline(corpus, 0.9, 1, 5);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 20;
    Eigen::MatrixXd h0 = init_features(pipe.vocab, std::nullopt, 5, cfg.seed);

    PretrainResult run = pretrain(pipe, h0, cfg);
    REQUIRE(run.log.size() == 20);
    CHECK(run.log.back().mean_loss < run.log.front().mean_loss);
    for (const auto& entry : run.log) CHECK(entry.mean_loss > 0.0);

    PretrainResult again = pretrain(pipe, h0, cfg);
    CHECK((run.z - again.z).cwiseAbs().maxCoeff() == 0.0);

    cfg.seed = 10;
    Eigen::MatrixXd h0_other = init_features(pipe.vocab, std::nullopt, 5, cfg.seed);
    PretrainResult other = pretrain(pipe, h0_other, cfg);
    CHECK((run.z - other.z).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("pretrain with zero epochs returns the untrained forward pass") {
    LabeledCorpus corpus = cluster_corpus();
    Pipeline pipe = build_pipeline(corpus, 0.9, 1, 5);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;
    Eigen::MatrixXd h0 = init_features(pipe.vocab, std::nullopt, 5, cfg.seed);

    PretrainResult run = pretrain(pipe, h0, cfg);
    CHECK(run.log.empty());
    Eigen::MatrixXd direct = gcn_forward(run.model, pipe.op).z;
    CHECK((run.z - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pretrain aborts when a class has no counterpart to contrast with") {
    // aa and bb both lean to class 0: P^1 stays empty
    LabeledCorpus corpus = corpus_of({{0, "aa bb aa bb"}, {0, "bb aa"}, {1, "aa bb"}});
    Pipeline pipe = build_pipeline(corpus, 0.7, 1, 5);
    REQUIRE(pipe.active_classes == std::vector<int>{0});
    TrainConfig cfg = tiny_config();
    Eigen::MatrixXd h0 = init_features(pipe.vocab, std::nullopt, 5, cfg.seed);
    CHECK_THROWS_AS(pretrain(pipe, h0, cfg), ConfigError);
}

TEST_CASE("config validation rejects bad values") {
    TrainConfig cfg;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.s = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.epochs == 80);
    CHECK(cfg.lr == 0.005);
    CHECK(cfg.tau == 0.9);
}

TEST_CASE("ecl epoch gradients match finite differences") {
    LabeledCorpus corpus = corpus_of({
        {0, "red green"}, {0, "green blue"}, {0, "red blue"}, {0, "blue"}, {0, "red"},
        {0, "green red"}, {1, "sun moon"}, {1, "moon star"}, {1, "sun star"}, {1, "star"},
        {1, "moon"}, {1, "sun sun"},
    });
    Vocabulary vocab = build_vocabulary(corpus, 1);
    EclProblem problem = build_ecl_problem(corpus, vocab);

    Rng init_rng(3);
    Eigen::MatrixXd table = Eigen::MatrixXd::NullaryExpr(
        vocab.size(), 4, [&] { return uniform_real(init_rng, -0.5, 0.5); });

    // identical rng state for the analytic pass and each FD evaluation
    const Rng frozen(555);
    Rng rng = frozen;
    EclEpoch analytic = ecl_epoch(problem, table, 1.0, rng);
    CHECK(analytic.mean_loss > 0.0);

    const double step = 1e-6;
    int checked = 0;
    for (Eigen::Index i = 0; i < table.rows() && checked < 40; ++i) {
        for (Eigen::Index j = 0; j < table.cols() && checked < 40; ++j, ++checked) {
            Eigen::MatrixXd tp = table, tm = table;
            tp(i, j) += step;
            tm(i, j) -= step;
            Rng r1 = frozen, r2 = frozen;
            const double fd = (ecl_epoch(problem, tp, 1.0, r1).mean_loss -
                               ecl_epoch(problem, tm, 1.0, r2).mean_loss) /
                              (2.0 * step);
            CHECK(analytic.grad_table(i, j) == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("ecl_pretrain trains the table and enforces class minima") {
    LabeledCorpus corpus = corpus_of({
        {0, "red green"}, {0, "green blue"}, {0, "red blue"}, {0, "blue green"}, {0, "red"},
        {0, "green red"}, {0, "blue red"}, {1, "sun moon"}, {1, "moon star"}, {1, "sun star"},
        {1, "star moon"}, {1, "moon sun"}, {1, "sun star moon"}, {1, "star"},
    });
    Vocabulary vocab = build_vocabulary(corpus, 1);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 25;
    cfg.lr = 0.05;

    Eigen::MatrixXd init = init_features(vocab, std::nullopt, 4, cfg.seed);
    EclResult result = ecl_pretrain(corpus, vocab, init, cfg);
    REQUIRE(result.log.size() == 25);
    CHECK(result.log.back().mean_loss < result.log.front().mean_loss);
    for (const auto& e : result.log) CHECK(e.mean_loss > 0.0);
    CHECK((result.table - init).cwiseAbs().maxCoeff() > 0.0);

    // a class with fewer than 6 examples is rejected
    LabeledCorpus thin = corpus_of(
        {{0, "a b"}, {0, "b c"}, {0, "a c"}, {0, "a"}, {0, "b"}, {0, "c"}, {1, "x y"}, {1, "y"}});
    Vocabulary thin_vocab = build_vocabulary(thin, 1);
    CHECK_THROWS_AS(
        ecl_pretrain(thin, thin_vocab, init_features(thin_vocab, std::nullopt, 4, 1), cfg),
        DataError);
}

TEST_CASE("single-token examples reduce ECL to token-level contrast") {
    LabeledCorpus corpus = corpus_of({
        {0, "red"}, {0, "green"}, {0, "blue"}, {0, "red"}, {0, "green"}, {0, "blue"},
        {1, "sun"}, {1, "moon"}, {1, "star"}, {1, "sun"}, {1, "moon"}, {1, "star"},
    });
    Vocabulary vocab = build_vocabulary(corpus, 1);
    EclProblem problem = build_ecl_problem(corpus, vocab);

    Eigen::MatrixXd table = init_features(vocab, std::nullopt, 3, 4);
    Rng rng(8);
    EclEpoch step = ecl_epoch(problem, table, 1.0, rng);
    CHECK(step.mean_loss > 0.0);
    CHECK(step.grad_table.cwiseAbs().maxCoeff() > 0.0);
}
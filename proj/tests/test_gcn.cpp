#include <doctest.h>

#include <random>

#include "gcpt/error.hpp"
#include "gcpt/gcn.hpp"
#include "gcpt/graph.hpp"
#include "test_util.hpp"

using namespace gcpt;

namespace {

Eigen::SparseMatrix<double> two_node_operator() {
    TokenGraph g(2);
    g.add_edge(0, 1, 1.0);
    return normalized_operator(g);
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                              double scale = 1.0) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = unif(rng);
    }
    return m;
}

/// Random small model over a random graph; pre-activations pushed away from
/// zero so central differences stay on one side of the rectifier kink.
struct Instance {
    GcnModel model;
    Eigen::SparseMatrix<double> op;
};

Instance random_instance(std::mt19937_64& rng, int n, int d0, int d1, int d2) {
    Instance inst;
    TokenGraph g(n);
    std::uniform_real_distribution<double> unif(0.2, 1.5);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng() % 3 == 0) g.add_edge(i, j, unif(rng));
        }
    }
    inst.op = normalized_operator(g);
    inst.model.h0 = random_matrix(n, d0, rng);
    inst.model.w0 = random_matrix(d0, d1, rng, 0.8);
    inst.model.w1 = random_matrix(d1, d2, rng, 0.8);
    return inst;
}

} // namespace

TEST_CASE("forward pass on hand-checked inputs") {
    SUBCASE("two-node graph with identity weights") {
        GcnModel m;
        m.h0 = Eigen::MatrixXd::Identity(2, 2);
        m.w0 = Eigen::MatrixXd::Identity(2, 2);
        m.w1 = Eigen::MatrixXd::Identity(2, 2);
        GcnForward fwd = gcn_forward(m, two_node_operator());

        Eigen::MatrixXd half = Eigen::MatrixXd::Constant(2, 2, 0.5);
        CHECK((fwd.h1 - half).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((fwd.z - half).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("isolated node reduces to plain matrix products") {
        TokenGraph g(1);
        GcnModel m;
        std::mt19937_64 rng(5);
        m.h0 = random_matrix(1, 3, rng);
        m.w0 = random_matrix(3, 4, rng);
        m.w1 = random_matrix(4, 2, rng);
        GcnForward fwd = gcn_forward(m, normalized_operator(g));
        Eigen::MatrixXd expect = (m.h0 * m.w0).cwiseMax(0.0) * m.w1;
        CHECK((fwd.z - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("zero weights give exactly zero output") {
        GcnModel m;
        m.h0 = Eigen::MatrixXd::Identity(2, 2);
        m.w0 = Eigen::MatrixXd::Zero(2, 3);
        m.w1 = Eigen::MatrixXd::Zero(3, 2);
        GcnForward fwd = gcn_forward(m, two_node_operator());
        CHECK(fwd.z.isZero(0.0));
    }
}

TEST_CASE("forward rejects non-conformant shapes and non-finite input") {
    GcnModel m;
    m.h0 = Eigen::MatrixXd::Identity(2, 2);
    m.w0 = Eigen::MatrixXd::Zero(3, 3);  // wrong inner dim
    m.w1 = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(gcn_forward(m, two_node_operator()), ConfigError);

    m.w0 = Eigen::MatrixXd::Zero(2, 3);
    m.w0(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(gcn_forward(m, two_node_operator()), "non-finite values in layer 1",
                         NumericError);
}

TEST_CASE("backward matches central finite differences") {
    std::mt19937_64 rng(77);
    Instance inst = random_instance(rng, 5, 3, 4, 3);
    Eigen::MatrixXd grad_z = random_matrix(5, 3, rng);

    // Scalar objective <grad_z, Z>; its exact W-gradients are what backward returns.
    auto objective = [&](const GcnModel& m) {
        return (gcn_forward(m, inst.op).z.array() * grad_z.array()).sum();
    };

    GcnForward fwd = gcn_forward(inst.model, inst.op);
    GcnGradients grads = gcn_backward(inst.model, inst.op, fwd, grad_z);

    const double step = 1e-5;
    auto check_matrix = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& analytic) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                const double saved = w(i, j);
                w(i, j) = saved + step;
                const double up = objective(inst.model);
                w(i, j) = saved - step;
                const double down = objective(inst.model);
                w(i, j) = saved;
                const double fd = (up - down) / (2.0 * step);
                const double scale = std::max({std::abs(fd), std::abs(analytic(i, j)), 1e-8});
                CHECK(std::abs(fd - analytic(i, j)) / scale < 1e-4);
            }
        }
    };
    check_matrix(inst.model.w0, grads.w0);
    check_matrix(inst.model.w1, grads.w1);
}

TEST_CASE("backward is linear in the upstream gradient") {
    std::mt19937_64 rng(31);
    Instance inst = random_instance(rng, 4, 3, 3, 2);
    GcnForward fwd = gcn_forward(inst.model, inst.op);

    Eigen::MatrixXd grad_z = random_matrix(4, 2, rng);
    GcnGradients g1 = gcn_backward(inst.model, inst.op, fwd, grad_z);
    GcnGradients g2 = gcn_backward(inst.model, inst.op, fwd, (2.0 * grad_z).eval());
    CHECK((g2.w0 - 2.0 * g1.w0).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((g2.w1 - 2.0 * g1.w1).cwiseAbs().maxCoeff() < 1e-14);

    GcnGradients gz = gcn_backward(inst.model, inst.op, fwd, Eigen::MatrixXd::Zero(4, 2));
    CHECK(gz.w0.isZero(0.0));
    CHECK(gz.w1.isZero(0.0));
}

TEST_CASE("permutation of node order permutes z rows") {
    std::mt19937_64 rng(13);
    const int n = 6;
    Instance inst = random_instance(rng, n, 4, 4, 3);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) p(perm[static_cast<std::size_t>(i)], i) = 1.0;

    GcnModel permuted = inst.model;
    permuted.h0 = p * inst.model.h0;
    Eigen::SparseMatrix<double> op_permuted =
        (p * Eigen::MatrixXd(inst.op) * p.transpose()).sparseView();

    Eigen::MatrixXd z = gcn_forward(inst.model, inst.op).z;
    Eigen::MatrixXd z_permuted = gcn_forward(permuted, op_permuted).z;
    CHECK((z_permuted - p * z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("message passing reaches nodes outside the candidate sets") {
    // Node 2 is adjacent to node 1; a loss touching only node 1 still moves
    // z row 2 after one step, and S*H1 row 2 is nonzero.
    TokenGraph g(3);
    g.add_edge(0, 1, 1.0);
    g.add_edge(1, 2, 1.0);
    Eigen::SparseMatrix<double> op = normalized_operator(g);

    std::mt19937_64 rng(41);
    GcnModel m;
    m.h0 = random_matrix(3, 3, rng);
    m.w0 = random_matrix(3, 3, rng);
    m.w1 = random_matrix(3, 3, rng);

    GcnForward fwd = gcn_forward(m, op);
    CHECK(fwd.sh1.row(2).cwiseAbs().maxCoeff() > 0.0);

    Eigen::MatrixXd grad_z = Eigen::MatrixXd::Zero(3, 3);
    grad_z.row(1) = Eigen::RowVector3d(1.0, -0.5, 0.25);
    GcnGradients grads = gcn_backward(m, op, fwd, grad_z);
    CHECK(grads.w0.cwiseAbs().maxCoeff() > 0.0);

    m.w0 -= 0.05 * grads.w0;
    m.w1 -= 0.05 * grads.w1;
    Eigen::MatrixXd z_after = gcn_forward(m, op).z;
    CHECK((z_after.row(2) - fwd.z.row(2)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("init_features reads files and fills gaps with seeded uniforms") {
    testutil::TempDir tmp("init");
    LabeledCorpus c;
    c.num_classes = 2;
    c.examples = {{"hello world", 0}, {"hello there", 1}};
    Vocabulary v = build_vocabulary(c, 1);

    SUBCASE("file rows are used verbatim") {
        testutil::write_file(tmp.path("emb.txt"), "1 2\nhello 1.0 0.0\n");
        Eigen::MatrixXd h0 = init_features(v, tmp.path("emb.txt"), 2, 7);
        const int hello = v.id_of("hello");
        CHECK(h0(hello, 0) == 1.0);
        CHECK(h0(hello, 1) == 0.0);
        const int world = v.id_of("world");
        CHECK(std::abs(h0(world, 0)) <= 0.25);
        CHECK(std::abs(h0(world, 1)) <= 0.25);

        Eigen::MatrixXd again = init_features(v, tmp.path("emb.txt"), 2, 7);
        CHECK((h0 - again).cwiseAbs().maxCoeff() == 0.0);
        Eigen::MatrixXd other_seed = init_features(v, tmp.path("emb.txt"), 2, 8);
        CHECK((h0.row(world) - other_seed.row(world)).cwiseAbs().maxCoeff() > 0.0);
    }
    SUBCASE("dimension mismatch is an error") {
        testutil::write_file(tmp.path("emb.txt"), "1 3\nhello 1.0 0.0 2.0\n");
        CHECK_THROWS_AS(init_features(v, tmp.path("emb.txt"), 2, 7), ConfigError);
    }
    SUBCASE("unreadable file is an error") {
        CHECK_THROWS_AS(init_features(v, tmp.path("missing.txt"), 2, 7), DataError);
    }
    SUBCASE("no file: every row is uniform in [-0.25, 0.25]") {
        Eigen::MatrixXd h0 = init_features(v, std::nullopt, 4, 7);
        CHECK(h0.rows() == v.size());
        CHECK(h0.cwiseAbs().maxCoeff() <= 0.25);
    }
}

TEST_CASE("embeddings text round trip") {
    testutil::TempDir tmp("emb_io");
    std::vector<std::string> tokens = {"alpha", "beta"};
    Eigen::MatrixXd rows(2, 3);
    rows << 0.5, -1.25, 0.0, 2.0, 0.125, -0.375;

    write_embeddings_text(tokens, rows, tmp.path("e.txt"));
    CHECK(testutil::read_file(tmp.path("e.txt")) ==
          "2 3\nalpha 0.500000 -1.250000 0.000000\nbeta 2.000000 0.125000 -0.375000\n");

    TextEmbeddings emb = read_embeddings_text(tmp.path("e.txt"));
    CHECK(emb.tokens == tokens);
    CHECK((emb.rows - rows).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embeddings reader rejects malformed files") {
    testutil::TempDir tmp("emb_bad");
    testutil::write_file(tmp.path("short.txt"), "2 3\nalpha 1 2 3\n");
    CHECK_THROWS_AS(read_embeddings_text(tmp.path("short.txt")), DataError);
    testutil::write_file(tmp.path("row.txt"), "1 3\nalpha 1 2\n");
    CHECK_THROWS_AS(read_embeddings_text(tmp.path("row.txt")), DataError);
    testutil::write_file(tmp.path("hdr.txt"), "x y\n");
    CHECK_THROWS_AS(read_embeddings_text(tmp.path("hdr.txt")), DataError);
}

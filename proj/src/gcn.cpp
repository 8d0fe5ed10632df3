#include "gcpt/gcn.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "gcpt/error.hpp"
#include "gcpt/rng.hpp"

namespace gcpt {

namespace {

Eigen::MatrixXd apply_activation(Eigen::MatrixXd m, Activation act) {
    if (act == Activation::kRectifier) {
        m = m.cwiseMax(0.0);
    }
    return m;
}

void check_finite(const Eigen::MatrixXd& m, const char* layer) {
    if (!m.allFinite()) {
        throw NumericError(std::string("non-finite values in ") + layer);
    }
}

} // namespace

GcnForward gcn_forward(const GcnModel& model, const Eigen::SparseMatrix<double>& op) {
    if (model.h0.rows() != op.rows() || model.h0.cols() != model.w0.rows() ||
        model.w0.cols() != model.w1.rows()) {
        throw ConfigError("GCN dimensions are not conformant");
    }
    GcnForward fwd;
    fwd.sh0 = op * model.h0;
    fwd.h1 = apply_activation(fwd.sh0 * model.w0, model.act1);
    check_finite(fwd.h1, "layer 1");
    fwd.sh1 = op * fwd.h1;
    fwd.z = apply_activation(fwd.sh1 * model.w1, model.act2);
    check_finite(fwd.z, "layer 2");
    return fwd;
}

GcnGradients gcn_backward(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                          const GcnForward& fwd, const Eigen::MatrixXd& grad_z) {
    if (grad_z.rows() != fwd.z.rows() || grad_z.cols() != fwd.z.cols()) {
        throw ConfigError("grad_z shape does not match the forward output");
    }

    // Output activation. With the rectifier, Z > 0 marks active entries
    // (pre-activation > 0); identity passes through.
    Eigen::MatrixXd g2 = grad_z;
    if (model.act2 == Activation::kRectifier) {
        g2 = g2.cwiseProduct((fwd.z.array() > 0.0).cast<double>().matrix());
    }

    GcnGradients grads;
    grads.w1 = fwd.sh1.transpose() * g2;

    // Through the second propagation (S symmetric) into H1.
    Eigen::MatrixXd g_h1 = op * (g2 * model.w1.transpose());
    if (model.act1 == Activation::kRectifier) {
        g_h1 = g_h1.cwiseProduct((fwd.h1.array() > 0.0).cast<double>().matrix());
    }
    grads.w0 = fwd.sh0.transpose() * g_h1;
    return grads;
}

Eigen::MatrixXd init_features(const Vocabulary& vocab,
                              const std::optional<std::string>& embedding_file, int dim,
                              std::uint64_t seed) {
    if (dim < 1) {
        throw ConfigError("feature dimension must be >= 1");
    }
    const int n = vocab.size();
    Eigen::MatrixXd h0(n, dim);

    std::unordered_map<std::string, Eigen::Index> file_rows;
    TextEmbeddings file_emb;
    if (embedding_file) {
        file_emb = read_embeddings_text(*embedding_file);
        if (file_emb.rows.cols() != dim) {
            throw ConfigError("embedding file dimension " +
                              std::to_string(file_emb.rows.cols()) +
                              " does not match requested dimension " + std::to_string(dim));
        }
        for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(file_emb.tokens.size()); ++r) {
            file_rows.emplace(file_emb.tokens[static_cast<std::size_t>(r)], r);
        }
    }

    Rng rng(derive_seed(seed, "init_features"));
    for (int id = 0; id < n; ++id) {
        auto it = file_rows.find(vocab.token(id));
        if (it != file_rows.end()) {
            h0.row(id) = file_emb.rows.row(it->second);
        } else {
            for (int d = 0; d < dim; ++d) {
                h0(id, d) = uniform_real(rng, -0.25, 0.25);
            }
        }
    }
    return h0;
}

void write_embeddings_text(const std::vector<std::string>& tokens, const Eigen::MatrixXd& rows,
                           const std::string& path) {
    if (static_cast<Eigen::Index>(tokens.size()) != rows.rows()) {
        throw ConfigError("token list and embedding rows disagree");
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write embeddings file: " + path);
    }
    out << tokens.size() << ' ' << rows.cols() << '\n';
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        out << tokens[i];
        for (Eigen::Index d = 0; d < rows.cols(); ++d) {
            out << ' ' << rows(static_cast<Eigen::Index>(i), d);
        }
        out << '\n';
    }
}

TextEmbeddings read_embeddings_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open embeddings file: " + path);
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw DataError("empty embeddings file: " + path);
    }
    std::istringstream hs(header);
    std::int64_t count = 0, dim = 0;
    if (!(hs >> count >> dim) || count < 1 || dim < 1) {
        throw DataError("malformed embeddings header in " + path);
    }

    TextEmbeddings emb;
    emb.tokens.reserve(static_cast<std::size_t>(count));
    emb.rows.resize(count, dim);
    std::string line;
    std::int64_t row = 0;
    while (row < count && std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) {
            throw DataError("malformed embedding row " + std::to_string(row + 2) + " in " + path);
        }
        for (std::int64_t d = 0; d < dim; ++d) {
            double v = 0.0;
            if (!(ls >> v)) {
                throw DataError("embedding row for '" + token + "' has fewer than " +
                                std::to_string(dim) + " values in " + path);
            }
            emb.rows(row, d) = v;
        }
        emb.tokens.push_back(std::move(token));
        ++row;
    }
    if (row != count) {
        throw DataError("embeddings file " + path + " declares " + std::to_string(count) +
                        " rows but contains " + std::to_string(row));
    }
    return emb;
}

} // namespace gcpt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "gcpt/corpus.hpp"

namespace gcpt {

enum class Activation { kRectifier, kIdentity };

/// Two-layer graph convolution over the normalized operator S:
///   H1 = act1(S H0 W0),  Z = act2(S H1 W1)
/// H0 is fixed input features; only W0 and W1 train.
struct GcnModel {
    Eigen::MatrixXd h0;  // |V| x d0
    Eigen::MatrixXd w0;  // d0 x d1
    Eigen::MatrixXd w1;  // d1 x d2
    Activation act1 = Activation::kRectifier;
    Activation act2 = Activation::kIdentity;

    int input_dim() const { return static_cast<int>(h0.cols()); }
    int hidden_dim() const { return static_cast<int>(w0.cols()); }
    int output_dim() const { return static_cast<int>(w1.cols()); }
};

/// Final token representations, one row per vocabulary id.
using EmbeddingMatrix = Eigen::MatrixXd;

struct GcnForward {
    Eigen::MatrixXd sh0;  // S H0, cached for the backward pass
    Eigen::MatrixXd h1;   // act1(S H0 W0)
    Eigen::MatrixXd sh1;  // S H1
    Eigen::MatrixXd z;    // act2(S H1 W1)
};

struct GcnGradients {
    Eigen::MatrixXd w0;
    Eigen::MatrixXd w1;
};

/// Throws NumericError naming the layer if an intermediate goes non-finite.
GcnForward gcn_forward(const GcnModel& model, const Eigen::SparseMatrix<double>& op);

/// Exact reverse-mode gradients of the loss w.r.t. W0 and W1 given dL/dZ.
/// The rectifier subgradient is 0 at 0. H0 receives no gradient.
GcnGradients gcn_backward(const GcnModel& model, const Eigen::SparseMatrix<double>& op,
                          const GcnForward& fwd, const Eigen::MatrixXd& grad_z);

/// Input feature matrix: rows for tokens found in the embedding file, i.i.d.
/// uniform [-0.25, 0.25] rows (from the run seed) for everything else. With
/// no file, every row is drawn that way. Throws DataError on unreadable files
/// and ConfigError on dimension mismatch.
Eigen::MatrixXd init_features(const Vocabulary& vocab,
                              const std::optional<std::string>& embedding_file, int dim,
                              std::uint64_t seed);

/// word2vec text format: "count dim" header, then "token f1 ... fdim" rows
/// (6 decimals on write).
void write_embeddings_text(const std::vector<std::string>& tokens, const Eigen::MatrixXd& rows,
                           const std::string& path);

struct TextEmbeddings {
    std::vector<std::string> tokens;
    Eigen::MatrixXd rows;
};

TextEmbeddings read_embeddings_text(const std::string& path);

} // namespace gcpt

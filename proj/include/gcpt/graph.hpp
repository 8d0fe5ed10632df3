#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "gcpt/corpus.hpp"

namespace gcpt {

/// Sentinel window width: each example forms exactly one window.
inline constexpr std::size_t kWholeExampleWindow = 0;

/// Sliding-window co-occurrence statistics. A window counts each token at
/// most once (set membership); pair keys always store the smaller id first.
struct CoocCounts {
    std::vector<std::int64_t> single;                       // W(i): windows containing i
    std::unordered_map<std::uint64_t, std::int64_t> pairs;  // W(i,j), key = (i<<32)|j, i<j
    std::int64_t total_windows = 0;                         // W_tot

    static std::uint64_t key(int i, int j) {
        if (i > j) std::swap(i, j);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
               static_cast<std::uint32_t>(j);
    }
    std::int64_t pair_count(int i, int j) const {
        auto it = pairs.find(key(i, j));
        return it == pairs.end() ? 0 : it->second;
    }
};

/// Windows of the given width slide with stride 1 over each tokenized example
/// (out-of-vocabulary tokens occupy positions but never produce counts).
/// Examples shorter than the window form one window; empty examples form none.
/// width must be >= 2 or kWholeExampleWindow.
CoocCounts count_cooccurrences(const LabeledCorpus& corpus, const Vocabulary& vocab,
                               std::size_t window);

/// PMI-weighted token graph. Self-loops live only in A_hat = A + I;
/// degree(i) = 1 + sum_j A(i,j) is the weighted degree of A_hat.
class TokenGraph {
public:
    TokenGraph() = default;
    explicit TokenGraph(int n) : adj_(static_cast<std::size_t>(n)) {}

    int node_count() const { return static_cast<int>(adj_.size()); }
    std::int64_t edge_count() const { return edge_count_; }

    /// Neighbors of i with positive weights, ascending by node id.
    const std::vector<std::pair<int, double>>& neighbors(int i) const {
        return adj_[static_cast<std::size_t>(i)];
    }

    double weight(int i, int j) const;
    double degree(int i) const;

    /// Inserts the undirected edge {i,j}. Requires i != j and weight > 0.
    void add_edge(int i, int j, double weight);

private:
    std::vector<std::vector<std::pair<int, double>>> adj_;
    std::int64_t edge_count_ = 0;
};

/// PMI(i,j) = ln( (W(i,j)/W_tot) / ((W(i)/W_tot)(W(j)/W_tot)) ), natural log.
/// An edge exists iff PMI > 0, with the PMI value as its weight.
TokenGraph compute_pmi_edges(const CoocCounts& counts);

/// D^{-1/2} (A+I) D^{-1/2} with D the diagonal degree matrix of A+I.
Eigen::SparseMatrix<double> normalized_operator(const TokenGraph& graph);

/// Restriction of the parent graph to a candidate set: only edges with both
/// endpoints inside survive.
struct SubgraphView {
    int class_id = -1;
    std::vector<int> nodes;
    // node id -> neighbors within the view (ascending ids, parent weights)
    std::unordered_map<int, std::vector<std::pair<int, double>>> neighbors;

    bool contains(int node) const { return neighbors.count(node) > 0; }
    std::int64_t edge_count() const;
};

SubgraphView induced_subgraph(const TokenGraph& graph, const std::vector<int>& nodes,
                              int class_id = -1);

/// "token_i<TAB>token_j<TAB>weight" (6 decimals), token_i < token_j within a
/// row, rows sorted lexicographically.
void write_edges_tsv(const TokenGraph& graph, const Vocabulary& vocab, const std::string& path);

} // namespace gcpt

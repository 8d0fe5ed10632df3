#include "gcpt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "gcpt/error.hpp"

namespace gcpt {

CoocCounts count_cooccurrences(const LabeledCorpus& corpus, const Vocabulary& vocab,
                               std::size_t window) {
    if (window != kWholeExampleWindow && window < 2) {
        throw ConfigError("window width must be >= 2 (or 0 for whole-example windows)");
    }

    CoocCounts counts;
    counts.single.assign(static_cast<std::size_t>(vocab.size()), 0);

    std::vector<int> ids;
    std::vector<int> seen;  // distinct in-vocab ids in the current window
    for (const auto& ex : corpus.examples) {
        ids.clear();
        for (const auto& tok : tokenize(ex.text)) {
            ids.push_back(vocab.id_of(tok));
        }
        if (ids.empty()) continue;

        const std::size_t len = ids.size();
        const std::size_t width = window == kWholeExampleWindow ? len : window;
        const std::size_t num_windows = len <= width ? 1 : len - width + 1;

        for (std::size_t start = 0; start < num_windows; ++start) {
            const std::size_t stop = std::min(start + width, len);
            seen.clear();
            for (std::size_t p = start; p < stop; ++p) {
                const int id = ids[p];
                if (id < 0) continue;
                if (std::find(seen.begin(), seen.end(), id) == seen.end()) seen.push_back(id);
            }
            counts.total_windows += 1;
            for (std::size_t a = 0; a < seen.size(); ++a) {
                counts.single[static_cast<std::size_t>(seen[a])] += 1;
                for (std::size_t b = a + 1; b < seen.size(); ++b) {
                    counts.pairs[CoocCounts::key(seen[a], seen[b])] += 1;
                }
            }
        }
    }
    return counts;
}

void TokenGraph::add_edge(int i, int j, double weight) {
    if (i == j) {
        throw ConfigError("self-loops are not stored in the adjacency");
    }
    if (!(weight > 0.0)) {
        throw ConfigError("edge weights must be positive");
    }
    auto insert = [](std::vector<std::pair<int, double>>& list, int node, double w) {
        auto it = std::lower_bound(list.begin(), list.end(), node,
                                   [](const auto& p, int n) { return p.first < n; });
        list.insert(it, {node, w});
    };
    insert(adj_[static_cast<std::size_t>(i)], j, weight);
    insert(adj_[static_cast<std::size_t>(j)], i, weight);
    ++edge_count_;
}

double TokenGraph::weight(int i, int j) const {
    const auto& list = adj_[static_cast<std::size_t>(i)];
    auto it = std::lower_bound(list.begin(), list.end(), j,
                               [](const auto& p, int n) { return p.first < n; });
    return (it != list.end() && it->first == j) ? it->second : 0.0;
}

double TokenGraph::degree(int i) const {
    double d = 1.0;  // self-loop of A_hat
    for (const auto& [j, w] : adj_[static_cast<std::size_t>(i)]) {
        (void)j;
        d += w;
    }
    return d;
}

TokenGraph compute_pmi_edges(const CoocCounts& counts) {
    if (counts.total_windows < 1) {
        throw DataError("no co-occurrence windows counted");
    }
    TokenGraph graph(static_cast<int>(counts.single.size()));
    const double total = static_cast<double>(counts.total_windows);
    for (const auto& [key, wij] : counts.pairs) {
        if (wij <= 0) continue;
        const int i = static_cast<int>(key >> 32);
        const int j = static_cast<int>(key & 0xffffffffu);
        const double wi = static_cast<double>(counts.single[static_cast<std::size_t>(i)]);
        const double wj = static_cast<double>(counts.single[static_cast<std::size_t>(j)]);
        const double pmi = std::log(static_cast<double>(wij) * total / (wi * wj));
        if (pmi > 0.0) {
            graph.add_edge(i, j, pmi);
        }
    }
    return graph;
}

Eigen::SparseMatrix<double> normalized_operator(const TokenGraph& graph) {
    const int n = graph.node_count();
    if (n == 0) {
        throw DataError("cannot normalize an empty graph");
    }
    std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(graph.degree(i));
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * graph.edge_count() + n));
    for (int i = 0; i < n; ++i) {
        const double di = inv_sqrt_deg[static_cast<std::size_t>(i)];
        triplets.emplace_back(i, i, di * di);  // A_hat(i,i) = 1
        for (const auto& [j, w] : graph.neighbors(i)) {
            // one grouping for both triangle halves keeps the result exactly symmetric
            triplets.emplace_back(i, j, w * (di * inv_sqrt_deg[static_cast<std::size_t>(j)]));
        }
    }
    Eigen::SparseMatrix<double> op(n, n);
    op.setFromTriplets(triplets.begin(), triplets.end());
    op.makeCompressed();
    return op;
}

std::int64_t SubgraphView::edge_count() const {
    std::int64_t twice = 0;
    for (const auto& [node, list] : neighbors) {
        (void)node;
        twice += static_cast<std::int64_t>(list.size());
    }
    return twice / 2;
}

SubgraphView induced_subgraph(const TokenGraph& graph, const std::vector<int>& nodes,
                              int class_id) {
    SubgraphView view;
    view.class_id = class_id;
    view.nodes = nodes;
    std::sort(view.nodes.begin(), view.nodes.end());

    for (int node : view.nodes) {
        if (node < 0 || node >= graph.node_count()) {
            throw ConfigError("subgraph node out of range: " + std::to_string(node));
        }
        auto& list = view.neighbors[node];
        for (const auto& [j, w] : graph.neighbors(node)) {
            if (std::binary_search(view.nodes.begin(), view.nodes.end(), j)) {
                list.emplace_back(j, w);
            }
        }
    }
    return view;
}

void write_edges_tsv(const TokenGraph& graph, const Vocabulary& vocab, const std::string& path) {
    struct Row {
        std::string a, b;
        double w;
    };
    std::vector<Row> rows;
    for (int i = 0; i < graph.node_count(); ++i) {
        for (const auto& [j, w] : graph.neighbors(i)) {
            if (j <= i) continue;  // each undirected edge once
            std::string a = vocab.token(i), b = vocab.token(j);
            if (b < a) std::swap(a, b);
            rows.push_back({std::move(a), std::move(b), w});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });

    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write edge file: " + path);
    }
    out << std::fixed << std::setprecision(6);
    for (const auto& row : rows) {
        out << row.a << '\t' << row.b << '\t' << row.w << '\n';
    }
}

} // namespace gcpt

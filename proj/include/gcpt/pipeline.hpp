#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCore>

#include "gcpt/corpus.hpp"
#include "gcpt/graph.hpp"
#include "gcpt/labelcond.hpp"

namespace gcpt {

/// Everything pretraining needs, derived from a related corpus: vocabulary,
/// label conditionals with candidate sets, PMI graph, normalized operator,
/// per-class induced subgraph views and cross-class negative pools.
struct Pipeline {
    Vocabulary vocab;
    LabelConditional cond;
    TokenGraph graph;
    Eigen::SparseMatrix<double> op;
    std::vector<SubgraphView> views;            // views[c] over P^c
    std::vector<std::vector<int>> neg_pools;    // neg_pools[c] = union of P^{c'}, c' != c
    std::vector<int> active_classes;            // classes with non-empty P^c

    int num_classes() const { return static_cast<int>(views.size()); }
};

Pipeline build_pipeline(const LabeledCorpus& related, double tau, std::int64_t min_freq,
                        std::size_t window);

} // namespace gcpt

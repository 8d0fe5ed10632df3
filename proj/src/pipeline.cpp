#include "gcpt/pipeline.hpp"

#include <algorithm>

namespace gcpt {

Pipeline build_pipeline(const LabeledCorpus& related, double tau, std::int64_t min_freq,
                        std::size_t window) {
    Pipeline pipe;
    pipe.vocab = build_vocabulary(related, min_freq);
    pipe.cond = select_candidates(estimate_conditionals(pipe.vocab), tau);
    pipe.graph = compute_pmi_edges(count_cooccurrences(related, pipe.vocab, window));
    pipe.op = normalized_operator(pipe.graph);

    const int num_classes = pipe.cond.num_classes();
    pipe.views.reserve(static_cast<std::size_t>(num_classes));
    pipe.neg_pools.resize(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        pipe.views.push_back(induced_subgraph(pipe.graph, pipe.cond.candidates[static_cast<std::size_t>(c)], c));
        if (!pipe.cond.candidates[static_cast<std::size_t>(c)].empty()) {
            pipe.active_classes.push_back(c);
        }
        for (int other = 0; other < num_classes; ++other) {
            if (other == c) continue;
            const auto& pool = pipe.cond.candidates[static_cast<std::size_t>(other)];
            auto& negs = pipe.neg_pools[static_cast<std::size_t>(c)];
            negs.insert(negs.end(), pool.begin(), pool.end());
        }
        std::sort(pipe.neg_pools[static_cast<std::size_t>(c)].begin(),
                  pipe.neg_pools[static_cast<std::size_t>(c)].end());
    }
    return pipe;
}

} // namespace gcpt

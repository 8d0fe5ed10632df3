#pragma once

#include <string>
#include <vector>

#include "gcpt/corpus.hpp"

namespace gcpt {

/// Per-token label conditionals and the candidate sets selected by the
/// confidence threshold tau.
struct LabelConditional {
    // theta[x][c]: estimated probability that token x belongs to class c.
    std::vector<std::vector<double>> theta;
    double tau = 0.0;
    // candidate_class[x]: class of token x if it passed the threshold, else -1.
    std::vector<int> candidate_class;
    // candidates[c]: token ids in P^c, ascending.
    std::vector<std::vector<int>> candidates;
    // Classes whose candidate set came out empty (pretraining on them is impossible).
    std::vector<int> empty_classes;

    int num_classes() const { return static_cast<int>(candidates.size()); }
};

/// theta[x][c] = n^c(x) / sum_j n^j(x). Every retained token has a positive
/// total count, so the division is always defined.
std::vector<std::vector<double>> estimate_conditionals(const Vocabulary& vocab);

/// x goes to P^c iff c is the argmax class of theta[x] (ties toward the lowest
/// class index) and theta[x][c] >= tau. Requires tau in [1/C, 1]. Throws
/// DataError when every candidate set is empty; partially empty sets are
/// reported in empty_classes.
LabelConditional select_candidates(const std::vector<std::vector<double>>& theta, double tau);

/// "token<TAB>class<TAB>theta" for every candidate token, in id order.
void write_candidates_tsv(const LabelConditional& cond, const Vocabulary& vocab,
                          const std::string& path);

} // namespace gcpt

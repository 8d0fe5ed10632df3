#pragma once

#include <cstdint>
#include <string>

#include "gcpt/corpus.hpp"

namespace gcpt {

/// Two-class synthetic benchmark. Tokens split into a shared pool (fraction
/// `overlap`, drawn by both classes) and two class pools. Each class pool is
/// itself halved into a related-heavy and a current-heavy part: the related
/// corpus draws class tokens from the first half with probability
/// `domain_tilt`, the current corpora with probability 1 - domain_tilt. That
/// mimics related-but-distinct datasets sharing label semantics.
struct SyntheticConfig {
    int vocab_size = 200;
    int related_per_class = 1000;
    int current_train_per_class = 50;
    int current_test_per_class = 50;
    double overlap = 0.3;       // shared fraction of the vocabulary
    double shared_prob = 0.5;   // per-token probability of drawing from the shared pool
    double domain_tilt = 0.9;   // related-half affinity of class-token draws
    int min_len = 5;
    int max_len = 12;
    std::uint64_t seed = 42;

    void validate() const;
};

struct SyntheticCorpora {
    LabeledCorpus related;        // role kRelated
    LabeledCorpus current_train;  // role kCurrentTrain
    LabeledCorpus current_test;   // role kCurrentTest
};

SyntheticCorpora make_synthetic(const SyntheticConfig& config);

/// "label<TAB>text" lines.
void write_corpus_tsv(const LabeledCorpus& corpus, const std::string& path);

} // namespace gcpt

#include "gcpt/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gcpt/error.hpp"
#include "gcpt/rng.hpp"

namespace gcpt {

void SyntheticConfig::validate() const {
    if (vocab_size < 4) throw ConfigError("synthetic vocabulary needs at least 4 tokens");
    if (related_per_class < 1 || current_train_per_class < 1 || current_test_per_class < 1) {
        throw ConfigError("synthetic corpora need at least one example per class and split");
    }
    if (overlap < 0.0 || overlap > 1.0) throw ConfigError("overlap must lie in [0, 1]");
    if (shared_prob < 0.0 || shared_prob > 1.0) throw ConfigError("shared_prob must lie in [0, 1]");
    if (domain_tilt < 0.0 || domain_tilt > 1.0) throw ConfigError("domain_tilt must lie in [0, 1]");
    if (min_len < 1 || max_len < min_len) throw ConfigError("bad example length range");
}

namespace {

std::string token_name(int index) {
    std::ostringstream os;
    os << "tok" << std::setw(4) << std::setfill('0') << index;
    return os.str();
}

struct Pools {
    std::vector<std::string> shared;
    // per class: related-heavy half and current-heavy half
    std::vector<std::string> related_half[2];
    std::vector<std::string> current_half[2];
};

Pools build_pools(const SyntheticConfig& cfg) {
    Pools pools;
    const int n_shared = static_cast<int>(std::lround(cfg.overlap * cfg.vocab_size));
    const int n_class = cfg.vocab_size - n_shared;
    const int n_class0 = n_class / 2 + n_class % 2;

    int next = 0;
    for (int i = 0; i < n_shared; ++i) pools.shared.push_back(token_name(next++));
    for (int c = 0; c < 2; ++c) {
        const int size = c == 0 ? n_class0 : n_class - n_class0;
        const int half = size / 2 + size % 2;
        for (int i = 0; i < size; ++i) {
            auto& dest = i < half ? pools.related_half[c] : pools.current_half[c];
            dest.push_back(token_name(next++));
        }
    }
    return pools;
}

const std::string& draw_token(const Pools& pools, int cls, bool related_domain,
                              const SyntheticConfig& cfg, Rng& rng) {
    if (!pools.shared.empty() && uniform_real(rng, 0.0, 1.0) < cfg.shared_prob) {
        return pools.shared[uniform_index(rng, pools.shared.size())];
    }
    const double p_related_half = related_domain ? cfg.domain_tilt : 1.0 - cfg.domain_tilt;
    const auto& primary = pools.related_half[cls];
    const auto& secondary = pools.current_half[cls];
    const auto& pool = (uniform_real(rng, 0.0, 1.0) < p_related_half || secondary.empty())
                           ? (primary.empty() ? secondary : primary)
                           : secondary;
    if (pool.empty()) {
        // overlap = 1: every token is shared
        return pools.shared[uniform_index(rng, pools.shared.size())];
    }
    return pool[uniform_index(rng, pool.size())];
}

LabeledCorpus generate_split(const Pools& pools, int per_class, bool related_domain,
                             const SyntheticConfig& cfg, const std::string& name, CorpusRole role,
                             Rng& rng) {
    LabeledCorpus corpus;
    corpus.num_classes = 2;
    corpus.name = name;
    corpus.role = role;
    // Interleave classes so file order carries no label signal.
    for (int i = 0; i < per_class; ++i) {
        for (int cls = 0; cls < 2; ++cls) {
            const int len = static_cast<int>(
                uniform_index(rng, static_cast<std::size_t>(cfg.max_len - cfg.min_len + 1))) +
                cfg.min_len;
            std::string text;
            for (int t = 0; t < len; ++t) {
                if (t > 0) text.push_back(' ');
                text += draw_token(pools, cls, related_domain, cfg, rng);
            }
            corpus.examples.push_back({std::move(text), cls});
        }
    }
    return corpus;
}

} // namespace

SyntheticCorpora make_synthetic(const SyntheticConfig& config) {
    config.validate();
    const Pools pools = build_pools(config);
    Rng rng(derive_seed(config.seed, "synthetic"));

    SyntheticCorpora out;
    out.related = generate_split(pools, config.related_per_class, true, config, "related",
                                 CorpusRole::kRelated, rng);
    out.current_train = generate_split(pools, config.current_train_per_class, false, config,
                                       "current_train", CorpusRole::kCurrentTrain, rng);
    out.current_test = generate_split(pools, config.current_test_per_class, false, config,
                                      "current_test", CorpusRole::kCurrentTest, rng);
    return out;
}

void write_corpus_tsv(const LabeledCorpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write corpus file: " + path);
    }
    for (const auto& ex : corpus.examples) {
        out << ex.label << '\t' << ex.text << '\n';
    }
}

} // namespace gcpt

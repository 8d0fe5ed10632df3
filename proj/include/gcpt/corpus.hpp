#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace gcpt {

struct LabeledExample {
    std::string text;
    int label = 0;
};

enum class CorpusRole { kRelated, kCurrentTrain, kCurrentTest };

enum class CorpusFormat { kTsv, kJsonl };

struct LabeledCorpus {
    std::vector<LabeledExample> examples;
    int num_classes = 0;
    std::string name;
    CorpusRole role = CorpusRole::kRelated;
};

/// Reads a labeled corpus from disk.
///
/// TSV: one record per line, "label<TAB>text", UTF-8, LF line endings.
/// JSONL: one object per line with string field "text" and integer field "label".
///
/// Throws DataError on malformed records (with the 1-based line number), on
/// labels outside [0, num_classes), and on empty files.
LabeledCorpus load_corpus(const std::string& path, CorpusFormat format, int num_classes,
                          CorpusRole role = CorpusRole::kRelated, const std::string& name = "");

/// Lowercases, replaces URLs with "<url>" and @-mentions with "<user>",
/// strips ASCII punctuation outside the sentinels, splits on whitespace,
/// and drops empty tokens.
std::vector<std::string> tokenize(const std::string& text);

/// Per-token, per-class occurrence counts keyed by token string. Intermediate
/// form used while counting; shard merges are exact integer additions.
struct TokenCounts {
    int num_classes = 0;
    // token -> (first-occurrence order, per-class counts)
    struct Entry {
        std::size_t first_seen = 0;
        std::vector<std::int64_t> by_class;
    };
    std::unordered_map<std::string, Entry> counts;
    std::int64_t total_occurrences = 0;
};

TokenCounts count_corpus(const LabeledCorpus& corpus);

/// Merges shard counts. first_seen order follows `a` then `b` for tokens
/// new to `a`, so merging concatenated shards reproduces single-pass order.
TokenCounts merge_counts(const TokenCounts& a, const TokenCounts& b);

class Vocabulary {
public:
    /// Keeps tokens whose total count is >= min_freq, ids assigned in
    /// first-occurrence order. Throws DataError if nothing survives.
    static Vocabulary from_counts(const TokenCounts& counts, std::int64_t min_freq);

    int size() const { return static_cast<int>(tokens_.size()); }
    int num_classes() const { return num_classes_; }

    const std::string& token(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
    const std::vector<std::string>& tokens() const { return tokens_; }

    /// -1 when the token is not in the vocabulary.
    int id_of(const std::string& token) const;

    const std::vector<std::int64_t>& class_counts(int id) const {
        return class_counts_[static_cast<std::size_t>(id)];
    }
    std::int64_t total_count(int id) const { return total_counts_[static_cast<std::size_t>(id)]; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    std::vector<std::vector<std::int64_t>> class_counts_;
    std::vector<std::int64_t> total_counts_;
    int num_classes_ = 0;
};

/// count_corpus + from_counts over a related corpus.
Vocabulary build_vocabulary(const LabeledCorpus& corpus, std::int64_t min_freq);

/// "token<TAB>total<TAB>n_c0<TAB>n_c1..." in id order.
void write_vocabulary_tsv(const Vocabulary& vocab, const std::string& path);

} // namespace gcpt

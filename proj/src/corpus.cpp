#include "gcpt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gcpt/error.hpp"

namespace gcpt {

namespace {

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

int parse_label(const std::string& field, int num_classes, std::size_t line_no) {
    std::size_t pos = 0;
    int label = 0;
    try {
        label = std::stoi(field, &pos);
    } catch (const std::exception&) {
        throw DataError("non-integer label at line " + std::to_string(line_no));
    }
    if (pos != field.size()) {
        throw DataError("non-integer label at line " + std::to_string(line_no));
    }
    if (label < 0 || label >= num_classes) {
        throw DataError("label out of range at line " + std::to_string(line_no));
    }
    return label;
}

} // namespace

LabeledCorpus load_corpus(const std::string& path, CorpusFormat format, int num_classes,
                          CorpusRole role, const std::string& name) {
    if (num_classes < 2) {
        throw ConfigError("num_classes must be >= 2, got " + std::to_string(num_classes));
    }
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open corpus file: " + path);
    }

    LabeledCorpus corpus;
    corpus.num_classes = num_classes;
    corpus.name = name.empty() ? stem_of(path) : name;
    corpus.role = role;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        LabeledExample ex;
        if (format == CorpusFormat::kTsv) {
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw DataError("missing tab separator at line " + std::to_string(line_no));
            }
            ex.label = parse_label(line.substr(0, tab), num_classes, line_no);
            ex.text = line.substr(tab + 1);
        } else {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                throw DataError("malformed JSON at line " + std::to_string(line_no));
            }
            if (!obj.contains("text") || !obj["text"].is_string()) {
                throw DataError("missing string field \"text\" at line " + std::to_string(line_no));
            }
            if (!obj.contains("label") || !obj["label"].is_number_integer()) {
                throw DataError("missing integer field \"label\" at line " + std::to_string(line_no));
            }
            int label = obj["label"].get<int>();
            if (label < 0 || label >= num_classes) {
                throw DataError("label out of range at line " + std::to_string(line_no));
            }
            ex.label = label;
            ex.text = obj["text"].get<std::string>();
        }
        if (trim(ex.text).empty()) {
            throw DataError("empty text at line " + std::to_string(line_no));
        }
        corpus.examples.push_back(std::move(ex));
    }
    if (corpus.examples.empty()) {
        throw DataError("empty corpus: " + path);
    }
    return corpus;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i >= n) break;
        std::size_t j = i;
        while (j < n && !is_space(text[j])) ++j;

        std::string raw = text.substr(i, j - i);
        i = j;

        std::transform(raw.begin(), raw.end(), raw.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });

        if (raw.rfind("http://", 0) == 0 || raw.rfind("https://", 0) == 0 ||
            raw.rfind("www.", 0) == 0) {
            out.emplace_back("<url>");
            continue;
        }
        if (raw.size() > 1 && raw[0] == '@') {
            out.emplace_back("<user>");
            continue;
        }

        std::string tok;
        tok.reserve(raw.size());
        for (unsigned char c : raw) {
            // Keep alphanumerics and non-ASCII bytes; drop ASCII punctuation.
            if (std::isalnum(c) || c >= 0x80) tok.push_back(static_cast<char>(c));
        }
        if (!tok.empty()) out.push_back(std::move(tok));
    }
    return out;
}

TokenCounts count_corpus(const LabeledCorpus& corpus) {
    TokenCounts tc;
    tc.num_classes = corpus.num_classes;
    std::size_t order = 0;
    for (const auto& ex : corpus.examples) {
        for (const auto& tok : tokenize(ex.text)) {
            auto [it, inserted] = tc.counts.try_emplace(tok);
            if (inserted) {
                it->second.first_seen = order++;
                it->second.by_class.assign(static_cast<std::size_t>(tc.num_classes), 0);
            }
            it->second.by_class[static_cast<std::size_t>(ex.label)] += 1;
            tc.total_occurrences += 1;
        }
    }
    return tc;
}

TokenCounts merge_counts(const TokenCounts& a, const TokenCounts& b) {
    if (a.num_classes != b.num_classes) {
        throw ConfigError("cannot merge counts with different class counts");
    }
    TokenCounts out = a;
    out.total_occurrences += b.total_occurrences;

    // Tokens new to `a` are appended in `b`'s first-seen order.
    std::vector<const std::pair<const std::string, TokenCounts::Entry>*> b_entries;
    b_entries.reserve(b.counts.size());
    for (const auto& kv : b.counts) b_entries.push_back(&kv);
    std::sort(b_entries.begin(), b_entries.end(),
              [](const auto* x, const auto* y) { return x->second.first_seen < y->second.first_seen; });

    std::size_t next_order = a.counts.size();
    for (const auto* kv : b_entries) {
        auto [it, inserted] = out.counts.try_emplace(kv->first);
        if (inserted) {
            it->second.first_seen = next_order++;
            it->second.by_class = kv->second.by_class;
        } else {
            for (std::size_t c = 0; c < it->second.by_class.size(); ++c) {
                it->second.by_class[c] += kv->second.by_class[c];
            }
        }
    }
    return out;
}

Vocabulary Vocabulary::from_counts(const TokenCounts& counts, std::int64_t min_freq) {
    if (min_freq < 1) {
        throw ConfigError("min_freq must be >= 1");
    }
    std::vector<const std::pair<const std::string, TokenCounts::Entry>*> entries;
    entries.reserve(counts.counts.size());
    for (const auto& kv : counts.counts) entries.push_back(&kv);
    std::sort(entries.begin(), entries.end(),
              [](const auto* a, const auto* b) { return a->second.first_seen < b->second.first_seen; });

    Vocabulary vocab;
    vocab.num_classes_ = counts.num_classes;
    for (const auto* kv : entries) {
        std::int64_t total = 0;
        for (std::int64_t c : kv->second.by_class) total += c;
        if (total < min_freq) continue;
        vocab.ids_.emplace(kv->first, static_cast<int>(vocab.tokens_.size()));
        vocab.tokens_.push_back(kv->first);
        vocab.class_counts_.push_back(kv->second.by_class);
        vocab.total_counts_.push_back(total);
    }
    if (vocab.tokens_.empty()) {
        throw DataError("vocabulary empty after min_freq filtering");
    }
    return vocab;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? -1 : it->second;
}

Vocabulary build_vocabulary(const LabeledCorpus& corpus, std::int64_t min_freq) {
    if (corpus.examples.empty()) {
        throw DataError("cannot build vocabulary from empty corpus");
    }
    return Vocabulary::from_counts(count_corpus(corpus), min_freq);
}

void write_vocabulary_tsv(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write vocabulary file: " + path);
    }
    for (int id = 0; id < vocab.size(); ++id) {
        out << vocab.token(id) << '\t' << vocab.total_count(id);
        for (std::int64_t c : vocab.class_counts(id)) out << '\t' << c;
        out << '\n';
    }
}

} // namespace gcpt

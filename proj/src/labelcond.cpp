#include "gcpt/labelcond.hpp"

#include <fstream>
#include <iomanip>

#include "gcpt/error.hpp"

namespace gcpt {

std::vector<std::vector<double>> estimate_conditionals(const Vocabulary& vocab) {
    std::vector<std::vector<double>> theta(static_cast<std::size_t>(vocab.size()));
    for (int x = 0; x < vocab.size(); ++x) {
        const auto& counts = vocab.class_counts(x);
        const std::int64_t total = vocab.total_count(x);
        if (total <= 0) {
            throw NumericError("token with zero total count: " + vocab.token(x));
        }
        auto& row = theta[static_cast<std::size_t>(x)];
        row.resize(counts.size());
        for (std::size_t c = 0; c < counts.size(); ++c) {
            row[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
        }
    }
    return theta;
}

LabelConditional select_candidates(const std::vector<std::vector<double>>& theta, double tau) {
    if (theta.empty()) {
        throw DataError("empty theta table");
    }
    const int num_classes = static_cast<int>(theta.front().size());
    if (tau < 1.0 / num_classes || tau > 1.0) {
        throw ConfigError("tau must lie in [1/C, 1]");
    }

    LabelConditional cond;
    cond.theta = theta;
    cond.tau = tau;
    cond.candidate_class.assign(theta.size(), -1);
    cond.candidates.resize(static_cast<std::size_t>(num_classes));

    for (std::size_t x = 0; x < theta.size(); ++x) {
        // argmax with ties broken toward the lowest class index
        int best = 0;
        for (int c = 1; c < num_classes; ++c) {
            if (theta[x][static_cast<std::size_t>(c)] > theta[x][static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        if (theta[x][static_cast<std::size_t>(best)] >= tau) {
            cond.candidate_class[x] = best;
            cond.candidates[static_cast<std::size_t>(best)].push_back(static_cast<int>(x));
        }
    }

    bool any = false;
    for (int c = 0; c < num_classes; ++c) {
        if (cond.candidates[static_cast<std::size_t>(c)].empty()) {
            cond.empty_classes.push_back(c);
        } else {
            any = true;
        }
    }
    if (!any) {
        throw DataError("all candidate sets are empty at tau=" + std::to_string(tau));
    }
    return cond;
}

void write_candidates_tsv(const LabelConditional& cond, const Vocabulary& vocab,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write candidates file: " + path);
    }
    out << std::fixed << std::setprecision(6);
    for (std::size_t x = 0; x < cond.candidate_class.size(); ++x) {
        const int c = cond.candidate_class[x];
        if (c < 0) continue;
        out << vocab.token(static_cast<int>(x)) << '\t' << c << '\t'
            << cond.theta[x][static_cast<std::size_t>(c)] << '\n';
    }
}

} // namespace gcpt

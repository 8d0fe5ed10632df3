#include <doctest.h>

#include <cmath>
#include <random>

#include "gcpt/corpus.hpp"
#include "gcpt/error.hpp"
#include "gcpt/labelcond.hpp"
#include "test_util.hpp"

using namespace gcpt;

namespace {

LabeledCorpus corpus_of(const std::vector<std::pair<int, std::string>>& rows, int num_classes = 2) {
    LabeledCorpus c;
    c.num_classes = num_classes;
    for (const auto& [label, text] : rows) c.examples.push_back({text, label});
    return c;
}

} // namespace

TEST_CASE("estimate_conditionals divides class counts by totals") {
    // a: 1 in class 0, 9 in class 1;  b: 5/5;  c: 0/7
    std::vector<std::pair<int, std::string>> rows;
    rows.push_back({0, "a b b b b b"});
    rows.push_back({1, "a a a a a a a a a b b b b b"});
    rows.push_back({1, "c c c c c c c"});
    Vocabulary v = build_vocabulary(corpus_of(rows), 1);
    auto theta = estimate_conditionals(v);

    const auto ta = theta[static_cast<std::size_t>(v.id_of("a"))];
    CHECK(ta[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ta[1] == doctest::Approx(0.9).epsilon(1e-12));
    const auto tb = theta[static_cast<std::size_t>(v.id_of("b"))];
    CHECK(tb[0] == doctest::Approx(0.5).epsilon(1e-12));
    const auto tc = theta[static_cast<std::size_t>(v.id_of("c"))];
    CHECK(tc[0] == 0.0);
    CHECK(tc[1] == 1.0);

    for (const auto& row : theta) {
        double sum = 0.0;
        for (double p : row) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("select_candidates applies threshold and tie-break") {
    std::vector<std::vector<double>> theta = {
        {0.1, 0.9},    // candidate for class 1 at tau=0.9
        {0.25, 0.75},  // below threshold
        {0.5, 0.5},    // tie -> class 0 when tau allows
    };

    SUBCASE("tau=0.9") {
        LabelConditional cond = select_candidates(theta, 0.9);
        CHECK(cond.candidate_class == std::vector<int>{1, -1, -1});
        CHECK(cond.candidates[1] == std::vector<int>{0});
        CHECK(cond.empty_classes == std::vector<int>{0});
    }
    SUBCASE("tau=0.5 tie goes to the lowest class") {
        LabelConditional cond = select_candidates(theta, 0.5);
        CHECK(cond.candidate_class[2] == 0);
        CHECK(cond.candidates[0] == std::vector<int>{2});
        CHECK(cond.candidates[1] == std::vector<int>{0, 1});
        CHECK(cond.empty_classes.empty());
    }
}

TEST_CASE("select_candidates rejects bad tau and all-empty sets") {
    std::vector<std::vector<double>> theta = {{0.6, 0.4}, {0.55, 0.45}};
    CHECK_THROWS_AS(select_candidates(theta, 0.3), ConfigError);   // below 1/C
    CHECK_THROWS_AS(select_candidates(theta, 1.01), ConfigError);
    CHECK_THROWS_AS(select_candidates(theta, 0.95), DataError);    // nothing qualifies
}

TEST_CASE("raising tau never adds candidates") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int num_classes = 3;

    std::vector<std::vector<double>> theta(40);
    for (auto& row : theta) {
        row.resize(num_classes);
        double sum = 0.0;
        for (double& p : row) {
            p = unif(rng) + 1e-3;
            sum += p;
        }
        for (double& p : row) p /= sum;
    }

    std::vector<int> prev_class;
    bool first = true;
    for (double tau : {1.0 / 3.0, 0.4, 0.5, 0.6, 0.75, 0.9}) {
        LabelConditional cond;
        try {
            cond = select_candidates(theta, tau);
        } catch (const DataError&) {
            break;  // all sets empty from here on: trivially monotone
        }
        if (!first) {
            for (std::size_t x = 0; x < theta.size(); ++x) {
                if (cond.candidate_class[x] >= 0) {
                    CHECK(prev_class[x] == cond.candidate_class[x]);
                }
            }
        }
        prev_class = cond.candidate_class;
        first = false;

        // disjointness
        std::size_t total = 0;
        std::vector<bool> seen(theta.size(), false);
        for (const auto& pool : cond.candidates) {
            for (int x : pool) {
                CHECK(!seen[static_cast<std::size_t>(x)]);
                seen[static_cast<std::size_t>(x)] = true;
                ++total;
            }
        }
        CHECK(total <= theta.size());
    }
}

TEST_CASE("MLE error shrinks with sample size") {
    // Estimate theta* = 0.8 from m draws; mean absolute error over 1000
    // trials must drop from m=100 to m=10000.
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double theta_star = 0.8;

    auto mean_abs_error = [&](int m) {
        double total = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            int hits = 0;
            for (int i = 0; i < m; ++i) {
                if (unif(rng) < theta_star) ++hits;
            }
            total += std::abs(static_cast<double>(hits) / m - theta_star);
        }
        return total / 1000.0;
    };

    CHECK(mean_abs_error(10000) < mean_abs_error(100));
}

TEST_CASE("candidate TSV export") {
    testutil::TempDir tmp("cand");
    LabeledCorpus c = corpus_of({{0, "x x x x x x x x x y"}, {1, "x y y y"}});
    Vocabulary v = build_vocabulary(c, 1);
    LabelConditional cond = select_candidates(estimate_conditionals(v), 0.75);
    write_candidates_tsv(cond, v, tmp.path("cand.tsv"));
    // x: 9/1 -> class 0 at 0.9; y: 1/3 -> class 1 at 0.75
    CHECK(testutil::read_file(tmp.path("cand.tsv")) == "x\t0\t0.900000\ny\t1\t0.750000\n");
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "corpusdrift/divergence.hpp"
#include "oracles.hpp"

using namespace corpusdrift;
using textprep::TokenStream;

namespace {

unigram::UnigramModel model_of(std::vector<std::vector<std::string>> docs) {
    std::vector<TokenStream> streams;
    int i = 0;
    for (auto& tokens : docs)
        streams.push_back(TokenStream{"doc" + std::to_string(i++), std::move(tokens)});
    return unigram::build_model(streams);
}

unigram::SmoothedUnigramModel smoothed_of(const std::vector<std::string>& vocab,
                                          const std::vector<double>& probs) {
    unigram::SmoothedUnigramModel m;
    m.vocab = std::make_shared<std::vector<std::string>>(vocab);
    m.probs = probs;
    m.lambda = 0.05;
    return m;
}

// A corpus where the cohort author's documents are drawn from the given
// token pools; every document gets `tokens_per_doc` tokens.
corpus::Corpus synthetic_corpus(std::mt19937_64& rng, int n_slices, int docs_per_side,
                                int tokens_per_doc,
                                const std::vector<std::string>& cohort_pool,
                                const std::vector<std::string>& field_pool) {
    corpus::Corpus c;
    std::uniform_int_distribution<std::size_t> pick_cohort(0, cohort_pool.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_field(0, field_pool.size() - 1);
    int id = 0;
    for (int s = 0; s < n_slices; ++s) {
        int year = 1960 + 2 * s;
        for (int d = 0; d < docs_per_side; ++d) {
            corpus::Document doc;
            doc.id = "c" + std::to_string(id++);
            doc.year = year;
            doc.authors = {"COHORT"};
            for (int t = 0; t < tokens_per_doc; ++t) {
                doc.text += cohort_pool[pick_cohort(rng)];
                doc.text += ' ';
            }
            c.documents.push_back(doc);
            corpus::Document fdoc;
            fdoc.id = "f" + std::to_string(id++);
            fdoc.year = year;
            fdoc.authors = {"FIELD"};
            for (int t = 0; t < tokens_per_doc; ++t) {
                fdoc.text += field_pool[pick_field(rng)];
                fdoc.text += ' ';
            }
            c.documents.push_back(fdoc);
        }
    }
    c.year_min = 1960;
    c.year_max = 1960 + 2 * n_slices - 1;
    return c;
}

divergence::DivergenceConfig test_config() {
    divergence::DivergenceConfig config;
    config.window = 2;
    config.start_year = 1960;
    config.parallelism = 2;
    config.textprep.normalizer = textprep::Normalizer::none;
    return config;
}

}  // namespace

TEST_CASE("pointwise_kld on the hand-worked pair") {
    auto d = smoothed_of({"a", "b"}, {0.5, 0.5});
    auto q = smoothed_of({"a", "b"}, {0.25, 0.75});
    auto contributions = divergence::pointwise_kld(d, q);
    REQUIRE(contributions.size() == 2);
    // Sorted descending: a first.
    CHECK(contributions[0].term == "a");
    CHECK(contributions[0].kld_bits == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(contributions[1].kld_bits ==
          doctest::Approx(oracles::direct_kld_term_bits(0.5, 0.75)).epsilon(1e-12));
    double sum = contributions[0].kld_bits + contributions[1].kld_bits;
    CHECK(sum == doctest::Approx(oracles::direct_kld_bits({0.5, 0.5}, {0.25, 0.75}))
                     .epsilon(1e-12));
}

TEST_CASE("pointwise_kld: identical models give zero everywhere") {
    auto d = smoothed_of({"a", "b", "c"}, {0.2, 0.3, 0.5});
    auto contributions = divergence::pointwise_kld(d, d);
    for (const auto& c : contributions) CHECK(c.kld_bits == 0.0);
}

TEST_CASE("pointwise_kld: vocabulary mismatch is an error") {
    auto d = smoothed_of({"a", "b"}, {0.5, 0.5});
    auto q = smoothed_of({"a", "z"}, {0.5, 0.5});
    CHECK_THROWS_AS(divergence::pointwise_kld(d, q), std::invalid_argument);
}

TEST_CASE("property: full-vocabulary sums are non-negative (Gibbs)") {
    auto rng = oracles::make_rng(13);
    std::uniform_int_distribution<int> vocab_size(2, 50);
    for (int iter = 0; iter < 500; ++iter) {
        std::size_t v = std::size_t(vocab_size(rng));
        std::vector<std::string> vocab;
        for (std::size_t i = 0; i < v; ++i) vocab.push_back("t" + std::to_string(i));
        std::sort(vocab.begin(), vocab.end());
        auto p = oracles::random_distribution(rng, v);
        auto q = oracles::random_distribution(rng, v);
        auto contributions =
            divergence::pointwise_kld(smoothed_of(vocab, p), smoothed_of(vocab, q));
        double sum = 0.0;
        for (const auto& c : contributions) sum += c.kld_bits;
        CHECK(sum >= -1e-12);
        CHECK(sum == doctest::Approx(oracles::direct_kld_bits(p, q)).epsilon(1e-12));
    }
}

TEST_CASE("significance_filter flags only real frequency differences") {
    // Same relative frequency in every document on both sides -> p = 1.
    auto d = model_of({{"x", "y"}, {"x", "y"}, {"x", "y"}});
    auto q = model_of({{"x", "y"}, {"x", "y"}});
    std::vector<std::string> vocab{"x", "y"};
    auto result = divergence::significance_filter(d, q, vocab, 0.05);
    CHECK(result.tested);
    CHECK(result.by_term.at("x").p_value == doctest::Approx(1.0));
    CHECK(!result.by_term.at("x").significant);

    // Term present in every cohort document, absent from the field.
    auto d2 = model_of({{"k", "y"}, {"k", "y"}, {"k", "y"}});
    auto q2 = model_of({{"y", "y"}, {"y", "y"}});
    std::vector<std::string> vocab2{"k", "y"};
    auto result2 = divergence::significance_filter(d2, q2, vocab2, 0.05);
    CHECK(result2.by_term.at("k").significant);
    CHECK(result2.by_term.at("k").p_value == doctest::Approx(0.0));
}

TEST_CASE("significance threshold is strict: p equal to alpha is not significant") {
    auto d = model_of({{"a", "b"}, {"a", "a"}, {"b", "b"}});
    auto q = model_of({{"a"}, {"a"}, {"a", "b"}});
    std::vector<std::string> vocab{"a", "b"};
    auto baseline = divergence::significance_filter(d, q, vocab, 0.05);
    double p = baseline.by_term.at("a").p_value;
    REQUIRE(p > 0.0);
    REQUIRE(p < 1.0);
    auto at_alpha = divergence::significance_filter(d, q, vocab, p);
    CHECK(!at_alpha.by_term.at("a").significant);  // p < alpha must be strict
    auto above_alpha = divergence::significance_filter(d, q, vocab, std::nextafter(p, 1.0));
    CHECK(above_alpha.by_term.at("a").significant);
}

TEST_CASE("significance_filter without enough documents flags nothing") {
    auto d = model_of({{"a", "b"}});
    auto q = model_of({{"a"}, {"b"}});
    std::vector<std::string> vocab{"a", "b"};
    auto result = divergence::significance_filter(d, q, vocab, 0.05);
    CHECK(!result.tested);
    for (const auto& [term, outcome] : result.by_term) {
        CHECK(!outcome.significant);
        CHECK(outcome.p_value == 1.0);
    }
}

TEST_CASE("compare_models: sums reconstruct and the direction is asymmetric") {
    auto d = model_of({{"a", "a", "b"}, {"a", "b", "b"}, {"a", "a", "a"}});
    auto q = model_of({{"b", "b", "c"}, {"c", "c", "b"}, {"b", "c", "c"}});
    auto config = test_config();
    auto dq = divergence::compare_models(d, q, config, "s1", "s1");
    auto qd = divergence::compare_models(q, d, config, "s1", "s1");

    double total = 0.0, significant = 0.0;
    for (const auto& c : dq.contributions) {
        total += c.kld_bits;
        if (c.significant) significant += c.kld_bits;
    }
    CHECK(total == doctest::Approx(dq.summed_all_bits).epsilon(1e-9));
    CHECK(significant == doctest::Approx(dq.summed_significant_bits).epsilon(1e-9));
    CHECK(dq.summed_all_bits >= -1e-12);
    CHECK(dq.summed_all_bits != doctest::Approx(qd.summed_all_bits).epsilon(1e-6));
    CHECK(std::is_sorted(dq.contributions.begin(), dq.contributions.end(),
                         [](const auto& x, const auto& y) { return x.kld_bits > y.kld_bits; }));
}

TEST_CASE("compare_models: lambda toward 1 collapses both sides onto the background") {
    auto d = model_of({{"a", "a", "b"}, {"a", "b"}});
    auto q = model_of({{"c", "c", "b"}, {"c", "b"}});
    auto config = test_config();
    config.lambda = 0.05;
    auto wide = divergence::compare_models(d, q, config, "s", "s");
    config.lambda = 0.999999;
    auto tight = divergence::compare_models(d, q, config, "s", "s");
    CHECK(tight.summed_all_bits < wide.summed_all_bits);
    CHECK(tight.summed_all_bits < 1e-6);
}

TEST_CASE("synchronous_series: null cohort is near zero, disjoint cohort is large") {
    auto rng = oracles::make_rng(21);
    std::vector<std::string> shared_pool, disjoint_pool;
    for (int i = 0; i < 30; ++i) shared_pool.push_back("w" + std::to_string(i));
    for (int i = 0; i < 10; ++i) disjoint_pool.push_back("z" + std::to_string(i));

    auto config = test_config();

    // Cohort sampled from the same pool as the field.
    auto null_corpus = synthetic_corpus(rng, 3, 12, 40, shared_pool, shared_pool);
    corpus::CohortSelector cohort{corpus::CohortSelector::Mode::author_ids, {"COHORT"}};
    auto null_series = divergence::synchronous_series(null_corpus, cohort, config);
    for (const auto& outcome : null_series) {
        REQUIRE(outcome.report.has_value());
        CHECK(outcome.report->summed_significant_bits < 0.2);
    }

    // Cohort with a vocabulary disjoint from the field.
    auto drifted_corpus = synthetic_corpus(rng, 3, 12, 40, disjoint_pool, shared_pool);
    auto drifted_series = divergence::synchronous_series(drifted_corpus, cohort, config);
    for (std::size_t i = 0; i < drifted_series.size(); ++i) {
        REQUIRE(drifted_series[i].report.has_value());
        CHECK(drifted_series[i].report->summed_significant_bits > 1.0);
        CHECK(drifted_series[i].report->summed_significant_bits >
              null_series[i].report->summed_significant_bits);
    }
}

TEST_CASE("synchronous_series: slices without cohort documents are gaps, not zeros") {
    corpus::Corpus c;
    int id = 0;
    for (int year : {1960, 1960, 1962, 1962, 1964, 1964}) {
        corpus::Document doc;
        doc.id = "d" + std::to_string(id++);
        doc.year = year;
        doc.text = "alpha beta gamma delta";
        doc.authors = {"FIELD"};
        c.documents.push_back(doc);
    }
    // Cohort only in the middle slice.
    corpus::Document mine;
    mine.id = "mine1";
    mine.year = 1962;
    mine.text = "alpha alpha epsilon zeta";
    mine.authors = {"ME"};
    c.documents.push_back(mine);
    corpus::Document mine2 = mine;
    mine2.id = "mine2";
    c.documents.push_back(mine2);
    c.year_min = 1960;
    c.year_max = 1965;

    auto config = test_config();
    corpus::CohortSelector cohort{corpus::CohortSelector::Mode::author_ids, {"ME"}};
    auto series = divergence::synchronous_series(c, cohort, config);
    REQUIRE(series.size() == 3);
    CHECK(!series[0].report);
    CHECK(series[0].gap_reason == "no cohort documents");
    CHECK(series[1].report);
    CHECK(!series[2].report);

    corpus::CohortSelector nobody{corpus::CohortSelector::Mode::author_ids, {"NOBODY"}};
    CHECK_THROWS_AS(divergence::synchronous_series(c, nobody, config), corpus::DataError);
}

TEST_CASE("asynchronous_matrix: diagonal equals the synchronous series") {
    auto rng = oracles::make_rng(23);
    std::vector<std::string> pool;
    for (int i = 0; i < 20; ++i) pool.push_back("w" + std::to_string(i));
    auto c = synthetic_corpus(rng, 4, 8, 30, pool, pool);
    corpus::CohortSelector cohort{corpus::CohortSelector::Mode::author_ids, {"COHORT"}};
    auto config = test_config();

    auto series = divergence::synchronous_series(c, cohort, config);
    auto matrix = divergence::asynchronous_matrix(c, cohort, config);
    REQUIRE(matrix.rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(series[i].report.has_value());
        REQUIRE(matrix.cell_valid(i, i));
        CHECK(matrix.values[i][i] == series[i].report->summed_significant_bits);
        // argmin consistency with the stored values.
        int argmin = matrix.argmin_per_row[i];
        REQUIRE(argmin >= 0);
        for (std::size_t j = 0; j < 4; ++j) {
            if (matrix.cell_valid(i, j))
                CHECK(matrix.values[i][std::size_t(argmin)] <= matrix.values[i][j]);
        }
    }
}

TEST_CASE("asynchronous_matrix: single-slice corpus gives a 1x1 matrix") {
    auto rng = oracles::make_rng(29);
    std::vector<std::string> pool{"w0", "w1", "w2", "w3"};
    auto c = synthetic_corpus(rng, 1, 6, 20, pool, pool);
    corpus::CohortSelector cohort{corpus::CohortSelector::Mode::author_ids, {"COHORT"}};
    auto config = test_config();
    auto matrix = divergence::asynchronous_matrix(c, cohort, config);
    auto series = divergence::synchronous_series(c, cohort, config);
    REQUIRE(matrix.rows.size() == 1);
    REQUIRE(matrix.cols.size() == 1);
    CHECK(matrix.values[0][0] == series[0].report->summed_significant_bits);
    CHECK(matrix.argmin_per_row[0] == 0);
}

TEST_CASE("asynchronous_matrix recovers a planted lag") {
    // Field topic bump slides along the vocabulary; the cohort repeats the
    // field's distribution from two slices earlier.
    auto rng = oracles::make_rng(31);
    const int n_slices = 6, lag = 2;
    const int vocab_size = 80;
    corpus::Corpus c;
    int id = 0;
    auto sample_doc = [&](int center) {
        std::normal_distribution<double> bump(double(center), 6.0);
        std::string text;
        for (int t = 0; t < 50; ++t) {
            int w = std::clamp(int(std::lround(bump(rng))), 0, vocab_size - 1);
            text += "topic" + std::to_string(w) + " ";
        }
        return text;
    };
    for (int s = 0; s < n_slices; ++s) {
        int year = 1960 + 2 * s;
        int field_center = 15 + 10 * s;
        int cohort_center = 15 + 10 * std::max(0, s - lag);
        for (int d = 0; d < 20; ++d) {
            corpus::Document doc;
            doc.id = "f" + std::to_string(id++);
            doc.year = year;
            doc.authors = {"FIELD"};
            doc.text = sample_doc(field_center);
            c.documents.push_back(doc);
        }
        for (int d = 0; d < 8; ++d) {
            corpus::Document doc;
            doc.id = "c" + std::to_string(id++);
            doc.year = year;
            doc.authors = {"COHORT"};
            doc.text = sample_doc(cohort_center);
            c.documents.push_back(doc);
        }
    }
    c.year_min = 1960;
    c.year_max = 1960 + 2 * n_slices - 1;

    corpus::CohortSelector cohort{corpus::CohortSelector::Mode::author_ids, {"COHORT"}};
    auto config = test_config();
    auto matrix = divergence::asynchronous_matrix(c, cohort, config);
    int hits = 0, eligible = 0;
    for (int i = lag; i < n_slices; ++i) {
        ++eligible;
        if (matrix.argmin_per_row[std::size_t(i)] == i - lag) ++hits;
    }
    CHECK(eligible == n_slices - lag);
    CHECK(hits >= eligible - 1);
}

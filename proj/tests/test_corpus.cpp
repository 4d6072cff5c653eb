#include <doctest.h>

#include <random>
#include <set>

#include "corpusdrift/corpus.hpp"
#include "oracles.hpp"

using namespace corpusdrift;
using corpus::CohortSelector;

namespace {

std::string record(const std::string& id, int year, const std::string& authors_json,
                   const std::string& title, const std::string& abstract = "text body") {
    return "{\"id\":\"" + id + "\",\"year\":" + std::to_string(year) + ",\"authors\":" +
           authors_json + ",\"title\":\"" + title + "\",\"abstract\":\"" + abstract + "\"}\n";
}

}  // namespace

TEST_CASE("load_corpus accepts valid records") {
    oracles::TempDir dir("corpus");
    auto path = oracles::write_file(dir.path / "c.jsonl",
                                    record("a", 1960, "[\"X\"]", "t1") +
                                        record("b", 1961, "[\"Y\"]", "t2") +
                                        record("c", 1962, "[]", "t3"));
    corpus::LoadStats stats;
    auto c = corpus::load_corpus(path, {}, &stats);
    CHECK(c.documents.size() == 3);
    CHECK(stats.loaded == 3);
    CHECK(stats.rejected == 0);
    CHECK(c.year_min == 1960);
    CHECK(c.year_max == 1962);
    CHECK(c.documents[0].text == "t1 text body");
}

TEST_CASE("load_corpus: duplicate id is fatal and names the id") {
    oracles::TempDir dir("corpus");
    auto path = oracles::write_file(dir.path / "dup.jsonl",
                                    record("X", 1960, "[]", "t1") +
                                        record("X", 1961, "[]", "t2"));
    try {
        corpus::load_corpus(path);
        FAIL("expected DataError");
    } catch (const corpus::DataError& e) {
        CHECK(std::string(e.what()).find("\"X\"") != std::string::npos);
    }
}

TEST_CASE("load_corpus: empty text is skipped and counted") {
    oracles::TempDir dir("corpus");
    auto path = oracles::write_file(
        dir.path / "c.jsonl",
        record("a", 1960, "[]", "t1") +
            "{\"id\":\"empty\",\"year\":1960,\"authors\":[],\"title\":\"\",\"abstract\":\"\"}\n");
    corpus::LoadStats stats;
    auto c = corpus::load_corpus(path, {}, &stats);
    CHECK(c.documents.size() == 1);
    CHECK(stats.rejected == 1);
    CHECK(stats.warnings.size() == 1);
}

TEST_CASE("load_corpus: missing year, out-of-bounds year, malformed line") {
    oracles::TempDir dir("corpus");
    auto path = oracles::write_file(
        dir.path / "c.jsonl",
        record("ok", 1960, "[]", "t") +
            "{\"id\":\"noyear\",\"authors\":[],\"title\":\"t\"}\n" +
            record("early", 1492, "[]", "t") +
            "this is not json\n");
    corpus::LoadStats stats;
    auto c = corpus::load_corpus(path, {}, &stats);
    CHECK(c.documents.size() == 1);
    CHECK(stats.rejected == 3);
    bool line4_reported = false;
    for (const auto& w : stats.warnings) {
        if (w.find("line 4") != std::string::npos) line4_reported = true;
    }
    CHECK(line4_reported);
}

TEST_CASE("load_corpus: unreadable file and empty corpus are errors") {
    oracles::TempDir dir("corpus");
    CHECK_THROWS_AS(corpus::load_corpus(dir.path / "missing.jsonl"), corpus::DataError);
    auto path = oracles::write_file(dir.path / "empty.jsonl", "not json\n");
    CHECK_THROWS_AS(corpus::load_corpus(path), corpus::DataError);
}

TEST_CASE("slice_corpus covers 1957-2000 in 22 two-year slices") {
    corpus::Corpus c;
    for (int year : {1957, 1980, 2000}) {
        corpus::Document d;
        d.id = "d" + std::to_string(year);
        d.year = year;
        d.text = "x";
        c.documents.push_back(d);
    }
    c.year_min = 1957;
    c.year_max = 2000;
    auto slices = corpus::slice_corpus(c, 2, 1957);
    REQUIRE(slices.size() == 22);
    CHECK(slices.front().id() == "1957-1958");
    CHECK(slices.back().id() == "1999-2000");
    CHECK(!slices.back().partial);
    for (std::size_t i = 1; i < slices.size(); ++i) {
        CHECK(slices[i].start_year == slices[i - 1].end_year + 1);
        CHECK(slices[i].end_year - slices[i].start_year + 1 == 2);
    }
}

TEST_CASE("slice_corpus: window 1, exclusion before start, partial flag") {
    corpus::Corpus c;
    for (int year : {1950, 1957, 1958, 1959}) {
        corpus::Document d;
        d.id = "d" + std::to_string(year);
        d.year = year;
        d.text = "x";
        c.documents.push_back(d);
    }
    c.year_min = 1950;
    c.year_max = 1959;

    auto yearly = corpus::slice_corpus(c, 1, 1957);
    CHECK(yearly.size() == 3);

    auto sliced = corpus::slice_corpus(c, 2, 1957);
    REQUIRE(sliced.size() == 2);
    // 1950 predates the start year and lands in no slice.
    std::size_t total = 0;
    for (const auto& s : sliced) total += s.documents.size();
    CHECK(total == 3);
    CHECK(sliced.back().id() == "1959-1960");
    CHECK(sliced.back().partial);

    CHECK_THROWS_AS(corpus::slice_corpus(c, 0, 1957), std::invalid_argument);
    CHECK_THROWS_AS(corpus::slice_corpus(c, 2, 1980), std::invalid_argument);
}

TEST_CASE("partition_slice splits cohort from field") {
    corpus::Corpus c;
    for (int i = 0; i < 10; ++i) {
        corpus::Document d;
        d.id = "d" + std::to_string(i);
        d.year = 1960;
        d.text = "x";
        d.authors = {i < 3 ? "A" : "B"};
        c.documents.push_back(d);
    }
    c.year_min = c.year_max = 1960;
    auto slices = corpus::slice_corpus(c, 2, 1960);
    REQUIRE(slices.size() == 1);

    CohortSelector a{CohortSelector::Mode::author_ids, {"A"}};
    auto [cohort, field] = corpus::partition_slice(slices[0], a);
    CHECK(cohort.size() == 3);
    CHECK(field.size() == 7);

    CohortSelector none{CohortSelector::Mode::author_ids, {"Z"}};
    auto [cohort2, field2] = corpus::partition_slice(slices[0], none);
    CHECK(cohort2.empty());
    CHECK(field2.size() == 10);
}

TEST_CASE("co-authored documents join the cohort side only") {
    corpus::Document d;
    d.id = "co";
    d.year = 1960;
    d.text = "x";
    d.authors = {"A", "B"};
    corpus::TimeSlice slice{1960, 1961, false, {&d}};
    CohortSelector a{CohortSelector::Mode::author_ids, {"A"}};
    auto [cohort, field] = corpus::partition_slice(slice, a);
    CHECK(cohort.size() == 1);
    CHECK(field.empty());
}

TEST_CASE("metadata predicate selector") {
    corpus::Document de;
    de.id = "de1";
    de.year = 1960;
    de.text = "x";
    de.language = "de";
    corpus::Document en;
    en.id = "en1";
    en.year = 1960;
    en.text = "x";
    en.language = "en";
    CohortSelector sel{CohortSelector::Mode::metadata_predicate, {"language=de"}};
    CHECK(sel.matches(de));
    CHECK(!sel.matches(en));
    CohortSelector by_id{CohortSelector::Mode::metadata_predicate, {"id=en1"}};
    CHECK(by_id.matches(en));
}

TEST_CASE("property: slices partition the eligible documents; partition is exact") {
    auto rng = oracles::make_rng(11);
    std::uniform_int_distribution<int> year(1950, 1979);
    std::uniform_int_distribution<int> author(0, 4);
    for (int iter = 0; iter < 50; ++iter) {
        corpus::Corpus c;
        int n = 30 + iter;
        for (int i = 0; i < n; ++i) {
            corpus::Document d;
            d.id = "d" + std::to_string(i);
            d.year = year(rng);
            d.text = "x";
            d.authors = {"a" + std::to_string(author(rng))};
            c.documents.push_back(d);
        }
        c.year_min = 1950;
        c.year_max = 1979;
        int start = 1955;
        int window = 1 + iter % 4;
        auto slices = corpus::slice_corpus(c, window, start);

        std::multiset<std::string> sliced_ids, eligible_ids;
        for (const auto& s : slices) {
            for (const auto* doc : s.documents) {
                sliced_ids.insert(doc->id);
                CHECK(doc->year >= s.start_year);
                CHECK(doc->year <= s.end_year);
            }
        }
        for (const auto& doc : c.documents) {
            if (doc.year >= start) eligible_ids.insert(doc.id);
        }
        CHECK(sliced_ids == eligible_ids);

        CohortSelector sel{CohortSelector::Mode::author_ids, {"a0", "a1"}};
        for (const auto& s : slices) {
            auto [cohort, field] = corpus::partition_slice(s, sel);
            CHECK(cohort.size() + field.size() == s.documents.size());
            std::set<const corpus::Document*> cohort_set(cohort.begin(), cohort.end());
            for (const auto* doc : field) CHECK(cohort_set.count(doc) == 0);
        }
    }
}

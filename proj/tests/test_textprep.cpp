#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "corpusdrift/hashing.hpp"
#include "corpusdrift/textprep.hpp"
#include "oracles.hpp"

using namespace corpusdrift;
using textprep::NormalizationConfig;

namespace {

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

std::multiset<std::string> multiset_of(const std::vector<std::string>& tokens) {
    return {tokens.begin(), tokens.end()};
}

}  // namespace

TEST_CASE("normalize: stopwords, numbers and plural stemming") {
    NormalizationConfig config;
    auto tokens = textprep::tokenize("The 2 gravitational waves!", config);
    CHECK(tokens == std::vector<std::string>{"gravitational", "wave"});
}

TEST_CASE("normalize: empty input and punctuation-only input") {
    NormalizationConfig config;
    CHECK(textprep::tokenize("", config).empty());
    CHECK(textprep::tokenize("?!—…", config).empty());
    auto stream = textprep::normalize("", "doc1", config);
    CHECK(stream.doc_id == "doc1");
    CHECK(stream.tokens.empty());
}

TEST_CASE("normalize: en dash splits tokens") {
    NormalizationConfig config;
    CHECK(textprep::tokenize("Einstein–Mach", config) ==
          std::vector<std::string>{"einstein", "mach"});
}

TEST_CASE("stem_token plural rules") {
    CHECK(textprep::stem_token("waves") == "wave");
    CHECK(textprep::stem_token("stars") == "star");
    CHECK(textprep::stem_token("galaxies") == "galaxy");
    CHECK(textprep::stem_token("densities") == "density");
    CHECK(textprep::stem_token("classes") == "class");
    CHECK(textprep::stem_token("boxes") == "box");
    CHECK(textprep::stem_token("wishes") == "wish");
    CHECK(textprep::stem_token("gas") == "gas");
    CHECK(textprep::stem_token("mass") == "mass");
    CHECK(textprep::stem_token("radius") == "radius");
    CHECK(textprep::stem_token("analysis") == "analysis");
    CHECK(textprep::stem_token("wave") == "wave");
}

TEST_CASE("strip_numbers only drops tokens without letters") {
    NormalizationConfig config;
    CHECK(textprep::tokenize("42 galaxies h2 42x", config) ==
          std::vector<std::string>{"galaxy", "h2", "42x"});
    config.strip_numbers = false;
    CHECK(textprep::tokenize("42 galaxies", config) == std::vector<std::string>{"42", "galaxy"});
}

TEST_CASE("strip_symbols off keeps interior punctuation") {
    NormalizationConfig config;
    config.strip_symbols = false;
    CHECK(textprep::tokenize("alpha-decay rates!", config) ==
          std::vector<std::string>{"alpha-decay", "rate"});
}

TEST_CASE("stems landing on a stopword are filtered out") {
    NormalizationConfig config;
    // "downs" stems to "down", which is in the stopword list.
    CHECK(textprep::tokenize("downs galaxies", config) == std::vector<std::string>{"galaxy"});
}

TEST_CASE("lemma table normalizer") {
    NormalizationConfig config;
    config.normalizer = textprep::Normalizer::lemma_table;
    config.lemma_table = {{"went", "go"}, {"mice", "mouse"}};
    CHECK(textprep::tokenize("went mice walked", config) ==
          std::vector<std::string>{"go", "mouse", "walked"});
}

TEST_CASE("normalize is idempotent and outputs survive their own filters") {
    NormalizationConfig config;
    auto rng = oracles::make_rng(7);
    const std::vector<std::string> pool = {
        "The",     "waves",   "2",       "galaxies",  "Einstein–Mach",
        "density", "of",      "1957",    "classes",   "mass",
        "a",       "hes",     "K2",      "über",      "x",
        "theory!", "(field)", "cosmos,", "structure", "properties"};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int iter = 0; iter < 200; ++iter) {
        std::string text;
        int len = 1 + iter % 30;
        for (int k = 0; k < len; ++k) {
            if (!text.empty()) text += ' ';
            text += pool[pick(rng)];
        }
        auto once = textprep::tokenize(text, config);
        auto twice = textprep::tokenize(join(once), config);
        CHECK(multiset_of(once) == multiset_of(twice));
        for (const auto& token : once) {
            CHECK(!token.empty());
            CHECK(config.stopwords.count(token) == 0);
            bool all_digits = !token.empty() &&
                              std::all_of(token.begin(), token.end(),
                                          [](char c) { return c >= '0' && c <= '9'; });
            CHECK(!all_digits);
        }
    }
}

TEST_CASE("default config carries the shipped stopword list and its hash") {
    NormalizationConfig config;
    CHECK(config.stopwords.count("the") == 1);
    CHECK(config.stopwords.size() == textprep::default_stopword_list().size());
    CHECK(config.stopwords_sha256 == textprep::default_stopword_sha256());
    for (const auto& word : config.stopwords) {
        for (char c : word) CHECK((c < 'A' || c > 'Z'));
    }
    // The list is kept sorted so the canonical file form is well defined.
    auto list = textprep::default_stopword_list();
    CHECK(std::is_sorted(list.begin(), list.end()));
}

TEST_CASE("embedded stopword list matches the shipped data file") {
    auto path = std::filesystem::path(CORPUSDRIFT_DATA_DIR) / "stopwords_en.txt";
    REQUIRE(std::filesystem::exists(path));
    CHECK(hashing::sha256_file_hex(path) == textprep::default_stopword_sha256());
    auto from_file = textprep::load_stopword_file(path);
    const auto& embedded = textprep::default_stopword_list();
    CHECK(from_file == std::set<std::string>(embedded.begin(), embedded.end()));
}

TEST_CASE("stopword and lemma file loading") {
    oracles::TempDir dir("textprep");
    auto stopword_path = oracles::write_file(dir.path / "stop.txt", "# comment\nfoo\nbar\n\n");
    auto words = textprep::load_stopword_file(stopword_path);
    CHECK(words == std::set<std::string>{"foo", "bar"});

    auto lemma_path = oracles::write_file(dir.path / "lemmas.tsv", "went\tgo\nmice\tmouse\n");
    auto table = textprep::load_lemma_table(lemma_path);
    CHECK(table.at("went") == "go");
    CHECK(table.at("mice") == "mouse");

    CHECK_THROWS(textprep::load_stopword_file(dir.path / "missing.txt"));
    auto bad_path = oracles::write_file(dir.path / "bad.tsv", "no-tab-here\n");
    CHECK_THROWS(textprep::load_lemma_table(bad_path));
}

TEST_CASE("fingerprint changes with the stopword list") {
    NormalizationConfig a, b;
    b.stopwords_sha256 = "different";
    CHECK(a.fingerprint() != b.fingerprint());
    NormalizationConfig c;
    c.strip_numbers = false;
    CHECK(a.fingerprint() != c.fingerprint());
}

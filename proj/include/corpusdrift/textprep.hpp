#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace corpusdrift::textprep {

enum class Normalizer {
    none,
    suffix_stemmer,   // deterministic English plural stripper
    lemma_table,      // user-supplied term -> lemma map
};

// Shipped English stopword list (lowercase, sorted) and the SHA-256 of its
// canonical text form (one token per line, trailing newline). The same list
// ships as data/stopwords_en.txt.
const std::vector<std::string>& default_stopword_list();
const std::string& default_stopword_sha256();

struct NormalizationConfig {
    bool lowercase = true;
    bool strip_numbers = true;
    bool strip_symbols = true;
    Normalizer normalizer = Normalizer::suffix_stemmer;
    std::set<std::string> stopwords;          // entries must be lowercase
    std::map<std::string, std::string> lemma_table;
    std::string stopwords_sha256;             // provenance, tracked in outputs
    std::string lemma_table_sha256;

    NormalizationConfig();  // starts from the shipped stopword list

    // Canonical key=value form, part of every run's config hash.
    std::string fingerprint() const;
};

struct TokenStream {
    std::string doc_id;
    std::vector<std::string> tokens;
};

// One lowercase token per line; '#' lines and blanks ignored.
std::set<std::string> load_stopword_file(const std::filesystem::path& path);
// Tab-separated term<TAB>lemma pairs.
std::map<std::string, std::string> load_lemma_table(const std::filesystem::path& path);

// Plural suffix stripper: -ies -> y, -(ss|sh|ch|x|z)es -> stem, trailing -s
// dropped (keeping -ss/-us/-is words). Approximate by design; supply a lemma
// table for anything better.
std::string stem_token(const std::string& token);

// Full pipeline: tokenize -> lowercase -> strip numbers/symbols -> stopword
// removal -> normalizer. Emitted tokens are fixed points of the pipeline:
// re-running normalize over the joined output returns the same multiset.
std::vector<std::string> tokenize(std::string_view text, const NormalizationConfig& config);

TokenStream normalize(std::string_view text, std::string doc_id, const NormalizationConfig& config);

}  // namespace corpusdrift::textprep

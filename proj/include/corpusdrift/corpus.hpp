#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace corpusdrift::corpus {

// Raised for malformed or contradictory input data (as opposed to usage
// errors); the CLI maps it to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Document {
    std::string id;
    int year = 0;
    std::vector<std::string> authors;
    std::string title;
    std::string abstract_text;
    std::string text;      // title + abstract, the unit of analysis
    std::string language;  // optional ISO-639-1 tag, metadata only
};

struct Corpus {
    std::vector<Document> documents;
    int year_min = 0;
    int year_max = 0;
};

struct TimeSlice {
    int start_year = 0;
    int end_year = 0;    // inclusive; end - start + 1 == window
    bool partial = false;  // window extends past the corpus's last year
    std::vector<const Document*> documents;

    std::string id() const;  // "1957-1958"
};

struct CohortSelector {
    enum class Mode { author_ids, metadata_predicate };
    Mode mode = Mode::author_ids;
    // author_ids: exact author-identifier strings, any-of.
    // metadata_predicate: "key=value" strings over {id, language, year}, any-of.
    std::vector<std::string> values;

    bool matches(const Document& doc) const;
    std::string fingerprint() const;
};

struct CorpusSchema {
    int year_lower_bound = 1900;
    int year_upper_bound = 2100;
};

struct LoadStats {
    std::size_t loaded = 0;
    std::size_t rejected = 0;
    std::vector<std::string> warnings;  // one line per rejected record
};

// Line-delimited JSON records: {"id", "year", "authors": [], "title",
// "abstract"?, "language"?}. text = title + " " + abstract. Records with
// empty text, missing/out-of-bounds year, or unparseable JSON are skipped
// and counted; a duplicate id aborts the load.
Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema = {},
                   LoadStats* stats = nullptr);

// Consecutive non-overlapping [start, start+window-1] slices covering
// through corpus.year_max. Documents before start_year fall in no slice.
std::vector<TimeSlice> slice_corpus(const Corpus& corpus, int window, int start_year);

// Splits a slice into (cohort, field). A document joins the cohort if ANY
// of its authors (or predicates) match; the two lists partition the slice.
std::pair<std::vector<const Document*>, std::vector<const Document*>>
partition_slice(const TimeSlice& slice, const CohortSelector& cohort);

}  // namespace corpusdrift::corpus

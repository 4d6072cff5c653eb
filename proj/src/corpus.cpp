#include "corpusdrift/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace corpusdrift::corpus {

std::string TimeSlice::id() const {
    return std::to_string(start_year) + "-" + std::to_string(end_year);
}

bool CohortSelector::matches(const Document& doc) const {
    if (mode == Mode::author_ids) {
        for (const auto& wanted : values) {
            for (const auto& author : doc.authors) {
                if (author == wanted) return true;
            }
        }
        return false;
    }
    for (const auto& predicate : values) {
        auto eq = predicate.find('=');
        if (eq == std::string::npos) continue;
        std::string key = predicate.substr(0, eq);
        std::string value = predicate.substr(eq + 1);
        if (key == "id" && doc.id == value) return true;
        if (key == "language" && doc.language == value) return true;
        if (key == "year" && std::to_string(doc.year) == value) return true;
    }
    return false;
}

std::string CohortSelector::fingerprint() const {
    std::ostringstream os;
    os << (mode == Mode::author_ids ? "authors" : "predicate") << ":";
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& v : sorted) os << v << '\x1f';
    return os.str();
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema,
                   LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path.string());

    Corpus corpus;
    LoadStats local;
    LoadStats& st = stats ? *stats : local;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;

    auto reject = [&](const std::string& why) {
        ++st.rejected;
        st.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            reject("malformed record (not a JSON object)");
            continue;
        }
        Document doc;
        if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
            reject("missing or empty id");
            continue;
        }
        doc.id = rec["id"].get<std::string>();
        if (!rec.contains("year") || !rec["year"].is_number_integer()) {
            reject("missing year (id " + doc.id + ")");
            continue;
        }
        doc.year = rec["year"].get<int>();
        if (doc.year < schema.year_lower_bound || doc.year > schema.year_upper_bound) {
            reject("year " + std::to_string(doc.year) + " outside bounds (id " + doc.id + ")");
            continue;
        }
        if (rec.contains("authors") && rec["authors"].is_array()) {
            for (const auto& a : rec["authors"]) {
                if (a.is_string()) doc.authors.push_back(a.get<std::string>());
            }
        }
        if (rec.contains("title") && rec["title"].is_string())
            doc.title = rec["title"].get<std::string>();
        if (rec.contains("abstract") && rec["abstract"].is_string())
            doc.abstract_text = rec["abstract"].get<std::string>();
        if (rec.contains("language") && rec["language"].is_string())
            doc.language = rec["language"].get<std::string>();

        doc.text = doc.title;
        if (!doc.abstract_text.empty()) {
            if (!doc.text.empty()) doc.text += ' ';
            doc.text += doc.abstract_text;
        }
        if (doc.text.empty()) {
            reject("empty text (id " + doc.id + ")");
            continue;
        }
        if (!seen_ids.insert(doc.id).second) {
            throw DataError("duplicate document id \"" + doc.id + "\" at line " +
                            std::to_string(line_no) + " of " + path.string());
        }
        corpus.documents.push_back(std::move(doc));
    }

    if (corpus.documents.empty()) {
        throw DataError("corpus " + path.string() + " contains no valid documents (" +
                        std::to_string(st.rejected) + " rejected)");
    }
    st.loaded = corpus.documents.size();
    corpus.year_min = std::numeric_limits<int>::max();
    corpus.year_max = std::numeric_limits<int>::min();
    for (const auto& d : corpus.documents) {
        corpus.year_min = std::min(corpus.year_min, d.year);
        corpus.year_max = std::max(corpus.year_max, d.year);
    }
    return corpus;
}

std::vector<TimeSlice> slice_corpus(const Corpus& corpus, int window, int start_year) {
    if (window < 1) throw std::invalid_argument("slice window must be >= 1");
    if (start_year > corpus.year_max) {
        throw std::invalid_argument("start year " + std::to_string(start_year) +
                                    " is past the corpus's last year " +
                                    std::to_string(corpus.year_max));
    }
    std::vector<TimeSlice> slices;
    for (int start = start_year; start <= corpus.year_max; start += window) {
        TimeSlice slice;
        slice.start_year = start;
        slice.end_year = start + window - 1;
        slice.partial = slice.end_year > corpus.year_max;
        slices.push_back(std::move(slice));
    }
    for (const auto& doc : corpus.documents) {
        if (doc.year < start_year) continue;
        std::size_t idx = std::size_t(doc.year - start_year) / std::size_t(window);
        slices[idx].documents.push_back(&doc);
    }
    return slices;
}

std::pair<std::vector<const Document*>, std::vector<const Document*>>
partition_slice(const TimeSlice& slice, const CohortSelector& cohort) {
    std::vector<const Document*> in_cohort, in_field;
    for (const Document* doc : slice.documents) {
        (cohort.matches(*doc) ? in_cohort : in_field).push_back(doc);
    }
    return {std::move(in_cohort), std::move(in_field)};
}

}  // namespace corpusdrift::corpus

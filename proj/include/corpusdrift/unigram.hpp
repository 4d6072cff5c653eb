#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "corpusdrift/stats.hpp"
#include "corpusdrift/textprep.hpp"

namespace corpusdrift::unigram {

// Term counts plus, per term, the relative frequency of the term within
// each contributing document (sparse: documents where the term is absent
// are implied zeros). Documents whose token stream is empty carry no
// lexical information and are excluded entirely.
struct UnigramModel {
    std::map<std::string, std::int64_t> counts;
    std::int64_t total = 0;
    std::uint32_t n_docs = 0;
    std::map<std::string, std::vector<std::pair<std::uint32_t, double>>> doc_freqs;

    double probability(const std::string& term) const;

    // Zero-filled vector of length n_docs with each document's relative
    // frequency of `term`.
    std::vector<double> doc_freqs_zero_filled(const std::string& term) const;

    // Moments of that vector without materializing it.
    stats::SampleSummary term_summary(const std::string& term) const;
};

// Aggregates counts over all streams. Throws if every stream is empty.
UnigramModel build_model(const std::vector<textprep::TokenStream>& streams);

// Counts-only union of two models, used as a smoothing background.
// Per-document frequencies are not carried over.
UnigramModel union_background(const UnigramModel& a, const UnigramModel& b);

// Sorted term list of a model; shared so both sides of a comparison can
// reference one vocabulary.
std::shared_ptr<const std::vector<std::string>> vocabulary(const UnigramModel& model);

// Probabilities over the full background vocabulary after Jelinek-Mercer
// interpolation: P(t) = (1 - lambda) * P_model(t) + lambda * P_background(t).
// lambda weights the background, so every probability is >= lambda * P_bg > 0.
struct SmoothedUnigramModel {
    std::shared_ptr<const std::vector<std::string>> vocab;  // sorted
    std::vector<double> probs;                              // aligned with vocab
    double lambda = 0.0;
    std::string background_id;

    double probability(const std::string& term) const;
};

// Requires 0 < lambda < 1 and background vocabulary covering the model's.
SmoothedUnigramModel smooth(const UnigramModel& model, const UnigramModel& background,
                            double lambda, std::string background_id = {});
SmoothedUnigramModel smooth(const UnigramModel& model, const UnigramModel& background,
                            double lambda,
                            std::shared_ptr<const std::vector<std::string>> background_vocab,
                            std::string background_id = {});

// Versioned binary serialization (native byte order; a cache format, not an
// interchange format).
void save_model(const UnigramModel& model, const std::filesystem::path& path);
UnigramModel load_model(const std::filesystem::path& path);

}  // namespace corpusdrift::unigram

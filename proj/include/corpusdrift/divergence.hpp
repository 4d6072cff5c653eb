#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corpusdrift/corpus.hpp"
#include "corpusdrift/textprep.hpp"
#include "corpusdrift/unigram.hpp"

namespace corpusdrift::divergence {

// One term's summand of D(M_d || M_q) = sum_t P(t|M_d) * log2(P(t|M_d) / P(t|M_q)),
// in bits, plus its Welch-test verdict. Negative contributions are normal;
// only the full-vocabulary sum is guaranteed non-negative.
struct TermContribution {
    std::string term;
    double kld_bits = 0.0;
    double p_d = 0.0;       // smoothed probability, d side (cohort)
    double p_q = 0.0;       // smoothed probability, q side (field)
    double p_value = 1.0;
    bool significant = false;
};

struct KldReport {
    std::string d_slice;
    std::string q_slice;
    std::vector<TermContribution> contributions;  // kld_bits descending
    double summed_significant_bits = 0.0;
    double summed_all_bits = 0.0;
    double alpha = 0.05;
    std::string config_hash;
    std::uint32_t n_d_docs = 0;
    std::uint32_t n_q_docs = 0;
    bool welch_tested = true;  // false when either side had < 2 documents
};

struct KldMatrix {
    std::vector<std::string> rows;  // cohort slice ids
    std::vector<std::string> cols;  // field slice ids
    std::vector<std::vector<double>> values;  // summed significant bits; NaN = no data
    std::vector<int> argmin_per_row;          // column index of row minimum, -1 = no data

    bool cell_valid(std::size_t i, std::size_t j) const;
};

struct DivergenceConfig {
    int window = 2;
    int start_year = 0;  // 0 = corpus.year_min
    double lambda = 0.05;
    double alpha = 0.05;
    bool whole_corpus_background = false;  // default: per-pair union background
    unsigned parallelism = 1;
    textprep::NormalizationConfig textprep;
    std::string config_hash;  // provenance stamp copied into reports
};

// Both models must share one background vocabulary (same vector contents).
// Returns one contribution per vocabulary term, sorted by kld_bits
// descending (ties by term); p-values left at their defaults.
std::vector<TermContribution> pointwise_kld(const unigram::SmoothedUnigramModel& d_model,
                                            const unigram::SmoothedUnigramModel& q_model);

struct SignificanceOutcome {
    double p_value = 1.0;
    bool significant = false;
};

struct SignificanceResult {
    std::map<std::string, SignificanceOutcome> by_term;
    bool tested = true;  // false when either side had < 2 documents
};

// Welch's t-test per vocabulary term on the two sides' per-document
// relative frequencies (zero-filled for documents lacking the term).
// Significant means p < alpha, strictly.
SignificanceResult significance_filter(const unigram::UnigramModel& d_docs,
                                       const unigram::UnigramModel& q_docs,
                                       const std::vector<std::string>& vocab, double alpha);

// Full pipeline for one model pair: build (or take) the background, smooth
// both sides, compute contributions, test, and sum. Sums run in sorted term
// order for cross-run determinism.
KldReport compare_models(const unigram::UnigramModel& d_model,
                         const unigram::UnigramModel& q_model, const DivergenceConfig& config,
                         std::string d_slice, std::string q_slice,
                         const unigram::UnigramModel* global_background = nullptr);

// Per-slice cohort/field models; nullopt when the side has no documents
// with any tokens.
struct SliceModels {
    std::string slice_id;
    std::optional<unigram::UnigramModel> cohort;
    std::optional<unigram::UnigramModel> field;
};

struct SliceOutcome {
    std::string slice_id;
    std::optional<KldReport> report;  // nullopt = gap (not a zero)
    std::string gap_reason;
};

std::vector<SliceModels> build_slice_models(const std::vector<corpus::TimeSlice>& slices,
                                            const corpus::CohortSelector& cohort,
                                            const textprep::NormalizationConfig& config,
                                            unsigned parallelism);

unigram::UnigramModel global_background(const std::vector<SliceModels>& models);

std::vector<SliceOutcome> synchronous_from_models(const std::vector<SliceModels>& models,
                                                  const DivergenceConfig& config,
                                                  const unigram::UnigramModel* background = nullptr);

KldMatrix asynchronous_from_models(const std::vector<SliceModels>& models,
                                   const DivergenceConfig& config,
                                   const unigram::UnigramModel* background = nullptr);

// Cohort vs field within each slice. Slices without cohort documents come
// back as gaps; throws if the cohort is empty in every slice.
std::vector<SliceOutcome> synchronous_series(const corpus::Corpus& corpus,
                                             const corpus::CohortSelector& cohort,
                                             const DivergenceConfig& config);

// Cohort model of slice i against field model of slice j for all pairs.
// The field side excludes the cohort's documents in every slice, keeping
// its definition uniform across the grid; the diagonal reproduces the
// synchronous series.
KldMatrix asynchronous_matrix(const corpus::Corpus& corpus,
                              const corpus::CohortSelector& cohort,
                              const DivergenceConfig& config);

}  // namespace corpusdrift::divergence

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corpusdrift/corpus.hpp"
#include "corpusdrift/divergence.hpp"
#include "corpusdrift/embedding.hpp"
#include "corpusdrift/textprep.hpp"

namespace corpusdrift::report {

// Stamped into every output file (CSV comment header / JSON fields) so a
// number can always be traced back to the exact filter set that produced it.
struct Provenance {
    std::string config_hash;
    std::string stopwords_sha256;
};

struct FrequencyTrendTable {
    std::vector<std::string> terms;          // top-k, by descending total count
    std::vector<std::string> bins;           // included slice ids, in time order
    std::vector<std::string> excluded_bins;  // below the token threshold
    std::vector<std::int64_t> bin_totals;    // totals of included bins
    std::map<std::string, std::vector<double>> values;    // term -> per-bin relative frequency
    std::map<std::string, std::vector<double>> smoothed;  // display-only smoothing
    double smoothing_bandwidth = 1.0;        // in bins
};

// Relative frequency of the cohort's top_k terms per time bin; bins whose
// cohort token total is below min_tokens are excluded. The smoothed series
// is a 1-D Gaussian over bin index and feeds plots only, never CSV values.
FrequencyTrendTable token_frequency_trends(const corpus::Corpus& corpus,
                                           const corpus::CohortSelector& cohort,
                                           const textprep::NormalizationConfig& config,
                                           int window, int start_year, std::size_t top_k,
                                           std::int64_t min_tokens,
                                           double smoothing_bandwidth = 1.0);

// Canonical float formatting for all text outputs (%.17g: round-trippable,
// byte-stable across runs).
std::string format_double(double v);

// CSV / JSON writers. Identical inputs produce identical bytes.
void write_series_csv(const std::filesystem::path& path,
                      const std::vector<divergence::SliceOutcome>& series, const Provenance& prov);
void write_series_json(const std::filesystem::path& path,
                       const std::vector<divergence::SliceOutcome>& series, const Provenance& prov);
void write_report_csv(const std::filesystem::path& path, const divergence::KldReport& report,
                      const Provenance& prov);
void write_report_json(const std::filesystem::path& path, const divergence::KldReport& report,
                       const Provenance& prov);
void write_matrix_csv(const std::filesystem::path& path, const divergence::KldMatrix& matrix,
                      const Provenance& prov);
void write_matrix_json(const std::filesystem::path& path, const divergence::KldMatrix& matrix,
                       const Provenance& prov);
void write_trends_csv(const std::filesystem::path& path, const FrequencyTrendTable& table,
                      const Provenance& prov);
void write_trends_json(const std::filesystem::path& path, const FrequencyTrendTable& table,
                       const Provenance& prov);
void write_ede_trajectories_csv(const std::filesystem::path& path,
                                const std::vector<embedding::EdeTrajectory>& trajectories,
                                const Provenance& prov);
void write_ede_median_csv(const std::filesystem::path& path,
                          const std::vector<embedding::MedianPoint>& median,
                          const Provenance& prov);
void write_ede_json(const std::filesystem::path& path, const embedding::EdeBatch& batch,
                    const std::string& bandwidth_rule, const std::string& kernel_mode,
                    const Provenance& prov);

// Readers for the formats above (round-trip and re-rendering).
divergence::KldReport read_report_csv(const std::filesystem::path& path);
divergence::KldReport read_report_json(const std::filesystem::path& path);
std::vector<divergence::SliceOutcome> read_series_json(const std::filesystem::path& path);
divergence::KldMatrix read_matrix_json(const std::filesystem::path& path);
embedding::EdeBatch read_ede_json(const std::filesystem::path& path);
FrequencyTrendTable read_trends_json(const std::filesystem::path& path);

}  // namespace corpusdrift::report

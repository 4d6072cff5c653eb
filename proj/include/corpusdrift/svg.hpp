#pragma once

#include <string>
#include <vector>

#include "corpusdrift/divergence.hpp"
#include "corpusdrift/embedding.hpp"
#include "corpusdrift/report.hpp"

namespace corpusdrift::svg {

// Self-contained deterministic SVG renderings. Gaps in a series break the
// line rather than interpolating across missing slices.

// Summed significant divergence per slice.
std::string series_chart(const std::vector<divergence::SliceOutcome>& series,
                         const std::string& title, const report::Provenance& prov);

// Per-term divergence contributions across slices; the largest cumulative
// |contribution| is highlighted in red, the smallest in blue, everything
// else drawn as context. max_series caps the context lines by that score.
std::string term_lines_chart(const std::vector<divergence::SliceOutcome>& series,
                             std::size_t max_series, const std::string& title,
                             const report::Provenance& prov);

// Slice-by-slice divergence grid with each row's minimum outlined.
std::string matrix_heatmap(const divergence::KldMatrix& matrix, const std::string& title,
                           const report::Provenance& prov);

// One line per reference trajectory plus the bold median line.
std::string trajectories_chart(const std::vector<embedding::EdeTrajectory>& trajectories,
                               const std::vector<embedding::MedianPoint>& median,
                               const std::string& title, const report::Provenance& prov);

// Smoothed relative-frequency trends of the top terms.
std::string trends_chart(const report::FrequencyTrendTable& table, const std::string& title,
                         const report::Provenance& prov);

}  // namespace corpusdrift::svg

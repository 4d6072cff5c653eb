#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpusdrift/corpus.hpp"

namespace corpusdrift::embedding {

struct EmbeddingStore {
    std::size_t dim = 0;
    std::string model_name;
    std::string fetched_at;  // provenance only
    std::map<std::string, std::vector<double>> vectors;  // doc id -> vector

    const std::vector<double>* find(const std::string& doc_id) const;
};

// File format: header line "dim=<d> model=<name>", then one record per
// line: doc id, comma-separated floats. Rejects dimension mismatches and
// non-finite components, naming the offending doc id.
EmbeddingStore load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

enum class KernelMode {
    // f(x) = 1/(n h) * sum_i  exp(-((||x-xi||/h)^2)/2) / sqrt(2 pi)
    // The univariate Gaussian kernel applied to Euclidean distances:
    // comparable across slices of equal n, but not a normalized density
    // in d dimensions.
    as_written,
    // f(x) = 1/n * sum_i (2 pi)^(-d/2) h^(-d) exp(-((||x-xi||/h)^2)/2),
    // a proper density (integrates to 1).
    multivariate_normalized,
};

KernelMode parse_kernel_mode(const std::string& name);
std::string kernel_mode_name(KernelMode mode);

struct KdeModel {
    std::vector<std::vector<double>> sample;  // reference included
    double bandwidth = 1.0;
    KernelMode mode = KernelMode::as_written;

    std::size_t n() const { return sample.size(); }
};

// Evaluates the fitted density at x. Exact O(n) summation.
double kde_density(const KdeModel& model, std::span<const double> x);

// Scott's rule with a scalar bandwidth: h = n^(-1/(d+4)) * mean per-
// coordinate standard deviation. Degenerate samples (n < 2 or zero
// spread) fall back to h = 1.
double scott_bandwidth(const std::vector<std::vector<double>>& sample);

struct BandwidthRule {
    enum class Kind {
        scott,        // per-slice adaptive (confounds density with n across slices)
        scott_global, // Scott's rule over all embedded corpus documents, computed once
        fixed,        // fixed:<h> — recommended for cross-slice comparability
    };
    Kind kind = Kind::scott;
    double value = 0.0;

    static BandwidthRule parse(const std::string& text);  // "scott" | "scott-global" | "fixed:<h>"
    std::string str() const;
};

struct EdeTrajectory {
    std::string reference_doc;
    std::string start_slice;  // slice containing the reference's publication year
    std::vector<std::pair<std::string, double>> points;  // (slice id, density)
};

struct TrajectoryConfig {
    BandwidthRule bandwidth;
    KernelMode mode = KernelMode::as_written;
};

// Density of each slice's documents around one fixed reference document,
// from the reference's publication slice onward. The reference vector is
// part of every slice's sample exactly once (deduplicated by doc id when
// the reference belongs to the slice). Throws if the reference has no
// embedding or its year falls outside the sliced range.
EdeTrajectory ede_trajectory(const std::vector<corpus::TimeSlice>& slices,
                             const EmbeddingStore& store, const corpus::Document& reference,
                             const TrajectoryConfig& config);

struct MedianPoint {
    std::string slice_id;
    double median = 0.0;
    double mean = 0.0;       // secondary aggregate
    std::size_t count = 0;   // trajectories defined at this slice
};

// Per-slice median over every trajectory defined at that slice (those
// whose start slice is at or before it); even counts use the midpoint of
// the two central values. Throws on empty input.
std::vector<MedianPoint> median_series(const std::vector<EdeTrajectory>& trajectories,
                                       const std::vector<std::string>& slice_order);

struct EdeBatch {
    std::vector<EdeTrajectory> trajectories;
    std::vector<MedianPoint> median;
    std::vector<std::string> skipped;  // reference ids without embeddings
    double global_bandwidth = 0.0;     // resolved value for scott-global / fixed
};

// Trajectories for every reference document (parallel across references)
// plus the median series. References without embeddings are skipped and
// reported rather than failing the batch.
EdeBatch ede_batch(const std::vector<corpus::TimeSlice>& slices, const EmbeddingStore& store,
                   const std::vector<const corpus::Document*>& references,
                   const TrajectoryConfig& config, unsigned parallelism);

}  // namespace corpusdrift::embedding
